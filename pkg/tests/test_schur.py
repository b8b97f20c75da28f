import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deformed_riccati import contour as ct, schur, solver
from deformed_riccati.errors import NotInOmega, TooCloseToContour

from helpers import BAND, ORACLE, fix1, fix2, lower_semicircle


@pytest.fixture(scope="module")
def s1():
    return ct.sample_contour(lower_semicircle(), 64, 4)


@pytest.fixture(scope="module")
def band():
    return ct.sample_contour(ct.interval_contour(BAND), 64, 4)


def _roots(model, s):
    return (solver.solve_operator_root(model, s), solver.solve_operator_root(model, s, solver.LEFT))


def test_schur_trivial(s1):
    assert np.array_equal(schur.schur_complement(fix1(0.0), s1, 0.5), [[0.5]])


def test_schur_physical_and_outside(s1, band):
    phys = schur.schur_complement(fix1(), band, 1 + 1j)[0, 0]
    assert abs(phys - ORACLE["fix1_m_phys_1_plus_i"]) < 1e-12
    assert abs(schur.schur_complement(fix1(), s1, 1 + 1j)[0, 0] - phys) < 1e-10


def test_schur_guard(s1):
    with pytest.raises(TooCloseToContour):
        schur.schur_complement(fix1(), s1, 1 - 0.999j)


def test_schur_derivative_by_difference(s1):
    z, h = 1.2 + 0.4j, 1e-6
    fd = (schur.schur_complement(fix2(), s1, z + h) - schur.schur_complement(fix2(), s1, z - h)) / (2 * h)
    assert np.abs(fd - schur.schur_derivative(fix2(), s1, z)).max() < 1e-8


def test_jump_examples(s1, band):
    chk = schur.continuation_jump(fix1(), band, s1, 1 - 0.5j)
    assert chk.passed and abs(chk.jump[0, 0] + 0.02j * math.pi) < 1e-8
    assert schur.continuation_jump(fix1(0.0), band, s1, 1 - 0.5j).error == 0
    chk2 = schur.continuation_jump(fix2(), band, s1, 1 - 0.4j)
    assert chk2.passed
    assert np.allclose(chk2.expected, -2j * math.pi * 0.01 * np.ones((2, 2)))
    with pytest.raises(NotInOmega):
        schur.continuation_jump(fix1(), band, s1, 1 + 0.5j)


def test_factor_w_examples(s1):
    r0 = solver.solve_operator_root(fix1(0.0), s1)
    assert np.array_equal(schur.factor_w(fix1(0.0), s1, r0, 0.3 + 0.2j, solver.RIGHT), [[1.0]])
    root = solver.solve_operator_root(fix1(), s1)
    rep = ct.admissibility(fix1(), s1)
    w = schur.factor_w(fix1(), s1, root, 1.0, solver.RIGHT)
    assert np.linalg.norm(w - 1, 2) <= rep.v_k / (rep.d * (rep.d - rep.r_bound))
    assert np.linalg.norm(np.linalg.inv(w), 2) <= 1 / (1 - rep.v_k / (rep.d ** 2 / 4))


def test_factorization(s1):
    assert schur.verify_factorization(fix1(0.0), s1, _roots(fix1(0.0), s1)).max_residual == 0
    assert schur.verify_factorization(fix1(), s1, _roots(fix1(), s1)).max_residual <= 1e-9
    assert schur.verify_factorization(fix2(), s1, _roots(fix2(), s1)).max_residual <= 1e-8


def test_resonance_examples(s1):
    rs = schur.resonances(solver.solve_operator_root(fix1(0.0), s1), lower_semicircle())
    assert [(e.value, e.classification) for e in rs.entries] == [(1.0, "boundary")]
    rs = schur.resonances(solver.solve_operator_root(fix1(), s1), lower_semicircle())
    assert rs.entries[0].classification == "resonance"
    assert abs(rs.entries[0].value - ORACLE["fix1_root"]) < 1e-12
    g = 0.1
    rs2 = schur.resonances(solver.solve_operator_root(fix2(), s1), lower_semicircle())
    assert len(rs2.inside()) == 2
    for e in rs2.entries:
        assert abs(e.value.imag + math.pi * g * g) <= 10 * math.pi * g ** 4


def test_det_zero_examples(s1):
    assert schur.det_zero_oracle(fix1(0.0), s1, (0.8, 1.2, -0.2, 0.2)) == [1.0]
    (z,) = schur.det_zero_oracle(fix1(), s1, (0.8, 1.2, -0.2, 0.0))
    assert abs(z - ORACLE["fix1_root"]) < 1e-10
    assert schur.det_zero_oracle(fix1(), s1, (0.8, 1.2, 0.05, 0.3)) == []


def test_count_zeros_polynomial():
    f = lambda z: (z - 0.1) * (z + 0.2j) ** 2 * (z - 3)
    assert schur.count_zeros(f, (-1, 1, -1, 1)) == 3


def _closed_form(z, g, sign=-1):
    return 1 - z - g * g * (cmath.log(2 - z) - cmath.log(-z)) + 2j * math.pi * sign * g * g


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 1.8), st.floats(0.05, 0.9))
def test_continued_schur_matches_closed_form(re, frac):
    s = ct.sample_contour(lower_semicircle(), 64, 4)
    z = complex(re, -frac * math.sqrt(1 - (re - 1) ** 2))
    if s.distance_to(z) < s.guard_distance:
        return
    assert abs(schur.schur_complement(fix1(), s, z)[0, 0] - _closed_form(z, 0.1)) < 1e-10


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 0.25))
def test_eigenvalues_within_optimal_ball(g):
    s = ct.sample_contour(lower_semicircle(), 32, 4)
    res = solver.optimize_contour_bound(fix1(g), "semi_ellipse", [0.6, 0.8, 1.0, 1.2], order=32)
    ev = solver.solve_operator_root(fix1(g), s).eigenvalues
    assert np.all(np.abs(ev - 1) <= res.best_r + 1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.5, 1.5), st.floats(0.1, 0.5))
def test_outside_region_sheets_agree(re, im):
    s = ct.sample_contour(lower_semicircle(), 64, 4)
    band = ct.sample_contour(ct.interval_contour(BAND), 64, 4)
    z = complex(re, im)
    assert np.abs(schur.schur_complement(fix2(), s, z) - schur.schur_complement(fix2(), band, z)).max() < 1e-9
