import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deformed_riccati import contour as ct
from deformed_riccati.errors import InvalidContour

from helpers import BAND, ORACLE, fix1, fix1_polyline, lower_semicircle, random_contour


def test_semi_ellipse_with_half_width_is_circle():
    c = lower_semicircle()
    assert isinstance(c.segments[0], ct.CircularArc)
    assert abs(c.segments[0].point(0.5) - (1 - 1j)) < 1e-15
    assert abs(c.segments[0].point(0.0)) < 1e-15 and abs(c.segments[-1].point(1.0) - 2) < 1e-15


def test_polyline_construction_and_wrong_half_plane():
    c = fix1_polyline()
    assert len(c.segments) == 2
    assert c.segments[0].z1 == 1 - 0.7j
    with pytest.raises(InvalidContour):
        ct.polyline(BAND, [1 + 0.5j], -1)


def test_build_contour_spec():
    c = ct.build_contour(BAND, {"kind": "polyline", "vertices": [[1.0, -0.7]], "sign": -1})
    assert c.hash == fix1_polyline().hash
    assert ct.build_contour(BAND, {"kind": "interval"}).sign == 0
    with pytest.raises(InvalidContour):
        ct.build_contour(BAND, {"kind": "spiral"})


def test_self_intersecting_polyline_rejected():
    with pytest.raises(InvalidContour):
        ct.polyline(BAND, [1.5 - 0.5j, 0.5 - 0.5j], -1)


def test_interval_weights_exact():
    s = ct.sample_contour(ct.interval_contour(BAND), order=4, panels_per_segment=1)
    assert abs(s.weights.sum() - 2) < 1e-14


def test_semicircle_weights_and_arc_length():
    coarse = ct.sample_contour(lower_semicircle(), 64, 4)
    fine = ct.sample_contour(lower_semicircle(), 128, 4)
    assert abs(coarse.weights.sum() - 2) < 1e-10
    assert abs(coarse.arc_weights.sum() - math.pi) < 1e-12
    assert abs(fine.arc_weights.sum() - coarse.arc_weights.sum()) <= 1e-10


def test_contour_distance_examples():
    assert abs(ct.contour_distance(lower_semicircle(), [1.0]) - 1.0) < 1e-12
    assert abs(ct.contour_distance(fix1_polyline(), [1.0]) - ORACLE["poly_d"]) < 1e-12
    assert ct.contour_distance(ct.interval_contour(BAND), [1.0]) == 0.0


def test_region_membership_examples():
    c = lower_semicircle()
    assert ct.region_membership(c, 1 - 0.5j) == "inside"
    assert ct.region_membership(c, 1 + 0.5j) == "outside"
    assert ct.region_membership(c, 3.0) == "outside"
    assert ct.region_membership(c, 1.0) == "boundary"
    assert ct.region_membership(c, 1 - 1j) == "boundary"


def test_admissibility_fix1():
    rep = ct.admissibility(fix1(), ct.sample_contour(lower_semicircle()))
    assert abs(rep.d - 1) < 1e-12
    assert abs(rep.enorm_b - 0.1 * math.sqrt(math.pi)) < 1e-12
    assert abs(rep.enorm_c - 0.1 * math.sqrt(math.pi)) < 1e-12
    assert abs(rep.v_k - 0.01 * math.pi) < 1e-12
    assert abs(rep.omega - (1 - 0.04 * math.pi)) < 1e-12
    assert rep.pass_vk and rep.pass_hyp2
    assert abs(rep.r_bound - ORACLE["fix1_r_bound"]) < 1e-12


def test_admissibility_fails_at_g03_and_trivial_at_g0():
    s = ct.sample_contour(lower_semicircle())
    rep = ct.admissibility(fix1(0.3), s)
    assert abs(rep.v_k - 0.09 * math.pi) < 1e-12 and not rep.pass_vk
    rep0 = ct.admissibility(fix1(0.0), s)
    assert rep0.v_k == 0 and rep0.enorm_b == 0 and rep0.pass_vk and rep0.pass_hyp2 and rep0.r_bound == 0


def test_polyline_variation():
    rep = ct.admissibility(fix1(), ct.sample_contour(fix1_polyline()))
    assert abs(rep.v_k - ORACLE["poly_vk"]) < 1e-12
    assert rep.pass_vk and rep.v_k < rep.d ** 2 / 4


def test_hash_stable_and_distinct():
    assert lower_semicircle().hash == lower_semicircle().hash
    assert lower_semicircle().hash != lower_semicircle().mirrored().hash
    assert lower_semicircle().mirrored().sign == 1


def test_adaptive_sampling_converges():
    s = ct.sample_adaptive(lower_semicircle(), fix1(), order=8, panels=1, tol=1e-12)
    assert abs(ct.admissibility(fix1(), s).v_k - 0.01 * math.pi) < 1e-12


seeds = st.integers(0, 2 ** 32 - 1)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_weight_sum_is_path_independent(seed):
    s = ct.sample_contour(random_contour(np.random.default_rng(seed)), 32, 4)
    assert abs(s.weights.sum() - 2) < 1e-12


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_variation_below_enorm_product(seed):
    from helpers import random_admissible_pair
    model, s = random_admissible_pair(np.random.default_rng(seed))
    rep = ct.admissibility(model, s)
    assert rep.v_k <= rep.enorm_b * rep.enorm_c * (1 + 1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_r_bound_monotone_and_below_half_d(d, f1, f2):
    v1, v2 = sorted((f1 * d * d / 4, f2 * d * d / 4))
    if v2 >= d * d / 4:
        return
    r1, r2 = ct.r_bound_formula(d, v1), ct.r_bound_formula(d, v2)
    assert r1 <= r2 + 1e-15 and r2 <= d / 2


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_order_doubling_stable_for_cubic_couplings(seed):
    from deformed_riccati.model import FriedrichsModel, MatrixPolynomial
    rng = np.random.default_rng(seed)
    b = rng.normal(size=(4, 2, 1)) * 0.1
    c = rng.normal(size=(4, 1, 2)) * 0.1
    model = FriedrichsModel(BAND, np.diag([0.8, 1.2]), MatrixPolynomial(b), MatrixPolynomial(c))
    contour = random_contour(rng)
    r1 = ct.admissibility(model, ct.sample_contour(contour, 64, 4))
    r2 = ct.admissibility(model, ct.sample_contour(contour, 128, 4))
    for f in ("enorm_b", "enorm_c", "v_k"):
        assert abs(getattr(r1, f) - getattr(r2, f)) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 1.95), st.floats(0.02, 0.95))
def test_membership_of_semicircle_matches_disc(re, frac):
    c = lower_semicircle()
    z = complex(re, -frac * math.sqrt(max(1 - (re - 1) ** 2, 0)))
    if abs(abs(z - 1) - 1) < 1e-6 or abs(z.imag) < 1e-6:
        return
    assert ct.region_membership(c, z) == "inside"
    assert ct.region_membership(c, z.conjugate()) == "outside"
