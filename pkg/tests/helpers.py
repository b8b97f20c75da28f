"""Shared fixtures, random model generation and frozen oracle values."""

from __future__ import annotations

import numpy as np

from deformed_riccati.contour import admissibility, polyline, sample_contour, semi_ellipse
from deformed_riccati.model import FriedrichsModel, Interval, MatrixPolynomial

BAND = Interval(0.0, 2.0)

# High-precision values computed once with mpmath (findroot on the closed-form
# continued Schur complement, adaptive quadrature for E-norms), independent of
# the package.  The rank-one closed form is
#   1 - z - g^2 (log(2 - z) - log(-z)) - 2 pi i g^2   (principal logs, sign -1).
ORACLE = {
    "fix1_root": 1 - 0.032056843930251486j,
    "fix1_root_g005": 1 - 0.007893448054589245j,
    "fix1_enorm_x": 0.18091820654253374,
    "fix1_enorm_bound": 0.18319373006420459,
    "fix1_r_bound": 0.032470243231404503,
    "fix1_abs_x_at_1_minus_i": 0.10331185191291765,
    "fix1_m_phys_1_plus_i": -1.0157079632679490j,
    "fix2_eigs": (0.90058487147952058 - 0.032393740607321137j,
                  1.3037668565039834 - 0.033166011187669628j),
    "poly_d": 0.57346234436332829,
    "poly_vk": 0.024413111231467406,
}


def fix1(g: float = 0.1) -> FriedrichsModel:
    return FriedrichsModel(BAND, np.array([[1.0]]), MatrixPolynomial.constant([[g]]),
                           MatrixPolynomial.constant([[g]]))


def fix2(g: float = 0.1) -> FriedrichsModel:
    b = g * np.ones((2, 1))
    return FriedrichsModel(BAND, np.diag([0.9, 1.3]), MatrixPolynomial.constant(b),
                           MatrixPolynomial.constant(b.T))


def lower_semicircle():
    return semi_ellipse(BAND, 1.0, -1)


def fix1_polyline():
    return polyline(BAND, [1 - 0.7j], -1)


def random_hermitian(rng, n, lo=0.25, hi=1.75):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    eig = rng.uniform(lo, hi, size=n)
    a = (q * eig) @ q.conj().T
    return (a + a.conj().T) / 2


def random_contour(rng, sign=None):
    sign = sign if sign is not None else int(rng.choice([-1, 1]))
    if rng.random() < 0.5:
        return semi_ellipse(BAND, float(rng.uniform(0.4, 1.2)), sign)
    k = int(rng.integers(1, 4))
    re = np.sort(rng.uniform(0.15, 1.85, size=k))
    im = sign * rng.uniform(0.3, 1.0, size=k)
    return polyline(BAND, list(re + 1j * im), sign)


def random_admissible_pair(rng, order=32, panels=4, fill=None):
    """Random (model, sampled contour) with ``enorm_b * enorm_c = fill * d^2/4``,
    so both smallness conditions hold.  n <= 4, m <= 2, degree <= 2."""
    n, m, deg = int(rng.integers(1, 5)), int(rng.integers(1, 3)), int(rng.integers(0, 3))
    a = random_hermitian(rng, n)
    shape_b, shape_c = (deg + 1, n, m), (deg + 1, m, n)
    b = rng.normal(size=shape_b) + 1j * rng.normal(size=shape_b)
    c = rng.normal(size=shape_c) + 1j * rng.normal(size=shape_c)
    if rng.random() < 0.3:  # self-adjoint case C = B*
        c = np.conj(np.transpose(b, (0, 2, 1)))
    unit = FriedrichsModel(BAND, a, MatrixPolynomial(b), MatrixPolynomial(c))
    sampled = sample_contour(random_contour(rng), order, panels)
    rep = admissibility(unit, sampled)
    d, eb, ec = rep.d, rep.enorm_b, rep.enorm_c
    fill = fill if fill is not None else float(rng.uniform(0.05, 0.9))
    s = np.sqrt(fill * d * d / 4 / (eb * ec))
    return unit.scaled(s), sampled


# criterion number -> (passed, detail); filled by test_acceptance, printed by conftest
CRITERIA: dict = {}


def record(number: int, passed: bool, detail: str) -> bool:
    CRITERIA[number] = (bool(passed), detail)
    print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
    return bool(passed)
