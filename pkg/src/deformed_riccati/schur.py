"""Schur complement on the physical sheet and across the band.

``M(z, Gamma) = A - z - sum_j w_j K'(mu_j) / (mu_j - z)``.  With the band
itself as contour this is the physical-sheet Schur complement; with a
deformed contour it is its continuation into the region between the band
and the contour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contour import Contour, SampledContour, region_membership
from .errors import CountMismatch, NotInOmega, TooCloseToContour
from .model import FriedrichsModel, eval_k_prime
from .solver import LEFT, RIGHT, OperatorRoot, _check_same, _resolvents

JUMP_TOL = 1e-8


def _guard(sampled: SampledContour, z) -> None:
    dist = float(np.min(sampled.distance_to(z)))
    if dist < sampled.guard_distance:
        raise TooCloseToContour(
            f"z = {complex(np.ravel(z)[np.argmin(np.ravel(sampled.distance_to(z)))])} is "
            f"{dist:.3e} from the contour (need >= {sampled.guard_distance:.3e})")


def _cauchy_terms(model: FriedrichsModel, sampled: SampledContour, z: complex):
    """``w_j K'(mu_j) / (mu_j - z)`` stacked over nodes."""
    kp = eval_k_prime(model, sampled.nodes)
    return (sampled.weights / (sampled.nodes - z))[:, None, None] * kp


def schur_complement(model: FriedrichsModel, sampled: SampledContour, z: complex) -> np.ndarray:
    z = complex(z)
    _guard(sampled, z)
    n = model.n
    return np.asarray(model.a_matrix) - z * np.eye(n) - _cauchy_terms(model, sampled, z).sum(axis=0)


def schur_derivative(model: FriedrichsModel, sampled: SampledContour, z: complex) -> np.ndarray:
    """``dM/dz = -I - sum_j w_j K'(mu_j) / (mu_j - z)^2``."""
    z = complex(z)
    kp = eval_k_prime(model, sampled.nodes)
    coef = sampled.weights / (sampled.nodes - z) ** 2
    return -np.eye(model.n) - np.einsum("j,jab->ab", coef, kp)


@dataclass(frozen=True)
class JumpCheck:
    z: complex
    jump: np.ndarray
    expected: np.ndarray
    error: float
    passed: bool


def continuation_jump(model: FriedrichsModel, sampled_interval: SampledContour,
                      sampled_gamma: SampledContour, z: complex) -> JumpCheck:
    """Compare ``M(z, Gamma) - M(z)`` with ``2 pi i sign K'(z)`` inside the region."""
    z = complex(z)
    contour = sampled_gamma.contour
    if contour.sign == 0 or region_membership(contour, z) != "inside":
        raise NotInOmega(f"{z} is not inside the region enclosed by the band and the contour")
    jump = schur_complement(model, sampled_gamma, z) - schur_complement(model, sampled_interval, z)
    expected = 2j * math.pi * contour.sign * eval_k_prime(model, z)
    err = float(np.linalg.norm(jump - expected, 2))
    return JumpCheck(z, jump, expected, err, err <= JUMP_TOL)


def factor_w(model: FriedrichsModel, sampled: SampledContour, root: OperatorRoot, z: complex,
             side: str = RIGHT) -> np.ndarray:
    """Left factor of ``M(z) = W(z)(Z - z)`` for the right root, or right
    factor of ``M(z) = (Zt - z) Wt(z)`` for the left root."""
    z = complex(z)
    _check_same(sampled, root.certificate.contour_hash)
    if root.side != side:
        raise ValueError(f"factor_w(side={side!r}) needs a {side} root")
    _guard(sampled, z)
    terms = _cauchy_terms(model, sampled, z)
    res = _resolvents(np.asarray(root.z_matrix), sampled.nodes)
    if side == RIGHT:
        return np.eye(model.n) - np.einsum("jab,jbc->ac", terms, res)
    return np.eye(model.n) - np.einsum("jab,jbc->ac", res, terms)


def default_z_grid(model: FriedrichsModel, sampled: SampledContour, d: float,
                   n_circle: int = 32, n_random: int = 16, seed: int = 0) -> np.ndarray:
    """Circles of radius ``d/2`` around each eigenvalue of ``A`` plus random
    points of the enclosed region that respect the guard distance."""
    eigs = np.linalg.eigvalsh(model.a_matrix)
    theta = 2 * math.pi * np.arange(n_circle) / n_circle
    pts = [e + 0.5 * d * np.exp(1j * theta) for e in eigs]
    pts.append(random_interior_points(sampled.contour, n_random, seed,
                                      guards=(sampled,)))
    return np.concatenate(pts)


def random_interior_points(contour: Contour, count: int, seed: int = 0, guards=()) -> np.ndarray:
    """``count`` reproducible points inside the region, each at least the
    guard distance away from every sampled contour in ``guards`` and from
    the band."""
    rng = np.random.default_rng(seed)
    pts = contour.dense_points(1024)
    lo_re, hi_re = contour.alpha, contour.beta
    lo_im, hi_im = sorted((0.0, float(pts.imag[np.argmax(np.abs(pts.imag))])))
    margin = max([g.guard_distance for g in guards], default=0.0)
    out = []
    for _ in range(200 * count):
        z = complex(rng.uniform(lo_re, hi_re), rng.uniform(lo_im, hi_im))
        if abs(z.imag) < margin or any(float(g.distance_to(z)) < 1.5 * g.guard_distance for g in guards):
            continue
        if region_membership(contour, z) == "inside":
            out.append(z)
            if len(out) == count:
                return np.array(out)
    raise RuntimeError("could not place enough interior points")


@dataclass(frozen=True)
class FactorizationCheck:
    right_residual: float
    left_residual: float
    points: int

    @property
    def max_residual(self) -> float:
        return max(self.right_residual, self.left_residual)


def verify_factorization(model: FriedrichsModel, sampled: SampledContour, roots, z_grid=None,
                         d: float | None = None) -> FactorizationCheck:
    """Largest residual of both factorizations over a grid of points."""
    right, left = roots
    if z_grid is None:
        if d is None:
            from .contour import contour_distance
            d = contour_distance(sampled.contour, np.linalg.eigvalsh(model.a_matrix))
        z_grid = default_z_grid(model, sampled, d)
    n = model.n
    eye = np.eye(n)
    zr = np.asarray(right.z_matrix)
    zl = np.asarray(left.z_matrix)
    worst_r = worst_l = 0.0
    for z in np.ravel(z_grid):
        m = schur_complement(model, sampled, z)
        wr = factor_w(model, sampled, right, z, RIGHT)
        wl = factor_w(model, sampled, left, z, LEFT)
        worst_r = max(worst_r, float(np.linalg.norm(m - wr @ (zr - z * eye), 2)))
        worst_l = max(worst_l, float(np.linalg.norm(m - (zl - z * eye) @ wl, 2)))
    return FactorizationCheck(worst_r, worst_l, int(np.size(z_grid)))


# --------------------------------------------------------------- resonances

@dataclass(frozen=True)
class Resonance:
    value: complex
    classification: str  # resonance | boundary | exterior


@dataclass(frozen=True)
class ResonanceSet:
    entries: tuple
    sign: int
    contour_hash: str

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.entries], dtype=complex)

    def inside(self) -> np.ndarray:
        return np.array([e.value for e in self.entries if e.classification == "resonance"],
                        dtype=complex)


_LABELS = {"inside": "resonance", "boundary": "boundary", "outside": "exterior"}


def resonances(root: OperatorRoot, contour: Contour) -> ResonanceSet:
    """Eigenvalues of the right root labelled by their position relative to
    the region between the band and the contour."""
    if root.certificate.contour_hash != contour.hash:
        raise ValueError("root was not computed on this contour")
    eigs = np.linalg.eigvals(np.asarray(root.z_matrix))
    eigs = eigs[np.lexsort((eigs.imag, eigs.real))]
    entries = tuple(Resonance(complex(e), _LABELS[region_membership(contour, e)]) for e in eigs)
    return ResonanceSet(entries, contour.sign, contour.hash)


# ------------------------------------------------------ determinant oracle

def _det(model, sampled, z):
    return complex(np.linalg.det(schur_complement(model, sampled, z)))


def _arg_change(f, z0: complex, z1: complex, n0: int = 64, max_depth: int = 30) -> float:
    """Total change of ``arg f`` along the segment ``z0 -> z1``, refining
    until consecutive samples differ in phase by less than 0.5 rad."""
    ts = list(np.linspace(0.0, 1.0, n0 + 1))
    vals = [f(z0 + (z1 - z0) * t) for t in ts]
    total = 0.0
    stack = [(ts[i], ts[i + 1], vals[i], vals[i + 1], 0) for i in range(n0)][::-1]
    while stack:
        ta, tb, fa, fb, depth = stack.pop()
        step = float(np.angle(fb / fa))
        if abs(step) > 0.5 and depth < max_depth:
            tm = 0.5 * (ta + tb)
            fm = f(z0 + (z1 - z0) * tm)
            stack.append((tm, tb, fm, fb, depth + 1))
            stack.append((ta, tm, fa, fm, depth + 1))
            continue
        total += step
    return total


def count_zeros(f, box) -> int:
    """Argument-principle count of zeros of ``f`` inside a rectangle
    ``(re_min, re_max, im_min, im_max)``."""
    x0, x1, y0, y1 = box
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    turns = sum(_arg_change(f, a, b) for a, b in zip(corners, corners[1:] + corners[:1]))
    turns /= 2 * math.pi
    if not math.isfinite(turns):
        raise CountMismatch("f vanishes on the box boundary")
    count = round(turns)
    if abs(turns - count) > 1e-3:
        raise CountMismatch(f"winding number {turns:.6f} is not close to an integer")
    return int(count)


def _newton(model, sampled, z0: complex, tol: float = 1e-12, max_iter: int = 100) -> complex:
    """Newton iteration for ``det M`` using Jacobi's formula."""
    z = complex(z0)
    for _ in range(max_iter):
        m = schur_complement(model, sampled, z)
        if np.linalg.det(m) == 0:
            break
        step = 1.0 / complex(np.trace(np.linalg.solve(m, schur_derivative(model, sampled, z))))
        z -= step
        if abs(step) <= 1e-14 * max(1.0, abs(z)):
            break
    if not abs(_det(model, sampled, z)) <= tol:
        raise CountMismatch(f"Newton refinement stalled near {z}")
    return z


def det_zero_oracle(model: FriedrichsModel, sampled: SampledContour, search_box,
                    min_size: float = 1e-4) -> list:
    """Zeros of ``det M(., Gamma)`` inside ``search_box``.

    The box is split into quadrants until each piece holds at most one zero
    (by the argument principle); isolated zeros are then polished by Newton
    iteration started at the piece's centre.  Raises :class:`CountMismatch`
    when the refined zeros do not account for the total count.
    """
    f = lambda z: _det(model, sampled, z)  # noqa: E731
    total = count_zeros(f, search_box)
    zeros = []
    work = [(tuple(search_box), total)]
    while work:
        box, cnt = work.pop()
        if cnt == 0:
            continue
        x0, x1, y0, y1 = box
        centre = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
        if cnt == 1 or max(x1 - x0, y1 - y0) < min_size:
            z = _newton(model, sampled, centre)
            zeros.extend([z] * cnt)
            continue
        subs = _split(f, box, cnt)
        work.extend(subs)
    zeros.sort(key=lambda z: (round(z.real, 10), z.imag))
    if len(zeros) != total:
        raise CountMismatch(f"argument principle counts {total} zeros, found {len(zeros)}")
    return zeros


def _split(f, box, cnt):
    """Quadrisect a box, nudging the cut lines if a zero sits on one."""
    x0, x1, y0, y1 = box
    for shift in (0.0, 0.0123, -0.0271, 0.0377):
        xm = x0 + (0.5 + shift) * (x1 - x0)
        ym = y0 + (0.5 + shift) * (y1 - y0)
        quads = [(x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)]
        try:
            counts = [count_zeros(f, q) for q in quads]
        except CountMismatch:
            continue
        if sum(counts) == cnt:
            return list(zip(quads, counts))
    raise CountMismatch("could not separate zeros by subdivision")
