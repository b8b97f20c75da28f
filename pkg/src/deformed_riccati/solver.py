"""Operator roots of the continued Schur complement and the deformed
Riccati solutions built from them.

The right root solves ``Z = A + sum_j w_j K'(mu_j) (Z - mu_j)^{-1}`` and the
left root solves ``Zt = A + sum_j w_j (Zt - mu_j)^{-1} K'(mu_j)``, both by
plain fixed-point iteration started at ``A``.  The map is a contraction on
the ball ``||Z - A|| <= r`` whenever ``V_K < d^2/4``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .contour import (AdmissibilityReport, SampledContour, admissibility, build_contour,
                      sample_contour)
from .errors import (BoundViolation, ContourMismatch, NoAdmissibleContour, NoConvergence,
                     NotContractive, SingularResolvent, WrongSpecialCase)
from .model import FriedrichsModel, eval_k_prime

RIGHT, LEFT = "right", "left"
SINGULAR_GAP = 1e-12
# updates below this size are dominated by rounding; their ratios are not
# meaningful contraction estimates
_RATIO_FLOOR = 1e-7


@dataclass(frozen=True)
class RootCertificate:
    iterations: int
    final_update_norm: float
    fixed_point_residual: float
    r_bound: float
    contraction_bound: float
    observed_contraction: float
    contour_hash: str
    certified: bool
    update_history: tuple = field(repr=False, default=())


@dataclass(frozen=True, eq=False)
class OperatorRoot:
    z_matrix: np.ndarray
    side: str
    sign: int
    certificate: RootCertificate

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.z_matrix)


@dataclass(frozen=True, eq=False)
class RiccatiSolutionSampled:
    side: str  # "x" or "y"
    node_values: np.ndarray
    enorm: float
    enorm_bound: float
    contour_hash: str

    @property
    def within_bound(self) -> bool:
        return not (self.enorm > self.enorm_bound + 1e-10)


def _resolvents(z: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Stack of ``(Z - mu_j)^{-1}``; refuses nodes too close to ``spec(Z)``."""
    eigs = np.linalg.eigvals(z)
    gap = np.min(np.abs(eigs[:, None] - nodes[None, :]))
    if gap < SINGULAR_GAP:
        raise SingularResolvent(f"node within {gap:.2e} of an eigenvalue of the iterate")
    n = z.shape[0]
    shifted = z[None, :, :] - nodes[:, None, None] * np.eye(n)
    return np.linalg.inv(shifted)


def _root_map(side: str, a: np.ndarray, kp: np.ndarray, weights: np.ndarray, nodes: np.ndarray):
    if side == RIGHT:
        def step(z):
            return a + np.einsum("j,jab,jbc->ac", weights, kp, _resolvents(z, nodes))
    elif side == LEFT:
        def step(z):
            return a + np.einsum("j,jab,jbc->ac", weights, _resolvents(z, nodes), kp)
    else:
        raise ValueError(f"side must be {RIGHT!r} or {LEFT!r}")
    return step


def solve_operator_root(model: FriedrichsModel, sampled: SampledContour, side: str = RIGHT,
                        tol: float = 1e-12, max_iter: int = 500, force: bool = False,
                        report: AdmissibilityReport | None = None) -> OperatorRoot:
    """Iterate the root equation from ``Z_0 = A`` to a fixed point.

    Stops once the update norm is at most ``tol`` and the recomputed
    fixed-point residual is at most ``10 * tol``.  Without ``force`` the
    contraction condition must hold; forced runs are labelled uncertified.
    """
    if sampled.contour.sign == 0:
        raise NotContractive("the undeformed band meets the spectrum of A")
    report = report or admissibility(model, sampled)
    if not report.pass_vk and not force:
        raise NotContractive(
            f"V_K = {report.v_k:.6g} is not below d^2/4 = {report.d ** 2 / 4:.6g}")

    a = np.array(model.a_matrix)
    kp = eval_k_prime(model, sampled.nodes)
    step = _root_map(side, a, kp, sampled.weights, sampled.nodes)

    z = a
    history = []
    for it in range(1, max_iter + 1):
        z_next = step(z)
        update = float(np.linalg.norm(z_next - z, 2))
        history.append(update)
        z = z_next
        if update <= tol:
            residual = float(np.linalg.norm(step(z) - z, 2))
            if residual <= 10 * tol:
                break
    else:
        raise NoConvergence(f"no convergence in {max_iter} iterations "
                            f"(last update {history[-1]:.3e})")

    ratios = [u1 / u0 for u0, u1 in zip(history[:-1], history[1:]) if u0 > _RATIO_FLOOR]
    cert = RootCertificate(
        iterations=it,
        final_update_norm=update,
        fixed_point_residual=residual,
        r_bound=report.r_bound,
        contraction_bound=report.contraction_bound,
        observed_contraction=max(ratios, default=0.0),
        contour_hash=sampled.contour_hash,
        certified=bool(report.pass_vk),
        update_history=tuple(history),
    )
    z.setflags(write=False)
    return OperatorRoot(z, side, sampled.contour.sign, cert)


# ------------------------------------------------------- Riccati solutions

def _check_same(sampled: SampledContour, *hashes: str):
    for h in hashes:
        if h != sampled.contour_hash:
            raise ContourMismatch("inputs were computed on a different contour")


def x_bound(report: AdmissibilityReport) -> float:
    """Upper bound for the E-norm of X (``nan`` if the bound does not apply)."""
    if not report.pass_hyp2:
        return math.nan
    prod = report.enorm_b * report.enorm_c
    return report.enorm_c / (report.d / 2 + math.sqrt(report.d ** 2 / 4 - prod))


def y_bound(report: AdmissibilityReport) -> float:
    if not report.pass_hyp2:
        return math.nan
    prod = report.enorm_b * report.enorm_c
    return report.enorm_b / (report.d / 2 + math.sqrt(report.d ** 2 / 4 - prod))


def _enorm(values: np.ndarray, arc_weights: np.ndarray) -> float:
    norms = np.linalg.norm(values, ord=2, axis=(1, 2))
    return math.sqrt(float(np.dot(arc_weights, norms ** 2)))


def _finish(side, values, sampled, bound) -> RiccatiSolutionSampled:
    values.setflags(write=False)
    sol = RiccatiSolutionSampled(side, values, _enorm(values, sampled.arc_weights), bound,
                                 sampled.contour_hash)
    if not sol.within_bound:
        raise BoundViolation(f"E-norm {sol.enorm:.6g} exceeds bound {bound:.6g}")
    return sol


def eval_x(model: FriedrichsModel, root: OperatorRoot, lam) -> np.ndarray:
    """``c(lam) (Z - lam)^{-1}`` at a scalar or an array of points."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    res = _resolvents(np.asarray(root.z_matrix), lam)
    out = model.c_poly(lam) @ res
    return out


def eval_y(model: FriedrichsModel, left_root: OperatorRoot, lam) -> np.ndarray:
    """``-(Zt - lam)^{-1} b(lam)`` at a scalar or an array of points."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    res = _resolvents(np.asarray(left_root.z_matrix), lam)
    return -(res @ model.b_poly(lam))


def riccati_solution_x(model: FriedrichsModel, sampled: SampledContour, root: OperatorRoot,
                       report: AdmissibilityReport | None = None) -> RiccatiSolutionSampled:
    if root.side != RIGHT:
        raise ValueError("X is built from the right root")
    _check_same(sampled, root.certificate.contour_hash)
    report = report or admissibility(model, sampled)
    return _finish("x", eval_x(model, root, sampled.nodes), sampled, x_bound(report))


def riccati_solution_y(model: FriedrichsModel, sampled: SampledContour, left_root: OperatorRoot,
                       report: AdmissibilityReport | None = None) -> RiccatiSolutionSampled:
    if left_root.side != LEFT:
        raise ValueError("Y is built from the left root")
    _check_same(sampled, left_root.certificate.contour_hash)
    report = report or admissibility(model, sampled)
    return _finish("y", eval_y(model, left_root, sampled.nodes), sampled, y_bound(report))


def b_times_x(model, sampled, x: RiccatiSolutionSampled) -> np.ndarray:
    """``B_Gamma X_Gamma = sum_j w_j b(mu_j) x_j`` (an ``n x n`` matrix)."""
    return np.einsum("j,jab,jbc->ac", sampled.weights, model.b_poly(sampled.nodes), x.node_values)


def y_times_c(model, sampled, y: RiccatiSolutionSampled) -> np.ndarray:
    """``Y_Gamma C_Gamma = sum_j w_j y_j c(mu_j)``."""
    return np.einsum("j,jab,jbc->ac", sampled.weights, y.node_values, model.c_poly(sampled.nodes))


def y_times_x(sampled, x: RiccatiSolutionSampled, y: RiccatiSolutionSampled) -> np.ndarray:
    """``Y_Gamma X_Gamma = sum_j w_j y_j x_j``."""
    return np.einsum("j,jab,jbc->ac", sampled.weights, y.node_values, x.node_values)


def riccati_residual(model: FriedrichsModel, sampled: SampledContour,
                     x: RiccatiSolutionSampled, y: RiccatiSolutionSampled):
    """Largest node-wise residuals of the two deformed Riccati equations.

    Returns ``(res_x, res_y)`` where

    * ``res_x = max_j ||x_j A - mu_j x_j + x_j (B X) - c(mu_j)||``
    * ``res_y = max_j ||mu_j y_j - A y_j + (Y C) y_j - b(mu_j)||``
    """
    _check_same(sampled, x.contour_hash, y.contour_hash)
    a = np.asarray(model.a_matrix)
    mu = sampled.nodes[:, None, None]
    xs, ys = x.node_values, y.node_values
    bx = b_times_x(model, sampled, x)
    yc = y_times_c(model, sampled, y)
    rx = xs @ a - mu * xs + xs @ bx - model.c_poly(sampled.nodes)
    ry = mu * ys - a @ ys + yc @ ys - model.b_poly(sampled.nodes)
    res_x = float(np.max(np.linalg.norm(rx, ord=2, axis=(1, 2))))
    res_y = float(np.max(np.linalg.norm(ry, ord=2, axis=(1, 2))))
    return res_x, res_y


def sylvester_closed_form(model: FriedrichsModel, sampled: SampledContour,
                          side: str = "x") -> RiccatiSolutionSampled:
    """Solution of the linear (Sylvester) special case.

    With ``b == 0`` the X equation is linear and ``x(mu) = c(mu)(A - mu)^{-1}``;
    with ``c == 0`` the Y equation is linear and ``y(mu) = -(A - mu)^{-1} b(mu)``.
    """
    a = np.asarray(model.a_matrix)
    report = admissibility(model, sampled)
    res = _resolvents(a, sampled.nodes)
    if side == "x":
        if not model.b_poly.is_zero:
            raise WrongSpecialCase("closed form for X needs b == 0")
        return _finish("x", model.c_poly(sampled.nodes) @ res, sampled, x_bound(report))
    if side == "y":
        if not model.c_poly.is_zero:
            raise WrongSpecialCase("closed form for Y needs c == 0")
        return _finish("y", -(res @ model.b_poly(sampled.nodes)), sampled, y_bound(report))
    raise ValueError("side must be 'x' or 'y'")


# ------------------------------------------------------ contour selection

@dataclass(frozen=True)
class ContourSearchResult:
    best_parameter: object
    best_r: float
    root_delta: float
    admissible: tuple  # (parameter, r) pairs


def optimize_contour_bound(model: FriedrichsModel, family: str, grid: Sequence, sign: int = -1,
                           order: int = 64, panels: int = 4, tol: float = 1e-12) -> ContourSearchResult:
    """Scan a parametric contour family and keep the admissible member with
    the smallest root-ball radius.

    ``family`` is ``"semi_ellipse"`` (grid of depths) or ``"polyline"`` (grid
    of vertex lists).  Also reports the largest pairwise distance between
    the roots computed on the admissible members, which should vanish.
    """
    admissible = []
    roots = []
    for param in grid:
        if family == "semi_ellipse":
            spec = {"kind": "semi_ellipse", "depth": param, "sign": sign}
        elif family == "polyline":
            spec = {"kind": "polyline", "vertices": list(param), "sign": sign}
        else:
            raise ValueError(f"unknown contour family {family!r}")
        sampled = sample_contour(build_contour(model.interval, spec), order, panels)
        rep = admissibility(model, sampled)
        if not rep.pass_vk:
            continue
        admissible.append((param, rep.r_bound))
        roots.append(solve_operator_root(model, sampled, RIGHT, tol=tol, report=rep).z_matrix)
    if not admissible:
        raise NoAdmissibleContour(f"no admissible {family} in the grid")
    best_param, best_r = min(admissible, key=lambda pr: pr[1])
    delta = max((float(np.linalg.norm(z1 - z2, 2)) for z1, z2 in itertools.combinations(roots, 2)),
                default=0.0)
    return ContourSearchResult(best_param, best_r, delta, tuple(admissible))
