"""Dense discretisation of the deformed block operator and checks of its
block diagonalisation.

Quadrature node ``mu_j`` with weight ``w_j`` contributes an ``m``-dimensional
block.  Coordinates are scaled by ``s_j = sqrt(w_j)`` (principal branch) so
that the B- and C-blocks carry ``b(mu_j) s_j`` and ``s_j c(mu_j)``; then
``(B-block)(C-block) = sum_j w_j b(mu_j) c(mu_j)`` and the discrete Schur
complement coincides with :func:`schur.schur_complement`.  Euclidean norms in
these coordinates are ``L^2(|dmu|)`` norms because ``|s_j|^2 = |w_j|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contour import Contour, SampledContour, admissibility, region_membership, sample_contour
from .errors import ContourMismatch, NotContraction
from .model import FriedrichsModel
from .solver import (LEFT, RIGHT, OperatorRoot, RiccatiSolutionSampled, _check_same,
                     riccati_residual, riccati_solution_x, riccati_solution_y,
                     solve_operator_root)

SPLIT_EXCLUSION = 1e-6


@dataclass(frozen=True, eq=False)
class DiscretizedBlockOperator:
    matrix: np.ndarray
    n: int
    m: int
    nodes: np.ndarray
    scales: np.ndarray  # s_j
    contour_hash: str

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def a_block(self):
        return self.matrix[:self.n, :self.n]

    @property
    def b_block(self):
        return self.matrix[:self.n, self.n:]

    @property
    def c_block(self):
        return self.matrix[self.n:, :self.n]

    @property
    def d_block(self):
        return self.matrix[self.n:, self.n:]


def discretize_block_operator(model: FriedrichsModel, sampled: SampledContour) -> DiscretizedBlockOperator:
    n, m, nodes = model.n, model.m, sampled.nodes
    size = n + m * nodes.size
    s = np.sqrt(sampled.weights)
    b = model.b_poly(nodes) * s[:, None, None]          # (N, n, m)
    c = model.c_poly(nodes) * s[:, None, None]          # (N, m, n)
    mat = np.zeros((size, size), dtype=complex)
    mat[:n, :n] = model.a_matrix
    mat[:n, n:] = np.transpose(b, (1, 0, 2)).reshape(n, -1)
    mat[n:, :n] = c.reshape(-1, n)
    mat[n:, n:] = np.diag(np.repeat(nodes, m))
    mat.setflags(write=False)
    return DiscretizedBlockOperator(mat, n, m, nodes, s, sampled.contour_hash)


def _stack_rows(values: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``(N, m, n)`` node values -> ``(mN, n)`` block column scaled by ``s``."""
    return (values * s[:, None, None]).reshape(-1, values.shape[2])


def _stack_cols(values: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``(N, n, m)`` node values -> ``(n, mN)`` block row scaled by ``s``."""
    scaled = values * s[:, None, None]
    return np.transpose(scaled, (1, 0, 2)).reshape(values.shape[1], -1)


def discrete_x(x: RiccatiSolutionSampled, sampled: SampledContour) -> np.ndarray:
    return _stack_rows(x.node_values, np.sqrt(sampled.weights))


def discrete_y(y: RiccatiSolutionSampled, sampled: SampledContour) -> np.ndarray:
    return _stack_cols(y.node_values, np.sqrt(sampled.weights))


def assemble_q(x: RiccatiSolutionSampled, y: RiccatiSolutionSampled, model: FriedrichsModel,
               sampled: SampledContour):
    """Return ``(Q, Z_D)`` with ``Q = [[0, Y], [X, 0]]`` and ``Z_D = D + C Y``."""
    if not (x.contour_hash == y.contour_hash == sampled.contour_hash):
        raise ContourMismatch("X and Y must come from the sampled contour")
    op = discretize_block_operator(model, sampled)
    n = model.n
    xd, yd = discrete_x(x, sampled), discrete_y(y, sampled)
    q = np.zeros_like(op.matrix)
    q[:n, n:] = yd
    q[n:, :n] = xd
    z_d = op.d_block + op.c_block @ yd
    return q, z_d


@dataclass(frozen=True)
class DiagonalizationReport:
    q_norm_product: float
    xy_norm: float
    diag_residual_plus: float
    diag_residual_minus: float
    similarity_residual: float
    graph_residual: float
    md_factorization_residual: float
    spectral_split_delta: float
    riccati_residual: float
    thresholds: dict

    def passed(self) -> dict:
        t = self.thresholds
        return {
            "diag_residual_plus": self.diag_residual_plus <= t["diagonalization"],
            "diag_residual_minus": self.diag_residual_minus <= t["diagonalization"],
            "similarity_residual": self.similarity_residual <= t["diagonalization"],
            "md_factorization_residual": self.md_factorization_residual <= t["diagonalization"],
            "spectral_split_delta": self.spectral_split_delta <= t["spectral_split"],
            "graph_residual": self.graph_residual <= t["graph_factor"] * self.riccati_residual,
            "q_norm_product": self.q_norm_product < 1.0,
        }


def _hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.ravel(a), np.ravel(b)
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        return math.inf
    dist = np.abs(a[:, None] - b[None, :])
    return float(max(dist.min(axis=1).max(), dist.min(axis=0).max()))


def _md_test_points(model: FriedrichsModel, d: float, count: int = 8) -> np.ndarray:
    eigs = np.linalg.eigvalsh(model.a_matrix)
    theta = 2 * math.pi * (np.arange(count) + 0.5) / count
    return eigs[np.arange(count) % eigs.size] + 0.25 * d * np.exp(1j * theta)


def verify_diagonalization(model: FriedrichsModel, sampled: SampledContour, roots,
                           x: RiccatiSolutionSampled, y: RiccatiSolutionSampled,
                           thresholds: dict | None = None) -> DiagonalizationReport:
    """Residuals of both block diagonalisations and of the related identities.

    ``roots`` is ``(right_root, left_root)``; ``x`` must come from the right
    root and ``y`` from the left root, all on the same sampled contour.
    """
    right, left = roots
    _check_same(sampled, right.certificate.contour_hash, left.certificate.contour_hash,
                x.contour_hash, y.contour_hash)
    thresholds = {"diagonalization": 1e-7, "spectral_split": 1e-6, "graph_factor": 10.0,
                  **(thresholds or {})}
    n = model.n
    op = discretize_block_operator(model, sampled)
    L = op.matrix
    xd, yd = discrete_x(x, sampled), discrete_y(y, sampled)
    za, zt = np.asarray(right.z_matrix), np.asarray(left.z_matrix)
    yx = yd @ xd
    xy_norm = float(np.linalg.norm(xd @ yd, 2))
    if xy_norm >= 1.0:
        raise NotContraction(f"||XY|| = {xy_norm:.6g} >= 1")

    size = op.size
    eye = np.eye(size)
    q = np.zeros_like(L)
    q[:n, n:] = yd
    q[n:, :n] = xd
    z_d = op.d_block + op.c_block @ yd
    zt_d = op.d_block - xd @ op.b_block
    diag_plus = np.zeros_like(L)
    diag_plus[:n, :n] = za
    diag_plus[n:, n:] = z_d
    diag_minus = np.zeros_like(L)
    diag_minus[:n, :n] = zt
    diag_minus[n:, n:] = zt_d

    res_plus = float(np.linalg.norm(L @ (eye + q) - (eye + q) @ diag_plus, 2))
    res_minus = float(np.linalg.norm((eye - q) @ L - diag_minus @ (eye - q), 2))
    eye_n = np.eye(n)
    res_sim = float(np.linalg.norm(zt @ (eye_n - yx) - (eye_n - yx) @ za, 2))

    graph = np.vstack([eye_n, xd])
    graph_res = float(np.max(np.linalg.norm(L @ graph - graph @ za, axis=0)))

    d = admissibility(model, sampled).d
    a = np.asarray(model.a_matrix)
    eye_d = np.eye(size - n)
    md_res = 0.0
    for z in _md_test_points(model, d):
        ra = np.linalg.inv(a - z * eye_n)
        m_d = op.d_block - z * eye_d - op.c_block @ ra @ op.b_block
        w_d = eye_d - op.c_block @ ra @ yd
        md_res = max(md_res, float(np.linalg.norm(m_d - w_d @ (z_d - z * eye_d), 2)))

    split = _split_delta(L, za, z_d, sampled.contour)
    ric = max(riccati_residual(model, sampled, x, y))
    return DiagonalizationReport(
        q_norm_product=x.enorm * y.enorm,
        xy_norm=xy_norm,
        diag_residual_plus=res_plus,
        diag_residual_minus=res_minus,
        similarity_residual=res_sim,
        graph_residual=graph_res,
        md_factorization_residual=md_res,
        spectral_split_delta=split,
        riccati_residual=ric,
        thresholds=thresholds,
    )


def _split_delta(L, za, z_d, contour: Contour) -> float:
    """Hausdorff distance between ``spec(L)`` and ``spec(Z_A) u spec(Z_D)``,
    ignoring points within 1e-6 of the contour on either side."""
    ev_l = np.linalg.eigvals(L)
    ev_parts = np.concatenate([np.linalg.eigvals(za), np.linalg.eigvals(z_d)])
    keep_l = ev_l[contour.approx_distance(ev_l) >= SPLIT_EXCLUSION]
    keep_p = ev_parts[contour.approx_distance(ev_parts) >= SPLIT_EXCLUSION]
    # each kept point is compared with the full opposite set, so a point
    # excluded on one side cannot create a spurious mismatch
    worst = 0.0
    if keep_l.size:
        worst = max(worst, float(np.abs(keep_l[:, None] - ev_parts[None, :]).min(axis=1).max()))
    if keep_p.size:
        worst = max(worst, float(np.abs(keep_p[:, None] - ev_l[None, :]).min(axis=1).max()))
    return worst


@dataclass(frozen=True)
class IndependenceResult:
    root_delta: float
    resonance_delta: float
    roots: tuple


def contour_independence(model: FriedrichsModel, contour1: Contour, contour2: Contour,
                         order: int = 64, panels: int = 4, tol: float = 1e-12) -> IndependenceResult:
    """Solve the right root on two contours of the same sign and compare
    roots and the resonances lying in both enclosed regions."""
    if contour1.sign != contour2.sign or contour1.sign == 0:
        raise ValueError("contours must be deformed into the same half-plane")
    roots = []
    for c in (contour1, contour2):
        roots.append(solve_operator_root(model, sample_contour(c, order, panels), RIGHT, tol=tol))
    delta = float(np.linalg.norm(np.asarray(roots[0].z_matrix) - np.asarray(roots[1].z_matrix), 2))

    def common(root):
        ev = np.linalg.eigvals(np.asarray(root.z_matrix))
        return np.array([e for e in ev
                         if region_membership(contour1, e) == "inside"
                         and region_membership(contour2, e) == "inside"], dtype=complex)

    return IndependenceResult(delta, _hausdorff(common(roots[0]), common(roots[1])), tuple(roots))


def full_pipeline(model: FriedrichsModel, sampled: SampledContour, tol: float = 1e-12):
    """Convenience: both roots, X, Y and the diagonalisation report."""
    rep = admissibility(model, sampled)
    right = solve_operator_root(model, sampled, RIGHT, tol=tol, report=rep)
    left = solve_operator_root(model, sampled, LEFT, tol=tol, report=rep)
    x = riccati_solution_x(model, sampled, right, rep)
    y = riccati_solution_y(model, sampled, left, rep)
    return right, left, x, y, verify_diagonalization(model, sampled, (right, left), x, y)
