"""Finite-dimensional Friedrichs model.

The band entry acts as multiplication by the spectral variable on
``L^2((alpha, beta) -> C^m)``; the discrete entry is a Hermitian ``n x n``
matrix ``A``.  The couplings are given by matrix polynomials ``b(lam)``
(``n x m``) and ``c(lam)`` (``m x n``) so that they continue analytically
to the whole complex plane, and ``K'(lam) = b(lam) c(lam)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ModelError, NotHermitian, SpectrumNotEmbedded
from .quadrature import composite_rule

HERMITIAN_RTOL = 1e-13


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Interval:
    alpha: float
    beta: float

    def __post_init__(self):
        a, b = float(self.alpha), float(self.beta)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ModelError("interval endpoints must be finite")
        if not a < b:
            raise ModelError(f"need alpha < beta, got ({a}, {b})")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def length(self) -> float:
        return self.beta - self.alpha

    def contains(self, x: float) -> bool:
        return self.alpha < x < self.beta


@dataclass(frozen=True, eq=False)
class MatrixPolynomial:
    """``P(lam) = sum_k coefficients[k] * lam**k`` with matrix coefficients."""

    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=complex)
        if coeffs.ndim == 2:
            coeffs = coeffs[None]
        if coeffs.ndim != 3 or coeffs.shape[0] == 0:
            raise ModelError("coefficients must be a non-empty list of matrices")
        if coeffs.shape[1] == 0 or coeffs.shape[2] == 0:
            raise ModelError("coefficient matrices must be non-empty")
        object.__setattr__(self, "coefficients", _frozen(coeffs))

    @classmethod
    def constant(cls, matrix) -> "MatrixPolynomial":
        return cls(np.atleast_2d(np.asarray(matrix, dtype=complex)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "MatrixPolynomial":
        return cls(np.zeros((1, rows, cols), dtype=complex))

    @property
    def rows(self) -> int:
        return self.coefficients.shape[1]

    @property
    def cols(self) -> int:
        return self.coefficients.shape[2]

    @property
    def degree(self) -> int:
        return self.coefficients.shape[0] - 1

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coefficients)

    def __call__(self, lam) -> np.ndarray:
        """Evaluate at a scalar (returns a matrix) or an array of points
        (returns a stack of matrices) by Horner's rule."""
        lam = np.asarray(lam, dtype=complex)
        scalar = lam.ndim == 0
        lam = np.atleast_1d(lam)
        out = np.broadcast_to(self.coefficients[-1], lam.shape + self.coefficients.shape[1:]).copy()
        for coeff in self.coefficients[-2::-1]:
            out = out * lam[..., None, None] + coeff
        return out[0] if scalar else out

    def derivative(self) -> "MatrixPolynomial":
        if self.degree == 0:
            return MatrixPolynomial.zeros(self.rows, self.cols)
        k = np.arange(1, self.degree + 1)[:, None, None]
        return MatrixPolynomial(self.coefficients[1:] * k)

    def scaled(self, factor: complex) -> "MatrixPolynomial":
        return MatrixPolynomial(self.coefficients * factor)

    def adjoint(self) -> "MatrixPolynomial":
        """Polynomial equal to ``P(conj(lam))^*``; on the real axis this is
        the pointwise conjugate transpose."""
        return MatrixPolynomial(np.conj(np.transpose(self.coefficients, (0, 2, 1))))

    def __eq__(self, other):
        if not isinstance(other, MatrixPolynomial):
            return NotImplemented
        return np.array_equal(self.coefficients, other.coefficients)

    def __hash__(self):
        return hash(self.coefficients.tobytes())


@dataclass(frozen=True, eq=False)
class FriedrichsModel:
    interval: Interval
    a_matrix: np.ndarray
    b_poly: MatrixPolynomial
    c_poly: MatrixPolynomial

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a_matrix, dtype=complex))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ModelError(f"A must be square, got shape {a.shape}")
        n = a.shape[0]
        b, c = self.b_poly, self.c_poly
        if b.rows != n or c.cols != n:
            raise ModelError(f"b must be {n} x m and c must be m x {n}")
        if b.cols != c.rows:
            raise ModelError("b and c must share the auxiliary dimension m")
        object.__setattr__(self, "a_matrix", _frozen(a))

    @property
    def n(self) -> int:
        return self.a_matrix.shape[0]

    @property
    def m(self) -> int:
        return self.b_poly.cols

    @property
    def alpha(self) -> float:
        return self.interval.alpha

    @property
    def beta(self) -> float:
        return self.interval.beta

    def scaled(self, g: float) -> "FriedrichsModel":
        """Same model with both couplings multiplied by ``g``."""
        return FriedrichsModel(self.interval, self.a_matrix,
                               self.b_poly.scaled(g), self.c_poly.scaled(g))


@dataclass(frozen=True)
class ValidationReport:
    eigenvalues: tuple
    hermiticity_defect: float
    passed: bool
    message: str = field(default="")


def validate_model(model: FriedrichsModel, raise_on_failure: bool = True) -> ValidationReport:
    """Check that ``A`` is Hermitian with spectrum inside the open band."""
    a = model.a_matrix
    scale = max(np.linalg.norm(a, 2), 1.0)
    defect = float(np.max(np.abs(a - a.conj().T)))
    eigs = tuple(float(e) for e in np.linalg.eigvalsh(a))
    message = ""
    if defect > HERMITIAN_RTOL * scale:
        message = f"A is not Hermitian (max |A - A*| = {defect:.3e})"
        if raise_on_failure:
            raise NotHermitian(message)
    else:
        outside = [e for e in eigs if not model.interval.contains(e)]
        if outside:
            message = (f"eigenvalues {outside} of A are not inside "
                       f"({model.alpha}, {model.beta})")
            if raise_on_failure:
                raise SpectrumNotEmbedded(message)
    return ValidationReport(eigs, defect, not message, message)


def eval_couplings(model: FriedrichsModel, lam: complex):
    """Return ``(b(lam), c(lam))``."""
    return model.b_poly(lam), model.c_poly(lam)


def eval_k_prime(model: FriedrichsModel, lam):
    """``K'(lam) = b(lam) c(lam)``; accepts a scalar or an array of points."""
    return model.b_poly(lam) @ model.c_poly(lam)


def eval_k(model: FriedrichsModel, mu: complex, path=None, order: int = 64, panels: int = 4):
    """Integral of ``K'`` from ``alpha`` to ``mu``.

    ``path`` is ``None`` (straight line), a sequence of intermediate
    waypoints (polygonal path ``alpha -> w_1 -> ... -> mu``), or any object
    with a ``segments`` attribute whose segments provide ``point(t)`` and
    ``derivative(t)`` and which runs from ``alpha`` to ``mu``.
    """
    mu = complex(mu)
    t, wt = composite_rule(order, panels)
    total = np.zeros((model.n, model.n), dtype=complex)

    if path is not None and hasattr(path, "segments"):
        segs = path.segments
        start, end = segs[0].point(0.0), segs[-1].point(1.0)
        if abs(start - model.alpha) > 1e-12 or abs(end - mu) > 1e-12 * max(1.0, abs(mu)):
            raise ValueError("path must run from alpha to mu")
        for seg in segs:
            z = seg.point(t)
            w = wt * seg.derivative(t)
            total += np.einsum("j,jab->ab", w, eval_k_prime(model, z))
        return total

    points: Sequence[complex] = [model.alpha, *(complex(p) for p in (() if path is None else path)), mu]
    for z0, z1 in zip(points[:-1], points[1:]):
        if z0 == z1:
            continue
        z = z0 + (z1 - z0) * t
        total += np.einsum("j,jab->ab", wt * (z1 - z0), eval_k_prime(model, z))
    return total
