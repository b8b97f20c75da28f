"""Integration contours joining the band endpoints.

A :class:`Contour` is a piecewise smooth Jordan path from ``alpha`` to
``beta`` lying (apart from its endpoints) in one open half-plane, or the
band itself when ``sign == 0``.  Sampling it with a composite
Gauss-Legendre rule gives a :class:`SampledContour`; each node carries a
complex weight (for ``dmu``) and its modulus (for ``|dmu|``).
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import shapely

from .errors import InvalidContour
from .model import FriedrichsModel, Interval
from .quadrature import composite_rule

logger = logging.getLogger(__name__)

VALIDATION_SAMPLES = 1024
WINDING_SAMPLES = 4096
BOUNDARY_BAND = 1e-9
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------- segments

@dataclass(frozen=True)
class Line:
    z0: complex
    z1: complex
    kind = "line"

    def point(self, t):
        return self.z0 + (self.z1 - self.z0) * np.asarray(t, dtype=float)

    def derivative(self, t):
        return np.full(np.shape(t), self.z1 - self.z0, dtype=complex)[()]

    def params(self) -> dict:
        return {"kind": self.kind, "z0": _cpair(self.z0), "z1": _cpair(self.z1)}


@dataclass(frozen=True)
class CircularArc:
    """``center + radius * exp(i theta)``, theta linear from theta0 to theta1."""

    center: complex
    radius: float
    theta0: float
    theta1: float
    kind = "circular_arc"

    def _theta(self, t):
        return self.theta0 + (self.theta1 - self.theta0) * np.asarray(t, dtype=float)

    def point(self, t):
        return self.center + self.radius * np.exp(1j * self._theta(t))

    def derivative(self, t):
        return 1j * (self.theta1 - self.theta0) * self.radius * np.exp(1j * self._theta(t))

    def params(self) -> dict:
        return {"kind": self.kind, "center": _cpair(self.center), "radius": repr(self.radius),
                "theta0": repr(self.theta0), "theta1": repr(self.theta1)}


@dataclass(frozen=True)
class EllipticArc:
    """``center + rx cos(theta) + i ry sin(theta)``; ``ry`` may be negative."""

    center: complex
    rx: float
    ry: float
    theta0: float
    theta1: float
    kind = "elliptic_arc"

    def _theta(self, t):
        return self.theta0 + (self.theta1 - self.theta0) * np.asarray(t, dtype=float)

    def point(self, t):
        th = self._theta(t)
        return self.center + self.rx * np.cos(th) + 1j * self.ry * np.sin(th)

    def derivative(self, t):
        th = self._theta(t)
        return (self.theta1 - self.theta0) * (-self.rx * np.sin(th) + 1j * self.ry * np.cos(th))

    def params(self) -> dict:
        return {"kind": self.kind, "center": _cpair(self.center), "rx": repr(self.rx),
                "ry": repr(self.ry), "theta0": repr(self.theta0), "theta1": repr(self.theta1)}


def _cpair(z: complex) -> list:
    z = complex(z)
    return [repr(z.real), repr(z.imag)]


# ----------------------------------------------------------------- contour

@dataclass(frozen=True)
class Contour:
    alpha: float
    beta: float
    sign: int
    segments: tuple

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))
        self._validate()

    def _validate(self):
        if self.sign not in (-1, 0, 1):
            raise InvalidContour(f"sign must be -1, 0 or +1, got {self.sign}")
        if not self.segments:
            raise InvalidContour("contour needs at least one segment")
        scale = max(1.0, abs(self.alpha), abs(self.beta))
        tol = 1e-12 * scale
        if abs(self.segments[0].point(0.0) - self.alpha) > tol:
            raise InvalidContour("contour must start at alpha")
        if abs(self.segments[-1].point(1.0) - self.beta) > tol:
            raise InvalidContour("contour must end at beta")
        for s0, s1 in zip(self.segments[:-1], self.segments[1:]):
            if abs(s0.point(1.0) - s1.point(0.0)) > tol:
                raise InvalidContour("consecutive segments do not join")
        probe = np.linspace(0.0, 1.0, 17)
        for seg in self.segments:
            if np.min(np.abs(seg.derivative(probe))) <= 1e-14 * scale:
                raise InvalidContour(f"degenerate segment {seg!r}")

        if self.sign == 0:
            if len(self.segments) != 1 or not isinstance(self.segments[0], Line):
                raise InvalidContour("sign 0 is reserved for the band itself")
            return

        pts = self.dense_points(VALIDATION_SAMPLES)
        interior = pts[1:-1]
        if np.any(self.sign * interior.imag <= 0.0):
            raise InvalidContour("contour leaves the selected open half-plane")
        line = shapely.LineString(np.column_stack([pts.real, pts.imag]))
        if not line.is_simple:
            raise InvalidContour("contour intersects itself")

    def dense_points(self, total: int) -> np.ndarray:
        """About ``total`` points along the whole path, vertices included."""
        per = max(2, -(-total // len(self.segments)))
        t = np.linspace(0.0, 1.0, per)
        chunks = [np.atleast_1d(seg.point(t)) for seg in self.segments]
        pts = [chunks[0]] + [c[1:] for c in chunks[1:]]
        return np.concatenate(pts)

    @cached_property
    def hash(self) -> str:
        payload = {"alpha": repr(self.alpha), "beta": repr(self.beta), "sign": self.sign,
                   "segments": [s.params() for s in self.segments]}
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @cached_property
    def _guard_points(self) -> np.ndarray:
        return self.dense_points(4096)

    def approx_distance(self, z) -> np.ndarray:
        """Distance from ``z`` (scalar or array) to a dense polygonal
        approximation of the path; cheap, for guard checks only."""
        z = np.asarray(z, dtype=complex)
        pts = self._guard_points
        return np.min(np.abs(z[..., None] - pts), axis=-1)

    def distance_to(self, z: complex) -> float:
        """Exact (to ~1e-12) distance from the point ``z`` to the path."""
        return min(_segment_distance(seg, complex(z))[0] for seg in self.segments)

    def mirrored(self) -> "Contour":
        """Complex-conjugate contour in the opposite half-plane."""
        segs = []
        for s in self.segments:
            if isinstance(s, Line):
                segs.append(Line(np.conj(s.z0), np.conj(s.z1)))
            elif isinstance(s, CircularArc):
                segs.append(CircularArc(np.conj(s.center), s.radius, -s.theta0, -s.theta1))
            else:
                segs.append(EllipticArc(np.conj(s.center), s.rx, -s.ry, s.theta0, s.theta1))
        return Contour(self.alpha, self.beta, -self.sign, tuple(segs))


def _segment_distance(seg, z: complex, grid: int = 65):
    """Golden-section minimisation of ``|seg(t) - z|`` bracketed by a coarse
    grid; returns ``(distance, t)``."""
    t = np.linspace(0.0, 1.0, grid)
    f = np.abs(seg.point(t) - z)
    k = int(np.argmin(f))
    best, best_t = float(f[k]), float(t[k])
    lo, hi = t[max(k - 1, 0)], t[min(k + 1, grid - 1)]

    def fun(s):
        return abs(complex(seg.point(s)) - z)

    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    while hi - lo > 1e-12:
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = fun(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = fun(x2)
    for s, v in ((x1, f1), (x2, f2)):
        if v < best:
            best, best_t = v, float(s)
    return best, best_t


# ------------------------------------------------------------ constructors

def interval_contour(interval: Interval) -> Contour:
    return Contour(interval.alpha, interval.beta, 0, (Line(interval.alpha, interval.beta),))


def semi_ellipse(interval: Interval, depth: float, sign: int) -> Contour:
    """Half-ellipse over the band with vertical semi-axis ``depth``.

    Parametrised as ``m + w cos(th) + i sign depth sin(th)`` with ``th``
    running from pi to 0, so it starts at alpha and ends at beta.  When
    ``depth`` equals the half-width the arc is stored as a circular arc.
    """
    if sign not in (-1, 1):
        raise InvalidContour("semi_ellipse needs sign -1 or +1")
    if not depth > 0:
        raise InvalidContour(f"depth must be positive, got {depth}")
    mid = 0.5 * (interval.alpha + interval.beta)
    half = 0.5 * interval.length
    if depth == half:
        # exp(i th) with th from pi to pi(1 - sign): lower half for sign -1
        seg = CircularArc(mid, half, math.pi, math.pi * (1 - sign))
    else:
        seg = EllipticArc(mid, half, sign * depth, math.pi, 0.0)
    return Contour(interval.alpha, interval.beta, sign, (seg,))


def polyline(interval: Interval, vertices: Sequence[complex], sign: int) -> Contour:
    if sign not in (-1, 1):
        raise InvalidContour("polyline needs sign -1 or +1")
    verts = [complex(v) for v in vertices]
    for v in verts:
        if not sign * v.imag > 0:
            raise InvalidContour(f"vertex {v} is not in the {'upper' if sign > 0 else 'lower'} half-plane")
    pts = [complex(interval.alpha)] + verts + [complex(interval.beta)]
    segs = []
    for z0, z1 in zip(pts[:-1], pts[1:]):
        if z0 == z1:
            raise InvalidContour("repeated vertex gives a degenerate segment")
        segs.append(Line(z0, z1))
    return Contour(interval.alpha, interval.beta, sign, tuple(segs))


def build_contour(interval: Interval, spec: dict) -> Contour:
    """Build a contour from a spec dict.

    Recognised forms::

        {"kind": "interval"}
        {"kind": "semi_ellipse", "depth": h, "sign": -1}
        {"kind": "polyline", "vertices": [[re, im], ...], "sign": -1}
    """
    kind = spec.get("kind")
    if kind == "interval":
        return interval_contour(interval)
    if kind == "semi_ellipse":
        return semi_ellipse(interval, float(spec["depth"]), int(spec["sign"]))
    if kind == "polyline":
        verts = [complex(*v) if isinstance(v, (list, tuple)) else complex(v)
                 for v in spec["vertices"]]
        return polyline(interval, verts, int(spec["sign"]))
    raise InvalidContour(f"unknown contour kind {kind!r}")


# ---------------------------------------------------------------- sampling

@dataclass(frozen=True, eq=False)
class SampledContour:
    contour: Contour
    order: int
    panels: int
    nodes: np.ndarray
    weights: np.ndarray
    arc_weights: np.ndarray
    panel_lengths: np.ndarray

    @property
    def contour_hash(self) -> str:
        return self.contour.hash

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def guard_distance(self) -> float:
        """Minimum admissible distance of an evaluation point from the path."""
        return 10.0 * float(np.max(self.panel_lengths)) / self.order

    def distance_to(self, z) -> np.ndarray:
        d = self.contour.approx_distance(z)
        return np.minimum(d, np.min(np.abs(np.asarray(z, dtype=complex)[..., None] - self.nodes), axis=-1))


def sample_contour(contour: Contour, order: int = 64, panels_per_segment: int = 4) -> SampledContour:
    """Composite Gauss-Legendre sampling, ``order`` nodes per panel."""
    if order < 2:
        raise ValueError("quadrature order must be at least 2")
    t, wt = composite_rule(order, panels_per_segment)
    nodes, weights, lengths = [], [], []
    for seg in contour.segments:
        z = np.atleast_1d(seg.point(t))
        w = wt * seg.derivative(t)
        nodes.append(z)
        weights.append(w)
        lengths.append(np.abs(w).reshape(panels_per_segment, order).sum(axis=1))
    arrays = [np.concatenate(nodes).astype(complex), np.concatenate(weights).astype(complex)]
    arrays.append(np.abs(arrays[1]))
    arrays.append(np.concatenate(lengths))
    for a in arrays:
        a.setflags(write=False)
    return SampledContour(contour, order, panels_per_segment, *arrays)


# ---------------------------------------------------------- geometry tests

def contour_distance(contour: Contour, points: Iterable[complex]) -> float:
    """``min`` over ``points`` of the distance to the contour."""
    return min(contour.distance_to(p) for p in points)


def _closed_curve(contour: Contour, samples: int) -> np.ndarray:
    """Band from alpha to beta followed by the contour traversed backwards."""
    band = np.linspace(contour.alpha, contour.beta, samples).astype(complex)
    back = contour.dense_points(samples * len(contour.segments))[::-1]
    return np.concatenate([band, back[1:-1]])


def _band_distance(contour: Contour, z: complex):
    x = min(max(z.real, contour.alpha), contour.beta)
    return abs(z - x), x


def region_membership(contour: Contour, z: complex, samples: int = WINDING_SAMPLES) -> str:
    """Classify ``z`` against the region bounded by the band and the contour.

    Returns ``"inside"``, ``"outside"`` or ``"boundary"`` (within 1e-9 of
    the closed curve).  Uses the winding number of the closed polygonal
    curve; points closer to the curve than the polygon's chord error are
    decided by which side of the nearest tangent they lie on.
    """
    if contour.sign == 0:
        raise ValueError("region is undefined for the undeformed band")
    z = complex(z)
    d_band, x_band = _band_distance(contour, z)
    seg_hits = [(*_segment_distance(seg, z), seg) for seg in contour.segments]
    d_gamma, t_gamma, seg_near = min(seg_hits, key=lambda h: h[0])
    dist = min(d_band, d_gamma)
    if dist < BOUNDARY_BAND:
        return "boundary"

    if dist < 1e-6:
        # chord error of the polygon is ~1e-7; use the local side instead
        if d_band <= d_gamma and contour.alpha < x_band < contour.beta:
            left = z.imag > 0
            return "inside" if left == (contour.sign > 0) else "outside"
        if 0.0 < t_gamma < 1.0:
            tangent = complex(seg_near.derivative(t_gamma))
            p = complex(seg_near.point(t_gamma))
            left = (np.conj(tangent) * (z - p)).imag > 0
            return "inside" if left == (contour.sign < 0) else "outside"

    curve = _closed_curve(contour, samples)
    rel = curve - z
    turns = np.angle(np.roll(rel, -1) / rel).sum() / (2 * math.pi)
    return "inside" if abs(round(turns)) == 1 else "outside"


def region_membership_many(contour: Contour, zs, samples: int = WINDING_SAMPLES) -> list:
    return [region_membership(contour, z, samples) for z in np.ravel(zs)]


# ------------------------------------------------------------ admissibility

@dataclass(frozen=True)
class AdmissibilityReport:
    d: float
    v_k: float
    enorm_b: float
    enorm_c: float
    omega: float
    pass_vk: bool
    pass_hyp2: bool
    r_bound: float
    contour_hash: str

    @property
    def contraction_bound(self) -> float:
        """Lipschitz constant of the root map on the ball of radius r."""
        if not self.pass_vk:
            return math.nan
        return self.v_k / (self.d - self.r_bound) ** 2


def r_bound_formula(d: float, v_k: float) -> float:
    """``d/2 - sqrt(d^2/4 - v_k)`` in cancellation-free form."""
    disc = d * d / 4.0 - v_k
    if disc <= 0.0 and v_k > 0.0:
        return math.nan
    return v_k / (d / 2.0 + math.sqrt(max(disc, 0.0))) if v_k > 0 else 0.0


def coupling_norms(model: FriedrichsModel, sampled: SampledContour):
    """Node-wise spectral norms of ``b``, ``c`` and ``b c``."""
    b = model.b_poly(sampled.nodes)
    c = model.c_poly(sampled.nodes)
    nb = np.linalg.norm(b, ord=2, axis=(1, 2))
    nc = np.linalg.norm(c, ord=2, axis=(1, 2))
    nk = np.linalg.norm(b @ c, ord=2, axis=(1, 2))
    return nb, nc, nk


def admissibility(model: FriedrichsModel, sampled: SampledContour) -> AdmissibilityReport:
    nb, nc, nk = coupling_norms(model, sampled)
    a = sampled.arc_weights
    enorm_b = math.sqrt(float(np.dot(a, nb ** 2)))
    enorm_c = math.sqrt(float(np.dot(a, nc ** 2)))
    v_k = float(np.dot(a, nk))
    eigs = np.linalg.eigvalsh(model.a_matrix)
    d = contour_distance(sampled.contour, eigs)
    quarter = d * d / 4.0
    pass_vk = v_k < quarter
    pass_hyp2 = enorm_b * enorm_c < quarter
    r = r_bound_formula(d, v_k) if pass_vk else math.nan
    return AdmissibilityReport(d, v_k, enorm_b, enorm_c, d * d - 4.0 * v_k,
                               pass_vk, pass_hyp2, r, sampled.contour_hash)


def sample_adaptive(contour: Contour, model: FriedrichsModel, order: int = 64, panels: int = 4,
                    tol: float = 1e-10, max_nodes_per_segment: int = 1024) -> SampledContour:
    """Double the order until the variation of K changes by less than ``tol``."""
    sampled = sample_contour(contour, order, panels)
    prev = admissibility(model, sampled).v_k
    while 2 * order * panels <= max_nodes_per_segment:
        order *= 2
        finer = sample_contour(contour, order, panels)
        cur = admissibility(model, finer).v_k
        sampled = finer
        if abs(cur - prev) < tol:
            return sampled
        prev = cur
    logger.warning("variation of K not converged to %.1e at %d nodes/segment", tol, order * panels)
    return sampled
