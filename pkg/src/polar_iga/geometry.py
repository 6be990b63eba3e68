"""Polar NURBS parameterizations of domains with a corner.

A polar patch maps the unit square onto a domain whose corner sits at the
origin: the edge ``zeta_1 = 0`` collapses to that corner, ``zeta_1 = 1`` traces
the far boundary, and ``zeta_2 = 0`` / ``zeta_2 = 1`` trace the two edges
adjacent to the corner. Edge tags follow the usual ordering::

    gamma1: zeta_1 = 0 (collapsed)   gamma2: zeta_1 = 1
    gamma3: zeta_2 = 0               gamma4: zeta_2 = 1
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .splines import KnotVector, collocation_matrix, make_open_knot_vector, refinement_matrix

_LINEAR_01 = np.array([0.0, 0.0, 1.0, 1.0])


@dataclass(frozen=True)
class NurbsSurface:
    """Tensor-product NURBS map ``[0,1]^2 -> R^2``.

    ``control_points`` has shape ``(n1, n2, 2)`` and ``weights`` ``(n1, n2)``.
    """

    kv1: KnotVector
    kv2: KnotVector
    control_points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        cp = np.array(self.control_points, dtype=float)
        w = np.array(self.weights, dtype=float)
        shape = (self.kv1.n, self.kv2.n)
        if cp.shape != shape + (2,) or w.shape != shape:
            raise ValueError(f"control net must have shape {shape}, got {cp.shape} / {w.shape}")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        cp.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "control_points", cp)
        object.__setattr__(self, "weights", w)

    @property
    def degrees(self) -> tuple[int, int]:
        return self.kv1.degree, self.kv2.degree

    def grid(self, z1, z2):
        """Map and first derivatives on the tensor grid ``z1 x z2``.

        Returns ``(x, dx1, dx2, W)`` with shapes ``(m1, m2, 2)`` for the point
        arrays and ``(m1, m2)`` for the weight function.
        """
        z1, z2 = np.atleast_1d(z1), np.atleast_1d(z2)
        B1, D1 = collocation_matrix(self.kv1, z1), collocation_matrix(self.kv1, z1, 1)
        B2, D2 = collocation_matrix(self.kv2, z2), collocation_matrix(self.kv2, z2, 1)
        w = self.weights
        cw = self.control_points * w[..., None]

        def tp(A, M, B):
            return np.einsum("ai,ij...,bj->ab...", A, M, B)

        W, W1, W2 = tp(B1, w, B2), tp(D1, w, B2), tp(B1, w, D2)
        X, X1, X2 = tp(B1, cw, B2), tp(D1, cw, B2), tp(B1, cw, D2)
        x = X / W[..., None]
        dx1 = (X1 - x * W1[..., None]) / W[..., None]
        dx2 = (X2 - x * W2[..., None]) / W[..., None]
        return x, dx1, dx2, W

    def __call__(self, z1, z2) -> np.ndarray:
        """Map scattered points (broadcast ``z1`` against ``z2``)."""
        z1, z2 = np.broadcast_arrays(np.asarray(z1, float), np.asarray(z2, float))
        flat1, flat2 = z1.ravel(), z2.ravel()
        out = np.empty(flat1.shape + (2,))
        for k in range(flat1.size):
            out[k] = self.grid(flat1[k], flat2[k])[0][0, 0]
        return out.reshape(z1.shape + (2,))

    def weight_function(self, z1, z2) -> np.ndarray:
        return self.grid(z1, z2)[3]

    def refine(self, kv1: KnotVector, kv2: KnotVector) -> "NurbsSurface":
        """Same map represented over the finer knot vectors."""
        T1 = refinement_matrix(self.kv1, kv1)
        T2 = refinement_matrix(self.kv2, kv2)
        w = self.weights
        cw = self.control_points * w[..., None]
        wf = T1.T @ w @ T2
        cwf = np.einsum("ia,ijd,jb->abd", T1, cw, T2)
        return NurbsSurface(kv1, kv2, cwf / wf[..., None], wf)


@dataclass(frozen=True)
class PolarPatch(NurbsSurface):
    """Coarse polar parameterization with corner angle ``corner_angle``.

    Construction validates: ``kv1 = {0,0,1,1}``; every interior breakpoint of
    ``kv2`` has multiplicity ``p2``; the first control row collapses to the
    origin; weights agree across the two rows.
    """

    corner_angle: float = field(default=2 * math.pi)

    def __post_init__(self):
        super().__post_init__()
        if self.kv1.degree != 1 or not np.array_equal(self.kv1.knots, _LINEAR_01):
            raise ValueError("polar patch: kv1 must be {0, 0, 1, 1}")
        p2 = self.kv2.degree
        if np.any(self.kv2.multiplicities[1:-1] != p2):
            raise ValueError("polar patch: interior knots of kv2 need multiplicity p2")
        if np.any(self.control_points[0] != 0.0):
            raise ValueError("polar patch: first control row must collapse to (0, 0)")
        if np.any(self.weights[0] != self.weights[1]):
            raise ValueError("polar patch: weights must not depend on i1")
        if not 0.0 < self.corner_angle <= 2 * math.pi:
            raise ValueError("corner angle must lie in (0, 2*pi]")

    @property
    def polar_point(self) -> np.ndarray:
        return np.zeros(2)

    def boundary_curve(self, z2) -> np.ndarray:
        """The far boundary ``F(1, z2)``; ``F(z1, z2) = z1 * boundary_curve(z2)``."""
        return self.grid(1.0, np.atleast_1d(z2))[0][0]

    def to_dict(self) -> dict:
        return {
            "degrees": list(self.degrees),
            "knots_u": self.kv1.knots.tolist(),
            "knots_v": self.kv2.knots.tolist(),
            "control_points": self.control_points.reshape(-1, 2).tolist(),
            "weights": self.weights.ravel().tolist(),
            "corner_angle": self.corner_angle,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PolarPatch":
        p1, p2 = doc["degrees"]
        kv1, kv2 = KnotVector(doc["knots_u"], p1), KnotVector(doc["knots_v"], p2)
        shape = (kv1.n, kv2.n)
        return cls(
            kv1,
            kv2,
            np.asarray(doc["control_points"], float).reshape(shape + (2,)),
            np.asarray(doc["weights"], float).reshape(shape),
            float(doc["corner_angle"]),
        )


def save_patch(patch: PolarPatch, path) -> None:
    """Write the patch as JSON (control points and weights row-major in (i1, i2))."""
    Path(path).write_text(json.dumps(patch.to_dict(), indent=2))


def load_patch(path) -> PolarPatch:
    return PolarPatch.from_dict(json.loads(Path(path).read_text()))


def _polar_patch(kv2: KnotVector, outer, weights, omega) -> PolarPatch:
    outer = np.asarray(outer, float)
    weights = np.asarray(weights, float)
    cp = np.stack([np.zeros_like(outer), outer])
    return PolarPatch(KnotVector(_LINEAR_01, 1), kv2, cp, np.stack([weights, weights]), omega)


def make_circular_sector(omega: float, segments: int | None = None) -> PolarPatch:
    """Unit-radius circular sector of opening angle ``omega``.

    The arc is split into ``segments`` quadratic rational Bezier pieces
    (default: pieces of at most 120 degrees).
    """
    if not 0.0 < omega <= 2 * math.pi:
        raise ValueError("omega must lie in (0, 2*pi]")
    if segments is None:
        segments = max(1, math.ceil(3 * omega / (2 * math.pi) - 1e-12))
    if segments < 1:
        raise ValueError("segments must be >= 1")
    alpha = omega / segments
    if alpha >= math.pi:
        raise ValueError(f"arc segment of {alpha:.4f} rad >= pi; use more segments")
    kv2 = make_open_knot_vector(np.linspace(0.0, 1.0, segments + 1), 2, 2)
    outer, weights = [], []
    for k in range(segments):
        t0 = k * alpha
        tm = t0 + alpha / 2
        if k == 0:
            outer.append((1.0, 0.0))
            weights.append(1.0)
        outer.append((math.cos(tm) / math.cos(alpha / 2), math.sin(tm) / math.cos(alpha / 2)))
        weights.append(math.cos(alpha / 2))
        outer.append((math.cos(t0 + alpha), math.sin(t0 + alpha)))
        weights.append(1.0)
    return _polar_patch(kv2, outer, weights, omega)


def make_l_shape() -> PolarPatch:
    """L-shaped domain ``(-1,1)^2 \\ [0,1] x [-1,0]`` with the corner at the origin."""
    kv2 = KnotVector([0, 0, 0.25, 0.5, 0.75, 1, 1], 1)
    outer = [(1, 0), (1, 1), (-1, 1), (-1, -1), (0, -1)]
    return _polar_patch(kv2, outer, np.ones(5), 1.5 * math.pi)


def map_point(patch: NurbsSurface, zeta) -> np.ndarray:
    z1, z2 = zeta
    return patch.grid(z1, z2)[0][0, 0]


def jacobian(patch: NurbsSurface, zeta) -> tuple[np.ndarray, float]:
    """Jacobian matrix ``[[dx/dz1, dx/dz2], [dy/dz1, dy/dz2]]`` and its determinant."""
    z1, z2 = zeta
    _, d1, d2, _ = patch.grid(z1, z2)
    J = np.column_stack([d1[0, 0], d2[0, 0]])
    return J, float(np.linalg.det(J))


@dataclass(frozen=True)
class ReferenceMap:
    """Polar-coordinate reference map ``G(r, phi) = r R(Phi(phi)) (cos, sin)(Phi(phi))``.

    ``exact_intervals`` lists ``(component, lo, hi)`` ranges of ``phi`` on which
    the corresponding NURBS boundary component is claimed to coincide with ``G``.
    """

    kind: str
    omega: float
    angle_map: Callable[[np.ndarray], np.ndarray]
    radius_map: Callable[[np.ndarray], np.ndarray]
    exact_intervals: tuple = ()

    def __call__(self, r, phi) -> np.ndarray:
        ang = self.angle_map(np.asarray(phi, float))
        rad = np.asarray(r, float) * self.radius_map(ang)
        return np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=-1)


def _lshape_angle(phi):
    w = 1.5 * math.pi
    phi = np.asarray(phi, float)
    return np.where(
        phi <= 0.25,
        2 / 3 * w * phi,
        np.where(phi <= 0.75, w * (4 / 3 * phi - 1 / 6), w * (2 / 3 * phi + 1 / 3)),
    )


def _lshape_radius(ang):
    ang = np.asarray(ang, float)
    q = math.pi / 4
    with np.errstate(divide="ignore"):
        return np.select(
            [ang <= q, ang <= 3 * q, ang <= 5 * q],
            [1 / np.cos(ang), 1 / np.sin(ang), -1 / np.cos(ang)],
            -1 / np.sin(ang),
        )


def reference_map(kind: str, omega: float | None = None) -> ReferenceMap:
    if kind == "sector":
        if omega is None:
            raise ValueError("sector reference map needs omega")
        return ReferenceMap(kind, omega, lambda phi: omega * np.asarray(phi, float),
                            lambda ang: np.ones_like(ang))
    if kind == "lshape":
        # breaks of Phi coincide with the corners of the boundary polyline
        intervals = ((0, 0.0, 0.25), (0, 0.5, 0.75), (1, 0.25, 0.5), (1, 0.75, 1.0))
        return ReferenceMap(kind, 1.5 * math.pi, _lshape_angle, _lshape_radius, intervals)
    raise ValueError(f"unsupported reference map kind {kind!r}")


@dataclass(frozen=True)
class ReferenceComparison:
    max_diff: float
    componentwise: tuple[float, float]
    interval_diffs: tuple  # (component, lo, hi, max |diff| on [lo, hi])

    @property
    def identical_intervals(self) -> tuple:
        return tuple(iv for iv in self.interval_diffs if iv[3] < 1e-12)


def compare_to_reference(patch: PolarPatch, refmap: ReferenceMap, n_samples: int = 1000) -> ReferenceComparison:
    """Componentwise gap between the NURBS boundary and the reference boundary."""
    phi = np.linspace(0.0, 1.0, n_samples + 2)[1:-1]
    diff = np.abs(patch.boundary_curve(phi) - refmap(1.0, phi))
    comp = diff.max(axis=0)
    per_interval = []
    for c, lo, hi in refmap.exact_intervals:
        t = np.linspace(lo, hi, 201)
        d = np.abs(patch.boundary_curve(t)[:, c] - refmap(1.0, t)[:, c]).max()
        per_interval.append((c, lo, hi, float(d)))
    return ReferenceComparison(float(comp.max()), (float(comp[0]), float(comp[1])), tuple(per_interval))
