"""C0 polar NURBS space with the collapsed corner degree of freedom.

All tensor functions of the first control row (``i1 = 0``) are merged into a
single global DOF 0, whose parametric basis function is ``B_0(zeta_1)``. The
remaining tensor index ``(i1, i2)`` with ``i1 >= 1`` maps to
``1 + (i1 - 1) * n2 + i2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .geometry import NurbsSurface, PolarPatch
from .mesh import BezierMesh, build_mesh
from .splines import DualBasis, KnotVector, basis_funs_ders, graded_refine, subdivide

EDGES = ("gamma2", "gamma3", "gamma4")


@dataclass(frozen=True)
class PointBasis:
    """Local tensor NURBS functions at a batch of ``m`` parametric points.

    ``dofs``, ``values``, ``d1``, ``d2`` have shape ``(m, nloc)``; ``x`` is
    ``(m, 2)`` and ``jac`` is ``(m, 2, 2)`` with ``jac[:, i, k] = dx_i/dzeta_k``.
    """

    dofs: np.ndarray
    values: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    x: np.ndarray
    jac: np.ndarray

    @property
    def det(self) -> np.ndarray:
        J = self.jac
        return J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]

    def physical_gradients(self) -> np.ndarray:
        """``(m, nloc, 2)`` gradients w.r.t. x; singular where ``det == 0``."""
        J, det = self.jac, self.det
        # J^{-T} applied to the parametric gradient
        gx = (J[:, 1, 1, None] * self.d1 - J[:, 1, 0, None] * self.d2) / det[:, None]
        gy = (-J[:, 0, 1, None] * self.d1 + J[:, 0, 0, None] * self.d2) / det[:, None]
        return np.stack([gx, gy], axis=-1)


@dataclass(frozen=True)
class PolarSplineSpace:
    patch: PolarPatch
    kv1_refined: KnotVector
    kv2_refined: KnotVector
    geometry: NurbsSurface
    grading_mu: float
    dof_map: np.ndarray = field(repr=False)

    @property
    def degrees(self) -> tuple[int, int]:
        return self.kv1_refined.degree, self.kv2_refined.degree

    @property
    def n_dofs(self) -> int:
        return int(self.dof_map.max()) + 1

    @property
    def polar_dof(self) -> int:
        return 0

    @property
    def mesh(self) -> BezierMesh:
        return build_mesh(self.kv1_refined, self.kv2_refined, self.grading_mu)

    @property
    def h(self) -> float:
        """Refinement parameter ``max(h1, h2)`` of the two uniform index grids."""
        n1 = self.kv1_refined.n_elements
        n2 = self.kv2_refined.n_elements
        return max(1.0 / n1, 1.0 / n2)

    # -- evaluation --------------------------------------------------------

    def _local(self, s1, V1, D1, s2, V2, D2) -> PointBasis:
        p1, p2 = self.degrees
        a = s1[:, None] - p1 + np.arange(p1 + 1)  # (m, p1+1)
        b = s2[:, None] - p2 + np.arange(p2 + 1)
        ia, ib = a[:, :, None], b[:, None, :]
        w = self.geometry.weights[ia, ib]
        cp = self.geometry.control_points[ia, ib]
        m = s1.size
        N = w * V1[:, :, None] * V2[:, None, :]
        N1 = w * D1[:, :, None] * V2[:, None, :]
        N2 = w * V1[:, :, None] * D2[:, None, :]
        N, N1, N2 = (t.reshape(m, -1) for t in (N, N1, N2))
        W = N.sum(1, keepdims=True)
        R = N / W
        R1 = (N1 - R * N1.sum(1, keepdims=True)) / W
        R2 = (N2 - R * N2.sum(1, keepdims=True)) / W
        cp = cp.reshape(m, -1, 2)
        x = np.einsum("mk,mkd->md", R, cp)
        jac = np.stack([np.einsum("mk,mkd->md", R1, cp), np.einsum("mk,mkd->md", R2, cp)], axis=-1)
        dofs = self.dof_map[ia, ib].reshape(m, -1)
        return PointBasis(dofs, R, R1, R2, x, jac)

    def point_basis(self, z1, z2) -> PointBasis:
        """Local basis at scattered parametric points."""
        z1, z2 = np.broadcast_arrays(np.atleast_1d(np.asarray(z1, float)), np.atleast_1d(np.asarray(z2, float)))
        z1, z2 = z1.ravel(), z2.ravel()
        if np.any((z1 < 0) | (z1 > 1) | (z2 < 0) | (z2 > 1)):
            raise ValueError("parametric points must lie in [0, 1]^2")
        s1, B1 = basis_funs_ders(self.kv1_refined, z1, 1)
        s2, B2 = basis_funs_ders(self.kv2_refined, z2, 1)
        return self._local(s1, B1[:, 0], B1[:, 1], s2, B2[:, 0], B2[:, 1])

    def column_quadrature(self, nodes: int = 6) -> Iterable[tuple[int, PointBasis, np.ndarray]]:
        """Per element column ``j1``: local basis at all tensor Gauss points of
        that column and the parametric quadrature weights.

        Points are ordered ``(j2, q1, q2)``; every element owns ``nodes**2``
        consecutive rows.
        """
        from .splines import gauss_legendre

        gx, gw = gauss_legendre(nodes)
        kv1, kv2 = self.kv1_refined, self.kv2_refined
        sp1, sp2 = kv1.element_spans(), kv2.element_spans()
        U1, U2 = kv1.knots, kv2.knots
        a2, b2 = U2[sp2], U2[sp2 + 1]
        z2 = a2[:, None] + (b2 - a2)[:, None] * gx  # (E2, q)
        w2 = (b2 - a2)[:, None] * gw
        s2, B2 = basis_funs_ders(kv2, z2.ravel(), 1, spans=np.repeat(sp2, nodes))
        E2, q = sp2.size, nodes
        B2 = B2.reshape(E2, 1, q, 2, -1)
        for j1, s in enumerate(sp1):
            a1, b1 = U1[s], U1[s + 1]
            z1 = a1 + (b1 - a1) * gx
            _, B1 = basis_funs_ders(kv1, z1, 1, spans=s)
            B1 = B1.reshape(1, q, 1, 2, -1)
            shape = (E2, q, q)
            V1 = np.broadcast_to(B1[..., 0, :], shape + (B1.shape[-1],)).reshape(-1, B1.shape[-1])
            D1 = np.broadcast_to(B1[..., 1, :], shape + (B1.shape[-1],)).reshape(-1, B1.shape[-1])
            V2 = np.broadcast_to(B2[..., 0, :], shape + (B2.shape[-1],)).reshape(-1, B2.shape[-1])
            D2 = np.broadcast_to(B2[..., 1, :], shape + (B2.shape[-1],)).reshape(-1, B2.shape[-1])
            m = V1.shape[0]
            pb = self._local(np.full(m, s), V1, D1, np.repeat(sp2, q * q), V2, D2)
            wq = ((b1 - a1) * gw)[None, :, None] * w2[:, None, :]
            yield j1, pb, wq.ravel()

    def eval_function(self, coefficients, z1, z2):
        """Value, parametric gradient and physical point of a space member."""
        pb = self.point_basis(z1, z2)
        c = np.asarray(coefficients)[pb.dofs]
        return (c * pb.values).sum(1), np.stack([(c * pb.d1).sum(1), (c * pb.d2).sum(1)], -1), pb.x

    def eval_space_basis(self, zeta, max_derivative: int = 1) -> list[tuple[int, np.ndarray]]:
        """Nonzero global basis functions at one point as ``(dof, values)``;
        ``values`` holds the value and, if requested, both parametric first
        derivatives."""
        pb = self.point_basis(*zeta)
        acc: dict[int, np.ndarray] = {}
        for k, d in enumerate(pb.dofs[0]):
            vals = np.array([pb.values[0, k], pb.d1[0, k], pb.d2[0, k]])[: 1 + 2 * (max_derivative > 0)]
            acc[int(d)] = acc.get(int(d), 0.0) + vals
        return sorted(acc.items())

    # -- boundary conditions ----------------------------------------------

    def dirichlet_dofs(self, dirichlet_edges) -> np.ndarray:
        """Global DOFs whose basis functions do not vanish on a Dirichlet edge."""
        edges = set(dirichlet_edges)
        if not edges:
            raise ValueError("the Dirichlet boundary must be non-empty")
        unknown = edges - set(EDGES)
        if unknown:
            raise ValueError(f"unknown edge tags {sorted(unknown)}; expected a subset of {EDGES}")
        dm = self.dof_map
        sel = []
        if "gamma2" in edges:
            sel.append(dm[-1, :])
        if "gamma3" in edges:
            sel.append(dm[:, 0])
        if "gamma4" in edges:
            sel.append(dm[:, -1])
        return np.unique(np.concatenate(sel))

    # -- projection ---------------------------------------------------------

    def project_parametric(self, vhat: Callable) -> np.ndarray:
        """Quasi-interpolant of a pulled-back function ``vhat(z1, z2)``.

        ``vhat`` receives broadcastable meshgrid arrays. The collapsed DOF gets
        ``vhat(0, .)``, i.e. the value at the corner.
        """
        db1 = DualBasis(self.kv1_refined, boundary_mode=True)
        db2 = DualBasis(self.kv2_refined, boundary_mode=True)
        X1, X2 = db1.nodes, db2.nodes
        W = self.geometry.weight_function(X1, X2)
        vals = np.asarray(vhat(X1[:, None], X2[None, :]), float) * np.ones_like(W)
        C = db1.apply(db2.apply((W * vals).T).T)
        alpha = C / self.geometry.weights
        coef = np.empty(self.n_dofs)
        coef[self.dof_map[1:].ravel()] = alpha[1:].ravel()
        corner = vals[X1 == 0.0]
        coef[0] = corner[0, 0]
        return coef

    def project(self, v: Callable) -> np.ndarray:
        """Quasi-interpolant of a physical function ``v(x, y)``."""

        def vhat(z1, z2):
            z1, z2 = np.broadcast_arrays(z1, z2)
            x = self.geometry.grid(z1[:, 0], z2[0, :])[0]
            return v(x[..., 0], x[..., 1])

        return self.project_parametric(vhat)


def polar_dof_map(n1: int, n2: int) -> np.ndarray:
    dm = np.empty((n1, n2), dtype=int)
    dm[0] = 0
    dm[1:] = 1 + np.arange((n1 - 1) * n2).reshape(n1 - 1, n2)
    return dm


def build_space(patch: PolarPatch, p=(2, 2), N=(5, 5), mu: float = 1.0) -> PolarSplineSpace:
    """Refine a polar patch isoparametrically.

    Direction 1 gets ``N[0]`` graded breakpoints. In direction 2 every
    element of the coarse patch is split into ``N[1] - 1`` equal parts;
    the coarse breakpoints keep their C0 continuity.
    """
    p1, p2 = p
    N1, N2 = N
    if p1 < patch.kv1.degree or p2 < patch.kv2.degree:
        raise ValueError(f"degrees {p} lie below the geometry degrees {patch.degrees}")
    if N2 < 2:
        raise ValueError("N2 must be >= 2")
    kv1 = graded_refine(p1, N1, mu)
    kv2 = subdivide(patch.kv2, p2, N2 - 1)
    geo = patch.refine(kv1, kv2)
    cp, w = geo.control_points, geo.weights
    if np.abs(cp[0]).max() > 1e-11 or np.abs(w - w[:1]).max() > 1e-11 * w.max():
        raise RuntimeError("refined geometry lost its polar structure")
    cp = np.array(cp)
    cp[0] = 0.0
    w = np.broadcast_to(w[:1], w.shape)
    geo = NurbsSurface(kv1, kv2, cp, w)
    return PolarSplineSpace(patch, kv1, kv2, geo, mu, polar_dof_map(kv1.n, kv2.n))
