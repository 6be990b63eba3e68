"""Galerkin assembly and solution of -Laplace(u) = f on a polar spline space."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .polar_space import PolarSplineSpace

log = logging.getLogger(__name__)

DIRECT_LIMIT = 200_000


class GeometryError(ValueError):
    """Non-positive Jacobian determinant at a quadrature node."""


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor Gauss-Legendre rule with ``nodes_per_direction**2`` points per element."""

    nodes_per_direction: int = 6

    def __post_init__(self):
        if self.nodes_per_direction < 1:
            raise ValueError("need at least one quadrature node per direction")


@dataclass(frozen=True)
class LinearSystem:
    """``stiffness @ x = load`` over ``free_dofs`` (all DOFs before elimination)."""

    space: PolarSplineSpace
    stiffness: scipy.sparse.csr_matrix
    load: np.ndarray
    free_dofs: np.ndarray


@dataclass(frozen=True)
class DiscreteSolution:
    space: PolarSplineSpace
    coefficients: np.ndarray

    def evaluate(self, zeta, gradient: bool = True):
        """``(value, physical_gradient)`` at parametric point(s) ``zeta = (z1, z2)``.

        The gradient is undefined on the collapsed edge ``z1 = 0``.
        """
        z1, z2 = zeta
        pb = self.space.point_basis(z1, z2)
        c = self.coefficients[pb.dofs]
        val = (c * pb.values).sum(1)
        if not gradient:
            return val, None
        if np.any(np.atleast_1d(z1) == 0.0):
            raise ValueError("gradient requested on the collapsed edge z1 = 0")
        grad = np.einsum("mk,mkd->md", c, pb.physical_gradients())
        return val, grad


def assemble(space: PolarSplineSpace, f: Callable | None, quad: QuadratureRule = QuadratureRule()) -> LinearSystem:
    """Stiffness matrix and load vector over all DOFs of ``space``.

    ``f(x, y)`` is evaluated at the physical images of the quadrature nodes;
    ``None`` means ``f = 0``.
    """
    n = space.n_dofs
    q2 = quad.nodes_per_direction**2
    rows, cols, vals = [], [], []
    load = np.zeros(n)
    for _, pb, wq in space.column_quadrature(quad.nodes_per_direction):
        det = pb.det
        if np.any(det <= 0):
            raise GeometryError(f"non-positive Jacobian determinant (min {det.min():.3e})")
        dw = wq * det
        G = pb.physical_gradients()
        m, nloc = pb.values.shape
        ne = m // q2
        G = G.reshape(ne, q2, nloc, 2)
        dwe = dw.reshape(ne, q2)
        Ke = np.einsum("eqad,eqbd,eq->eab", G, G, dwe)
        dofs = pb.dofs.reshape(ne, q2, nloc)[:, 0, :]
        rows.append(np.repeat(dofs, nloc, axis=1).ravel())
        cols.append(np.tile(dofs, (1, nloc)).ravel())
        vals.append(Ke.ravel())
        if f is not None:
            fx = np.asarray(f(pb.x[:, 0], pb.x[:, 1]), float) * dw
            np.add.at(load, pb.dofs.ravel(), (pb.values * fx[:, None]).ravel())
    K = scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    K.sum_duplicates()
    return LinearSystem(space, K, load, np.arange(n))


def apply_dirichlet(system: LinearSystem, constrained) -> LinearSystem:
    """Remove homogeneous Dirichlet DOFs (rows and columns)."""
    constrained = np.unique(np.asarray(constrained, dtype=int))
    if constrained.size == 0:
        raise ValueError("the Dirichlet boundary must be non-empty")
    mask = ~np.isin(system.free_dofs, constrained)
    if not mask.any():
        raise ValueError("all degrees of freedom are constrained")
    keep = np.nonzero(mask)[0]
    K = system.stiffness[keep][:, keep].tocsr()
    return LinearSystem(system.space, K, system.load[keep], system.free_dofs[keep])


def solve_linear(K, b, tol: float = 1e-12) -> np.ndarray:
    """Solve an SPD sparse system to relative residual ``tol``."""
    K = scipy.sparse.csc_matrix(K)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b)
    if K.shape[0] <= DIRECT_LIMIT:
        try:
            lu = scipy.sparse.linalg.splu(K)
        except RuntimeError as exc:
            raise SolverError(f"factorization failed: {exc}") from exc
        x = lu.solve(b)
        for _ in range(3):
            r = b - K @ x
            if np.linalg.norm(r) <= tol * bnorm:
                return x
            x = x + lu.solve(r)
        res = np.linalg.norm(b - K @ x) / bnorm
        if res > tol:
            raise SolverError(f"direct solve stalled at relative residual {res:.2e}; "
                              f"condition estimate {_condest(K, lu):.2e}")
        return x
    d = K.diagonal()
    M = scipy.sparse.linalg.LinearOperator(K.shape, matvec=lambda v: v / d)
    x, info = scipy.sparse.linalg.cg(K, b, rtol=tol, maxiter=20 * K.shape[0], M=M)
    if info != 0:
        raise SolverError(f"CG did not converge (info={info})")
    return x


def _condest(K, lu) -> float:
    inv = scipy.sparse.linalg.LinearOperator(K.shape, matvec=lu.solve, rmatvec=lambda v: lu.solve(v, trans="T"))
    return float(scipy.sparse.linalg.onenormest(K) * scipy.sparse.linalg.onenormest(inv))


def solve(system: LinearSystem) -> DiscreteSolution:
    """Solve the reduced system; constrained DOFs are zero in the result."""
    x = solve_linear(system.stiffness, system.load)
    coef = np.zeros(system.space.n_dofs)
    coef[system.free_dofs] = x
    return DiscreteSolution(system.space, coef)


def solve_poisson(space: PolarSplineSpace, f: Callable | None, dirichlet_edges, quad: QuadratureRule = QuadratureRule()) -> DiscreteSolution:
    full = assemble(space, f, quad)
    reduced = apply_dirichlet(full, space.dirichlet_dofs(dirichlet_edges))
    log.debug("solving %d of %d dofs", reduced.free_dofs.size, space.n_dofs)
    return solve(reduced)
