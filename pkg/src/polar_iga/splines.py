"""Univariate open knot vectors, B-spline evaluation, refinement and dual bases.

Indices are 0-based throughout: basis functions ``0..n-1``, elements
``0..N-2`` (``N`` breakpoints), spans as positions in the knot array.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse

KNOT_TOL = 0.0  # knots are generated exactly; graded meshes produce spans far below 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class KnotVector:
    """A p-open knot vector on [0, 1]."""

    knots: np.ndarray
    degree: int

    def __post_init__(self):
        object.__setattr__(self, "knots", _frozen(self.knots))
        kn, p = self.knots, self.degree
        if p < 0:
            raise ValueError(f"degree must be non-negative, got {p}")
        if kn.ndim != 1 or kn.size < 2 * (p + 1):
            raise ValueError("knot vector too short for its degree")
        if np.any(np.diff(kn) < 0):
            raise ValueError("knots must be non-decreasing")
        if not (np.all(kn[: p + 1] == 0.0) and np.all(kn[-p - 1 :] == 1.0)):
            raise ValueError(f"knot vector is not {p}-open on [0, 1]")
        if np.any(self.multiplicities[1:-1] > p + 1):
            raise ValueError("interior multiplicity exceeds p+1")
        if kn[p + 1] == 0.0 or kn[-p - 2] == 1.0:
            raise ValueError("endpoint multiplicity exceeds p+1")

    @property
    def p(self) -> int:
        return self.degree

    @property
    def n(self) -> int:
        """Number of basis functions."""
        return self.knots.size - self.degree - 1

    basis_count = n

    @property
    def breakpoints(self) -> np.ndarray:
        return self._unique()[0]

    @property
    def multiplicities(self) -> np.ndarray:
        return self._unique()[1]

    def _unique(self):
        kn = self.knots
        starts = np.concatenate([[0], np.nonzero(np.diff(kn) > KNOT_TOL)[0] + 1])
        mult = np.diff(np.concatenate([starts, [kn.size]]))
        return kn[starts], mult

    @property
    def n_elements(self) -> int:
        return self.breakpoints.size - 1

    def element_spans(self) -> np.ndarray:
        """Knot-array span index ``i`` with ``(knots[i], knots[i+1])`` = element."""
        return np.nonzero(np.diff(self.knots) > KNOT_TOL)[0]

    def find_span(self, t) -> np.ndarray:
        """Span index for each t; t = 1 goes to the last nonempty span."""
        t = np.asarray(t, dtype=float)
        spans = self.element_spans()
        idx = np.searchsorted(self.knots[spans], t, side="right") - 1
        return spans[np.clip(idx, 0, spans.size - 1)]

    def greville(self) -> np.ndarray:
        p = self.degree
        if p == 0:
            return 0.5 * (self.knots[:-1] + self.knots[1:])
        return np.array([self.knots[i + 1 : i + p + 1].mean() for i in range(self.n)])

    def __eq__(self, other):
        return (
            isinstance(other, KnotVector)
            and self.degree == other.degree
            and np.array_equal(self.knots, other.knots)
        )

    def __hash__(self):
        return hash((self.degree, self.knots.tobytes()))

    def __repr__(self):
        return f"KnotVector(degree={self.degree}, knots={self.knots.tolist()})"


def make_open_knot_vector(breakpoints: Sequence[float], interior_multiplicities, p: int) -> KnotVector:
    """Build a p-open knot vector from breakpoints.

    ``interior_multiplicities`` is an int (same for all interior breakpoints)
    or one int per interior breakpoint.
    """
    z = np.asarray(breakpoints, dtype=float)
    if z.size < 2 or z[0] != 0.0 or z[-1] != 1.0:
        raise ValueError("breakpoints must start at 0 and end at 1")
    if np.any(np.diff(z) <= 0):
        raise ValueError("breakpoints must be strictly increasing")
    m = np.broadcast_to(np.asarray(interior_multiplicities, dtype=int), (z.size - 2,))
    if np.any(m < 1) or np.any(m > p + 1):
        raise ValueError(f"interior multiplicities must lie in [1, {p + 1}]")
    mult = np.concatenate([[p + 1], m, [p + 1]])
    return KnotVector(np.repeat(z, mult), p)


def uniform_refine(p_target: int, N: int) -> KnotVector:
    """Maximally smooth p-open knot vector with N uniform breakpoints."""
    return graded_refine(p_target, N, 1.0)


def graded_refine(p: int, N: int, mu: float) -> KnotVector:
    """Knot vector with interior breakpoints ``(j h)^(1/mu)``, ``h = 1/(N-1)``."""
    if N < 2:
        raise ValueError(f"need at least 2 breakpoints, got N={N}")
    if p < 1:
        raise ValueError(f"degree must be >= 1, got {p}")
    if not (0.0 < mu <= 1.0):
        raise ValueError(f"grading parameter mu must lie in (0, 1], got {mu}")
    h = 1.0 / (N - 1)
    interior = (np.arange(1, N - 1) * h) ** (1.0 / mu)
    z = np.concatenate([[0.0], interior, [1.0]])
    return make_open_knot_vector(z, 1, p)


def subdivide(kv: KnotVector, p_target: int, n_sub: int) -> KnotVector:
    """Degree-elevate to ``p_target`` and split every element into ``n_sub`` parts.

    Continuity at existing breakpoints is kept (multiplicity grows with the
    degree); new breakpoints are simple knots.
    """
    if p_target < kv.degree:
        raise ValueError(f"cannot lower degree {kv.degree} to {p_target}")
    if n_sub < 1:
        raise ValueError("n_sub must be >= 1")
    z, m = kv.breakpoints, kv.multiplicities
    dp = p_target - kv.degree
    pts, mult = [z[0]], [p_target + 1]
    for j in range(z.size - 1):
        a, b = z[j], z[j + 1]
        for k in range(1, n_sub):
            pts.append(a + (b - a) * k / n_sub)
            mult.append(1)
        if j + 1 < z.size - 1:
            pts.append(b)
            mult.append(min(m[j + 1] + dp, p_target + 1))
    pts.append(1.0)
    mult.append(p_target + 1)
    return KnotVector(np.repeat(pts, mult), p_target)


def support_extension(kv: KnotVector, element_index: int) -> tuple[float, float]:
    """Union of supports of the basis functions active on an element."""
    spans = kv.element_spans()
    if not 0 <= element_index < spans.size:
        raise IndexError(f"element index {element_index} out of range 0..{spans.size - 1}")
    i, p = spans[element_index], kv.degree
    return float(kv.knots[i - p]), float(kv.knots[i + p + 1])


@dataclass(frozen=True)
class BasisEvaluation:
    """Nonzero basis functions at a point: ``values[k, a]`` is the k-th
    derivative of basis function ``first_index + a``."""

    first_index: int
    values: np.ndarray


def basis_funs_ders(kv: KnotVector, t, k: int = 0, spans=None):
    """Vectorized Cox-de Boor evaluation with derivatives.

    Returns ``(spans, ders)`` with ``ders`` of shape ``(m, k+1, p+1)``; the
    active functions at point ``r`` are ``spans[r]-p .. spans[r]``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    p, U = kv.degree, kv.knots
    if spans is None:
        spans = kv.find_span(t)
    spans = np.broadcast_to(np.asarray(spans), t.shape)
    m = t.size
    k = min(k, p)
    ndu = np.zeros((m, p + 1, p + 1))
    ndu[:, 0, 0] = 1.0
    left = np.zeros((m, p + 1))
    right = np.zeros((m, p + 1))
    for j in range(1, p + 1):
        left[:, j] = t - U[spans + 1 - j]
        right[:, j] = U[spans + j] - t
        saved = np.zeros(m)
        for r in range(j):
            ndu[:, j, r] = right[:, r + 1] + left[:, j - r]
            temp = ndu[:, r, j - 1] / ndu[:, j, r]
            ndu[:, r, j] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        ndu[:, j, j] = saved
    ders = np.zeros((m, k + 1, p + 1))
    ders[:, 0, :] = ndu[:, :, p]
    for r in range(p + 1):
        s1, s2 = 0, 1
        a = np.zeros((2, m, p + 1))
        a[0, :, 0] = 1.0
        for kk in range(1, k + 1):
            d = np.zeros(m)
            rk, pk = r - kk, p - kk
            if r >= kk:
                a[s2, :, 0] = a[s1, :, 0] / ndu[:, pk + 1, rk]
                d = a[s2, :, 0] * ndu[:, rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = kk - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, :, j] = (a[s1, :, j] - a[s1, :, j - 1]) / ndu[:, pk + 1, rk + j]
                d = d + a[s2, :, j] * ndu[:, rk + j, pk]
            if r <= pk:
                a[s2, :, kk] = -a[s1, :, kk - 1] / ndu[:, pk + 1, r]
                d = d + a[s2, :, kk] * ndu[:, r, pk]
            ders[:, kk, r] = d
            s1, s2 = s2, s1
    fac = p
    for kk in range(1, k + 1):
        ders[:, kk, :] *= fac
        fac *= p - kk
    return spans, ders


def eval_basis(kv: KnotVector, t: float, max_derivative: int = 0) -> BasisEvaluation:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t={t} outside [0, 1]")
    if max_derivative > kv.degree:
        raise ValueError("max_derivative exceeds degree")
    spans, ders = basis_funs_ders(kv, t, max_derivative)
    return BasisEvaluation(int(spans[0] - kv.degree), ders[0])


def collocation_matrix(kv: KnotVector, t, k: int = 0, sparse: bool = False):
    """Matrix of k-th derivatives of all basis functions at the points t."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    spans, ders = basis_funs_ders(kv, t, k)
    p = kv.degree
    rows = np.repeat(np.arange(t.size), p + 1)
    cols = (spans[:, None] - p + np.arange(p + 1)).ravel()
    vals = ders[:, min(k, p), :].ravel() if k <= p else np.zeros(rows.size)
    M = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(t.size, kv.n))
    return M if sparse else M.toarray()


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True)
class DualBasis:
    """Local L2-dual functionals biorthogonal to the B-splines of ``knot_vector``.

    Functional ``i`` integrates against a degree-p polynomial on the longest
    knot span inside ``supp(B_i)``; that polynomial is the Gram-dual of the
    active B-splines on the span, so ``lambda_i(B_k) = delta_ik``. In boundary
    mode the first and last functionals are point evaluations at 0 and 1.

    Every functional is a weighted sum of point values at ``nodes``;
    ``weights`` is the sparse ``(n, len(nodes))`` matrix of those weights.
    """

    knot_vector: KnotVector
    boundary_mode: bool = True
    nodes: np.ndarray = field(init=False, repr=False)
    weights: scipy.sparse.csr_matrix = field(init=False, repr=False)
    spans: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        kv = self.knot_vector
        p, U, n = kv.degree, kv.knots, kv.n
        gx, gw = gauss_legendre(p + 2)
        spans = np.empty(n, dtype=int)
        for i in range(n):
            cand = np.arange(i, i + p + 1)
            lengths = U[cand + 1] - U[cand]
            spans[i] = cand[np.argmax(lengths > lengths.max() * (1 - 1e-12))]
        nodes = [np.array([0.0, 1.0])]
        rows, cols, vals = [], [], []
        offset = 2
        span_nodes = {}
        for s in np.unique(spans):
            a, b = U[s], U[s + 1]
            x = a + (b - a) * gx
            span_nodes[s] = (offset, x, (b - a) * gw)
            nodes.append(x)
            offset += x.size
        for s, (off, x, w) in span_nodes.items():
            _, B = basis_funs_ders(kv, x, 0, spans=s)
            B = B[:, 0, :]
            gram = (B * w[:, None]).T @ B
            members = np.nonzero(spans == s)[0]
            rhs = np.zeros((p + 1, members.size))
            rhs[members - (s - p), np.arange(members.size)] = 1.0
            coef = np.linalg.solve(gram, rhs)
            phi = B @ coef
            for c, i in enumerate(members):
                rows.append(np.full(x.size, i))
                cols.append(off + np.arange(x.size))
                vals.append(w * phi[:, c])
        rows, cols, vals = map(np.concatenate, (rows, cols, vals))
        if self.boundary_mode:
            keep = (rows != 0) & (rows != n - 1)
            rows = np.concatenate([rows[keep], [0, n - 1]])
            cols = np.concatenate([cols[keep], [0, 1]])
            vals = np.concatenate([vals[keep], [1.0, 1.0]])
        allnodes = np.concatenate(nodes)
        W = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(n, allnodes.size))
        object.__setattr__(self, "nodes", _frozen(allnodes))
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "spans", spans)

    def apply(self, values_at_nodes) -> np.ndarray:
        """All functionals applied to sampled values (leading axis = nodes)."""
        return self.weights @ np.asarray(values_at_nodes)

    def __call__(self, i: int, v: Callable) -> float:
        return dual_functional(self, i, v)


def dual_functional(db: DualBasis, i: int, v: Callable) -> float:
    """Value of functional ``i`` on the function ``v``."""
    if not 0 <= i < db.knot_vector.n:
        raise IndexError(f"functional index {i} out of range")
    row = db.weights.getrow(i)
    x = db.nodes[row.indices]
    fx = np.asarray(v(x), dtype=float) * np.ones_like(x)
    return float(row.data @ fx)


def refinement_matrix(coarse: KnotVector, fine: KnotVector) -> np.ndarray:
    """``T`` with ``B_coarse_i = sum_j T[i, j] B_fine_j``.

    Raises if the coarse space is not contained in the fine one.
    """
    db = DualBasis(fine, boundary_mode=False)
    T = (db.weights @ collocation_matrix(coarse, db.nodes)).T
    T[np.abs(T) < 1e-15] = 0.0
    # verify exact representation on a sample set
    t = np.linspace(0.0, 1.0, 4 * fine.n + 7)
    err = np.abs(collocation_matrix(coarse, t) - collocation_matrix(fine, t) @ T.T).max()
    if err > 1e-10:
        raise ValueError(f"fine knot vector does not contain the coarse space (err={err:.2e})")
    return T
