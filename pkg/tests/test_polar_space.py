import math

import numpy as np
import pytest

from polar_iga.analysis import pacman_problem
from polar_iga.geometry import map_point
from polar_iga.polar_space import build_space
from polar_iga.splines import collocation_matrix


def _vhat_of(space, coef):
    def vhat(z1, z2):
        Z1, Z2 = np.broadcast_arrays(z1, z2)
        v, _, _ = space.eval_function(coef, Z1.ravel(), Z2.ravel())
        return v.reshape(Z1.shape)
    return vhat


@pytest.fixture(scope="module", params=["sector", "lshape"])
def space(request, sector, lshape):
    patch = sector if request.param == "sector" else lshape
    return build_space(patch, (3, 3), (5, 5), 0.4)


def test_dof_count(sector, lshape):
    for patch in (sector, lshape):
        sp = build_space(patch, (2, 2), (5, 5), 1.0)
        n1, n2 = sp.kv1_refined.n, sp.kv2_refined.n
        assert n1 == 6
        assert sp.n_dofs == n1 * n2 - (n2 - 1)


def test_geometry_round_trip(sector, rng):
    sp = build_space(sector, (3, 3), (4, 4), 1.0)
    z = rng.random((100, 2))
    x = sp.point_basis(z[:, 0], z[:, 1]).x
    ref = np.array([map_point(sector, t) for t in z])
    assert np.abs(x - ref).max() < 1e-12


def test_rejects_degree_below_geometry(sector):
    with pytest.raises(ValueError):
        build_space(sector, (2, 1), (5, 5))


def test_collapsed_basis_identity(space):
    z = np.linspace(0, 1, 15)
    Z1, Z2 = (a.ravel() for a in np.meshgrid(z, z, indexing="ij"))
    pb = space.point_basis(Z1, Z2)
    collapsed = np.where(pb.dofs == 0, pb.values, 0.0).sum(1)
    b1 = collocation_matrix(space.kv1_refined, Z1)[:, 0]
    assert np.abs(collapsed - b1).max() < 1e-13


def test_space_basis_partition_and_corner(space, rng):
    for z in rng.random((20, 2)):
        vals = space.eval_space_basis(tuple(z), 1)
        assert sum(v[0] for _, v in vals) == pytest.approx(1.0, abs=1e-13)
        assert len({d for d, _ in vals}) == len(vals)
    at_corner = dict(space.eval_space_basis((0.0, 0.37), 0))
    assert at_corner[0][0] == pytest.approx(1.0, abs=1e-15)
    assert all(abs(v[0]) < 1e-15 for d, v in at_corner.items() if d != 0)


def test_collapsed_value_independent_of_zeta2(space):
    vals = [dict(space.eval_space_basis((0.01, t), 0))[0][0] for t in np.linspace(0, 1, 9)]
    assert max(vals) - min(vals) < 1e-14


def _enumerate_dirichlet(space, edges):
    t = np.linspace(0, 1, 257)
    pts = []
    if "gamma2" in edges:
        pts.append((np.ones_like(t), t))
    if "gamma3" in edges:
        pts.append((t, np.zeros_like(t)))
    if "gamma4" in edges:
        pts.append((t, np.ones_like(t)))
    found = set()
    for z1, z2 in pts:
        pb = space.point_basis(z1, z2)
        found |= set(pb.dofs[np.abs(pb.values) > 1e-14].tolist())
    return found


@pytest.mark.parametrize(
    "edges", [("gamma2",), ("gamma2", "gamma3"), ("gamma2", "gamma4"), ("gamma2", "gamma3", "gamma4")]
)
def test_dirichlet_dofs_match_enumeration(space, edges):
    got = set(space.dirichlet_dofs(edges).tolist())
    assert got == _enumerate_dirichlet(space, edges)


def test_dirichlet_layouts(space):
    n1, n2 = space.kv1_refined.n, space.kv2_refined.n
    assert 0 not in space.dirichlet_dofs(["gamma2"])
    assert 0 in space.dirichlet_dofs(["gamma2", "gamma3"])
    assert space.dirichlet_dofs(["gamma2", "gamma3", "gamma4"]).size == n2 + 2 * (n1 - 2) + 1


def test_dirichlet_rejects_empty_and_unknown(space):
    with pytest.raises(ValueError):
        space.dirichlet_dofs([])
    with pytest.raises(ValueError):
        space.dirichlet_dofs(["gamma1"])


def test_project_constant(space):
    c = space.project(lambda x, y: np.ones_like(x))
    assert np.abs(c - 1).max() < 1e-12


def test_project_reproduces_space_members(space, rng):
    coef = rng.standard_normal(space.n_dofs)
    got = space.project_parametric(_vhat_of(space, coef))
    assert np.abs(got - coef).max() < 1e-9


def test_project_value_at_polar_point(space):
    nu = 0.6
    c = space.project(lambda x, y: np.hypot(x, y) ** nu * np.cos(nu * np.arctan2(y, x)))
    assert c[0] == 0.0
    c = space.project(lambda x, y: 2.5 + np.sin(x) * np.exp(y))
    assert abs(c[0] - 2.5) < 1e-12


def test_projector_idempotent(space, rng):
    for k in range(20):
        a, b, w = rng.standard_normal(3)
        v = lambda x, y: np.sin(a * x + w) * np.cos(b * y) + x * y  # noqa: E731
        c1 = space.project(v)
        c2 = space.project_parametric(_vhat_of(space, c1))
        assert np.abs(c1 - c2).max() < 1e-9


def test_projection_error_decreases(sector):
    prob = pacman_problem()
    errs = []
    g = np.linspace(0.01, 0.99, 40)
    Z1, Z2 = (a.ravel() for a in np.meshgrid(g, g, indexing="ij"))
    for N in (3, 5, 9, 17):
        sp = build_space(sector, (2, 2), (N, N), 1.0)
        c = sp.project(prob.exact_u)
        v, _, x = sp.eval_function(c, Z1, Z2)
        errs.append(np.sqrt(np.mean((v - prob.exact_u(x[:, 0], x[:, 1])) ** 2)))
    assert all(a > b for a, b in zip(errs, errs[1:]))


def test_single_valued_at_polar_point(space, rng):
    coef = rng.standard_normal(space.n_dofs)
    ray = np.linspace(0, 1, 8, endpoint=False)
    vals = [space.eval_function(coef, 1e-14, t)[0][0] for t in ray]
    assert max(vals) - min(vals) < 1e-10
    assert vals[0] == pytest.approx(coef[0], abs=1e-10)


def test_graded_and_uniform_have_same_dof_count(sector):
    for p in (1, 2, 3):
        for N in (3, 9, 17):
            q = (p, max(p, 2))
            assert build_space(sector, q, (N, N), 1.0).n_dofs == build_space(sector, q, (N, N), 0.3).n_dofs


def test_h_property(sector):
    sp = build_space(sector, (2, 2), (9, 9), 0.5)
    assert sp.h == pytest.approx(1 / 8)
    assert math.isclose(sp.mesh.global_h, math.hypot(1 - (7 / 8) ** 2, 1 / 24))
