import math
import warnings

import numpy as np
import pytest

from polar_iga.mesh import build_mesh, quasi_uniformity_report, size_bound_report, split_domain, theta1
from polar_iga.splines import graded_refine, uniform_refine


def test_build_mesh_counts():
    m = build_mesh(uniform_refine(1, 3), uniform_refine(1, 3))
    assert m.n_elements == 4
    assert len(list(m.elements())) == 4


def test_graded_column_widths_and_global_h():
    m = build_mesh(graded_refine(2, 5, 0.5), uniform_refine(2, 5), 0.5)
    h1, h2 = m.element_sizes
    np.testing.assert_allclose(h1, [0.0625, 0.1875, 0.3125, 0.4375], atol=1e-15)
    assert h1.sum() == pytest.approx(1.0) and h2.sum() == pytest.approx(1.0)
    assert m.global_h == pytest.approx(math.hypot(0.4375, 0.25), abs=1e-15)


def test_theta_examples():
    m = build_mesh(graded_refine(2, 9, 0.5), uniform_refine(2, 3), 0.5)
    th, ratios = quasi_uniformity_report(m)
    assert th == 3.0
    assert ratios[0] == pytest.approx(1 / 3, abs=1e-14)
    m1 = build_mesh(uniform_refine(2, 17), uniform_refine(2, 3), 1.0)
    _, r1 = quasi_uniformity_report(m1)
    np.testing.assert_allclose(r1, 1.0, rtol=0, atol=1e-12)


@pytest.mark.parametrize("mu", [0.15, 0.3, 0.54, 0.8])
@pytest.mark.parametrize("N", [3, 9, 40, 129])
def test_quasi_uniformity_bounds_and_monotonicity(mu, N):
    m = build_mesh(graded_refine(1, N, mu), uniform_refine(1, 2), mu)
    th, r = quasi_uniformity_report(m)
    assert np.all(r >= 1 / th * (1 - 1e-12)) and np.all(r <= th * (1 + 1e-12))
    assert np.all(np.diff(r) >= -1e-13)
    if r.size > 1:
        assert r[-1] > r[0]


@pytest.mark.parametrize("mu", [0.2, 0.5, 0.9])
def test_size_bound_right_endpoint(mu):
    kv = graded_refine(1, 33, mu)
    z = kv.breakpoints
    h = 1 / 32
    h1 = np.diff(z)
    assert np.all(h1 <= h * z[1:] ** (1 - mu) / mu * (1 + 1e-12))


@pytest.mark.parametrize("mu", [0.2, 0.5, 0.9])
def test_size_bound_left_endpoint_with_derived_constant(mu):
    m = build_mesh(graded_refine(1, 33, mu), uniform_refine(1, 2), mu)
    ratio = size_bound_report(m, warn=False)
    assert np.all(ratio <= 2 ** (1 / mu - 1) / mu * (1 + 1e-12))


def test_size_bound_warns_with_plain_constant():
    m = build_mesh(graded_refine(1, 5, 0.5), uniform_refine(1, 2), 0.5)
    with pytest.warns(UserWarning, match="size bound"):
        size_bound_report(m)


def test_size_bound_silent_on_uniform():
    m = build_mesh(uniform_refine(1, 9), uniform_refine(1, 2), 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        size_bound_report(m)


def test_theta1_formula():
    assert theta1(1.0) == 1.0
    assert theta1(0.25) == 15.0


def _mesh(N, p):
    return build_mesh(uniform_refine(p, N), uniform_refine(1, 2))


def test_split_domain_examples():
    corner, ring = split_domain(_mesh(10, 2), 2)
    assert list(corner) == [0, 1, 2]
    assert list(ring) == list(range(3, 9))
    corner, ring = split_domain(_mesh(3, 1), 1)
    assert list(corner) == [0, 1] and list(ring) == []
    corner, ring = split_domain(_mesh(20, 3), 3)
    assert list(ring) == list(range(4, 19))
    assert set(corner).isdisjoint(ring) and len(corner) + len(ring) == 19


def test_split_domain_too_small():
    with pytest.raises(ValueError):
        split_domain(_mesh(3, 2), 2)


def test_support_extension_on_mesh():
    m = build_mesh(uniform_refine(2, 5), uniform_refine(1, 3))
    assert m.support_extension(0, 1) == ((0.0, 0.75), (0.0, 1.0))


def test_mesh_csv(tmp_path):
    m = build_mesh(graded_refine(2, 4, 0.5), uniform_refine(2, 3), 0.5)
    path = tmp_path / "mesh.csv"
    m.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "j1,j2,z1_lo,z1_hi,z2_lo,z2_hi"
    assert len(lines) == 1 + m.n_elements
    first = [float(v) for v in lines[1].split(",")]
    assert first[:4] == [0, 0, 0.0, (1 / 3) ** 2]
