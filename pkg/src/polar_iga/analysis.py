"""Manufactured corner-singularity problems, error norms and convergence studies."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .geometry import PolarPatch, make_circular_sector, make_l_shape
from .polar_space import build_space
from .solver import DiscreteSolution, QuadratureRule, solve_poisson


def polar_angle(x, y, omega: float) -> np.ndarray:
    """Angle of ``(x, y)`` in ``[0, omega]``, measured counterclockwise from the x-axis.

    Angles past the middle of the excluded wedge wrap to negative values, so
    points just outside either edge stay close to it.
    """
    phi = np.mod(np.arctan2(y, x), 2 * np.pi)
    return np.where(phi > 0.5 * (omega + 2 * np.pi), phi - 2 * np.pi, phi)


@dataclass(frozen=True)
class ManufacturedProblem:
    """``-Laplace(u) = f`` on a polar patch with known solution ``u``.

    ``exact_grad`` returns an ``(m, 2)`` array. Neumann data on
    ``neumann_edges`` is homogeneous by construction of ``u``.
    """

    name: str
    patch_factory: Callable[[], PolarPatch]
    omega: float
    nu: float
    exact_u: Callable
    exact_grad: Callable
    rhs_f: Callable
    dirichlet_edges: tuple[str, ...]
    neumann_edges: tuple[str, ...] = ()
    sobolev_s0: float | None = None
    metadata: dict = field(default_factory=dict)

    def patch(self) -> PolarPatch:
        return self.patch_factory()


def _polar_frame(x, y, omega):
    r = np.hypot(x, y)
    phi = polar_angle(x, y, omega)
    return r, phi, np.cos(phi), np.sin(phi)


def pacman_problem(nu: float = 0.6, omega: float = 5 * math.pi / 3) -> ManufacturedProblem:
    """``u = r^nu cos(nu phi) (1 - r)`` on the sector of angle ``omega``."""

    def u(x, y):
        r, phi, _, _ = _polar_frame(x, y, omega)
        return r**nu * np.cos(nu * phi) * (1 - r)

    def grad(x, y):
        r, phi, c, s = _polar_frame(x, y, omega)
        g_r = nu * r ** (nu - 1) - (nu + 1) * r**nu  # d/dr of r^nu (1 - r)
        ur = g_r * np.cos(nu * phi)
        uphi = -(r ** (nu - 1)) * (1 - r) * nu * np.sin(nu * phi)  # (1/r) du/dphi
        return np.stack([ur * c - uphi * s, ur * s + uphi * c], axis=-1)

    def f(x, y):
        r, phi, _, _ = _polar_frame(x, y, omega)
        return (2 * nu + 1) * r ** (nu - 1) * np.cos(nu * phi)

    return ManufacturedProblem(
        "pacman", lambda: make_circular_sector(omega), omega, nu, u, grad, f,
        ("gamma2",), ("gamma3", "gamma4"), 1 + nu, {"beta": 1 - nu},
    )


def lshape_problem(nu: float = 1.0 / 3.0) -> ManufacturedProblem:
    """``u = r^nu sin(nu phi) (1 - x^2)(1 - y^2)`` on the L-shaped domain."""
    omega = 1.5 * math.pi

    def parts(x, y):
        r, phi, c, s = _polar_frame(x, y, omega)
        sv = r**nu * np.sin(nu * phi)
        a = nu * r ** (nu - 1)
        gs = np.stack(
            [a * (np.sin(nu * phi) * c - np.cos(nu * phi) * s), a * (np.sin(nu * phi) * s + np.cos(nu * phi) * c)],
            axis=-1,
        )
        q = (1 - x**2) * (1 - y**2)
        gq = np.stack([-2 * x * (1 - y**2), -2 * y * (1 - x**2)], axis=-1)
        return sv, gs, q, gq

    def u(x, y):
        r, phi, _, _ = _polar_frame(x, y, omega)
        return r**nu * np.sin(nu * phi) * (1 - x**2) * (1 - y**2)

    def grad(x, y):
        sv, gs, q, gq = parts(x, y)
        return q[..., None] * gs + sv[..., None] * gq

    def f(x, y):
        # r^nu sin(nu phi) is harmonic
        sv, gs, _, gq = parts(x, y)
        return 2 * sv * ((1 - x**2) + (1 - y**2)) - 2 * (gs * gq).sum(-1)

    return ManufacturedProblem(
        "lshape", make_l_shape, omega, nu, u, grad, f,
        ("gamma2", "gamma3"), ("gamma4",), 1 + nu, {"beta": 1 - nu},
    )


def zero_problem(omega: float = 5 * math.pi / 3) -> ManufacturedProblem:
    """Homogeneous data; the discrete solution must vanish."""
    zero = lambda x, y: np.zeros_like(np.asarray(x, float))  # noqa: E731
    return ManufacturedProblem(
        "zero", lambda: make_circular_sector(omega), omega, 1.0, zero,
        lambda x, y: np.zeros(np.shape(x) + (2,)), zero, ("gamma2",), ("gamma3", "gamma4"),
    )


PROBLEMS = {"pacman": pacman_problem, "lshape": lshape_problem, "zero": zero_problem}


def get_problem(name: str) -> ManufacturedProblem:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None


def grading_parameter(nu: float, p: int) -> float:
    """Grading exponent ``min(0.9 nu / p, 1)``, which keeps ``mu`` strictly below ``nu / p``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return min(0.9 * nu / p, 1.0)


def error_norms(solution: DiscreteSolution, problem: ManufacturedProblem, quad: QuadratureRule = QuadratureRule()):
    """``(L2, H1 seminorm, H1)`` errors, integrated on the physical domain."""
    e0 = e1 = 0.0
    c = solution.coefficients
    for _, pb, wq in solution.space.column_quadrature(quad.nodes_per_direction):
        cl = c[pb.dofs]
        uh = (cl * pb.values).sum(1)
        guh = np.einsum("mk,mkd->md", cl, pb.physical_gradients())
        x, y = pb.x[:, 0], pb.x[:, 1]
        dw = wq * np.abs(pb.det)
        e0 += float(np.dot(dw, (uh - problem.exact_u(x, y)) ** 2))
        e1 += float(np.dot(dw, ((guh - problem.exact_grad(x, y)) ** 2).sum(1)))
    return math.sqrt(e0), math.sqrt(e1), math.sqrt(e0 + e1)


@dataclass(frozen=True)
class LevelResult:
    level: int
    N: int
    h: float
    ndofs: int
    h_ref: float
    err_l2: float
    err_h1: float
    rate_l2: float | None = None
    rate_h1: float | None = None


@dataclass(frozen=True)
class ConvergenceReport:
    problem: str
    degree: tuple[int, int]
    mu: float
    quadrature: int
    rows: tuple[LevelResult, ...]

    @property
    def slopes(self) -> dict[str, float]:
        return {"l2": fitted_slope(self, "err_l2"), "h1": fitted_slope(self, "err_h1")}

    def header_line(self) -> str:
        return (f"# problem={self.problem} degree={self.degree[0]},{self.degree[1]} "
                f"mu={self.mu!r} quadrature={self.quadrature}")

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(self.header_line() + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "h", "ndofs", "err_l2", "err_h1", "rate_l2", "rate_h1"])
        fmt = lambda v: "" if v is None else repr(float(v))  # noqa: E731
        for r in self.rows:
            w.writerow([r.level, fmt(r.h), r.ndofs, fmt(r.err_l2), fmt(r.err_h1), fmt(r.rate_l2), fmt(r.rate_h1)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "degree": list(self.degree),
            "mu": self.mu,
            "quadrature": self.quadrature,
            "levels": [asdict(r) for r in self.rows],
            "slopes": self.slopes,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def fitted_slope(report: ConvergenceReport, key: str, last: int = 3) -> float:
    """Least-squares slope of ``log(err)`` against ``log(h)`` over the finest ``last`` levels."""
    rows = report.rows[-last:]
    if len(rows) < 2:
        raise ValueError("need at least two levels for a slope")
    lh = np.log([r.h for r in rows])
    le = np.log([getattr(r, key) for r in rows])
    return float(np.polyfit(lh, le, 1)[0])


def _rates(rows: list[LevelResult]) -> tuple[LevelResult, ...]:
    out = [rows[0]]
    for prev, cur in zip(rows, rows[1:]):
        lh = math.log(prev.h / cur.h)
        out.append(LevelResult(cur.level, cur.N, cur.h, cur.ndofs, cur.h_ref, cur.err_l2, cur.err_h1,
                               math.log(prev.err_l2 / cur.err_l2) / lh, math.log(prev.err_h1 / cur.err_h1) / lh))
    return tuple(out)


def _thread_count(n_jobs: int) -> int:
    env = os.environ.get("POLAR_IGA_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, n_jobs))


def solve_level(problem: ManufacturedProblem, degree, N: int, mu: float, quad: QuadratureRule):
    """Solve on an ``N x N`` breakpoint grid; returns ``(solution, err_l2, err_h1)``."""
    space = build_space(problem.patch(), degree, (N, N), mu)
    sol = solve_poisson(space, problem.rhs_f, problem.dirichlet_edges, quad)
    l2, h1, _ = error_norms(sol, problem, quad)
    return sol, l2, h1


def convergence_study(
    problem: ManufacturedProblem,
    p: int,
    grading: float | str | None = None,
    levels: Sequence[int] = (5, 9, 17, 33),
    quadrature: int | None = None,
) -> ConvergenceReport:
    """Errors and rates over the breakpoint counts ``levels``.

    ``grading`` is a fixed ``mu``, ``"auto"`` for :func:`grading_parameter`,
    or ``None``/``"uniform"`` for uniform meshes. Direction 2 uses degree
    ``max(p, geometry degree)`` so the boundary stays exact.
    """
    if grading is None or grading == "uniform":
        mu = 1.0
    elif grading == "auto":
        mu = grading_parameter(problem.nu, p)
    else:
        mu = float(grading)
    if not 0.0 < mu <= 1.0:
        raise ValueError(f"grading mu must lie in (0, 1], got {mu}")
    levels = list(levels)
    if len(levels) < 2 or sorted(set(levels)) != levels:
        raise ValueError("levels must be at least two strictly increasing breakpoint counts")
    patch = problem.patch()
    degree = (p, max(p, patch.kv2.degree))
    quad = QuadratureRule(quadrature or max(6, p + 3))

    def run(item):
        i, N = item
        sol, l2, h1 = solve_level(problem, degree, N, mu, quad)
        # h is the largest parametric element diameter; h_ref = 1/(N-1) is the grading parameter
        return LevelResult(i, N, sol.space.mesh.global_h, sol.space.n_dofs, sol.space.h, l2, h1)

    with ThreadPoolExecutor(_thread_count(len(levels))) as ex:
        rows = list(ex.map(run, enumerate(levels)))
    return ConvergenceReport(problem.name, degree, mu, quad.nodes_per_direction, _rates(rows))
