"""Command line entry point: ``polar-iga run|export-geometry|mesh-info``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import convergence_study, get_problem, grading_parameter, solve_level
from .geometry import save_patch
from .mesh import quasi_uniformity_report, split_domain
from .polar_space import build_space
from .solver import GeometryError, QuadratureRule, SolverError

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

EMIT_FLAGS = ("mesh_csv", "report_csv", "report_json", "solution_samples")
CONFIG_PROBLEMS = ("pacman", "lshape")

PLOT_STUB = '''\
"""Plot error-vs-h curves from report.csv (needs matplotlib)."""
import csv
import matplotlib.pyplot as plt

with open("report.csv") as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
h = [float(r["h"]) for r in rows]
for key in ("err_h1", "err_l2"):
    plt.loglog(h, [float(r[key]) for r in rows], "o-", label=key)
plt.xlabel("h")
plt.legend()
plt.gca().invert_xaxis()
plt.savefig("convergence.png", dpi=150)
'''


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    problem: str
    degree: int
    grading: str | float = "uniform"
    levels: tuple[int, ...] = (5, 9, 17, 33)
    quadrature_nodes: int = 6
    output_dir: Path = Path("output")
    emit: dict = field(default_factory=lambda: {"report_csv": True, "report_json": True,
                                               "mesh_csv": False, "solution_samples": False})

    @classmethod
    def from_mapping(cls, doc: dict, base: Path | None = None) -> "RunConfig":
        known = {"problem", "degree", "grading", "levels", "quadrature_nodes", "output_dir", "emit"}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "problem" not in doc or "degree" not in doc:
            raise ConfigError("config needs 'problem' and 'degree'")
        problem = doc["problem"]
        if problem not in CONFIG_PROBLEMS:
            raise ConfigError(f"problem must be one of {CONFIG_PROBLEMS}, got {problem!r}")
        degree = doc["degree"]
        if isinstance(degree, bool) or not isinstance(degree, int) or degree < 1:
            raise ConfigError(f"degree must be an integer >= 1, got {degree!r}")
        grading = doc.get("grading", "uniform")
        if isinstance(grading, str):
            if grading not in ("uniform", "auto"):
                raise ConfigError(f"grading must be 'uniform', 'auto' or a number in (0, 1], got {grading!r}")
        elif isinstance(grading, (int, float)) and not isinstance(grading, bool):
            grading = float(grading)
            if not 0.0 < grading <= 1.0:
                raise ConfigError(f"grading must lie in (0, 1], got {grading}")
        else:
            raise ConfigError(f"invalid grading {grading!r}")
        levels = doc.get("levels", [5, 9, 17, 33])
        if (not isinstance(levels, list) or not levels
                or not all(isinstance(n, int) and not isinstance(n, bool) and n >= 2 for n in levels)
                or any(a >= b for a, b in zip(levels, levels[1:]))):
            raise ConfigError("levels must be a nonempty strictly increasing list of integers >= 2")
        q = doc.get("quadrature_nodes", 6)
        if isinstance(q, bool) or not isinstance(q, int) or q < 1:
            raise ConfigError(f"quadrature_nodes must be a positive integer, got {q!r}")
        out = Path(doc.get("output_dir", "output"))
        if base is not None and not out.is_absolute():
            out = base / out
        emit = cls.__dataclass_fields__["emit"].default_factory()
        user_emit = doc.get("emit", {})
        if isinstance(user_emit, list):
            user_emit = {k: True for k in user_emit}
        if not isinstance(user_emit, dict) or set(user_emit) - set(EMIT_FLAGS):
            raise ConfigError(f"emit flags must be a subset of {EMIT_FLAGS}")
        emit.update({k: bool(v) for k, v in user_emit.items()})
        return cls(problem, degree, grading, tuple(levels), q, out, emit)

    @property
    def mu(self) -> float:
        if self.grading == "uniform":
            return 1.0
        if self.grading == "auto":
            return grading_parameter(get_problem(self.problem).nu, self.degree)
        return float(self.grading)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            doc = tomllib.loads(raw.decode())
        else:
            doc = json.loads(raw)
    except Exception as exc:  # parse errors from either backend
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    return RunConfig.from_mapping(doc, base=path.parent)


def _write_samples(path: Path, sol, problem, n: int = 41) -> None:
    z1 = np.linspace(0.0, 1.0, n)
    z2 = np.linspace(0.0, 1.0, n)
    Z1, Z2 = (a.ravel() for a in np.meshgrid(z1, z2, indexing="ij"))
    val, _ = sol.evaluate((Z1, Z2), gradient=False)
    x = sol.space.point_basis(Z1, Z2).x
    exact = problem.exact_u(x[:, 0], x[:, 1])
    lines = ["z1,z2,x,y,u_h,u_exact"]
    for row in zip(Z1, Z2, x[:, 0], x[:, 1], val, exact):
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    problem = get_problem(cfg.problem)
    grading = cfg.grading if isinstance(cfg.grading, str) else float(cfg.grading)
    if len(cfg.levels) < 2:
        raise ConfigError("a convergence run needs at least two levels")
    report = convergence_study(problem, cfg.degree, grading, cfg.levels, cfg.quadrature_nodes)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    if cfg.emit.get("report_csv"):
        report.to_csv(out / "report.csv")
        (out / "plot_convergence.py").write_text(PLOT_STUB)
    if cfg.emit.get("report_json"):
        report.to_json(out / "report.json")
    if cfg.emit.get("mesh_csv") or cfg.emit.get("solution_samples"):
        sol, _, _ = solve_level(problem, report.degree, cfg.levels[-1], report.mu, QuadratureRule(cfg.quadrature_nodes))
        if cfg.emit.get("mesh_csv"):
            sol.space.mesh.to_csv(out / "mesh.csv")
        if cfg.emit.get("solution_samples"):
            _write_samples(out / "solution_samples.csv", sol, problem)
    print(report.header_line())
    print(f"{'level':>5} {'N':>5} {'h':>10} {'ndofs':>7} {'err_l2':>11} {'err_h1':>11} {'rate_l2':>8} {'rate_h1':>8}")
    for r in report.rows:
        rl2 = "" if r.rate_l2 is None else f"{r.rate_l2:.3f}"
        rh1 = "" if r.rate_h1 is None else f"{r.rate_h1:.3f}"
        print(f"{r.level:>5} {r.N:>5} {r.h:>10.4e} {r.ndofs:>7} {r.err_l2:>11.4e} {r.err_h1:>11.4e} {rl2:>8} {rh1:>8}")
    if len(report.rows) >= 3:
        s = report.slopes
        print(f"least-squares slopes (last 3 levels): L2 {s['l2']:.3f}  H1 {s['h1']:.3f}")
    return 0


def cmd_export_geometry(args) -> int:
    try:
        patch = get_problem(args.problem).patch()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        save_patch(patch, args.path)
    except OSError as exc:
        print(f"error: cannot write {args.path}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.path}")
    return 0


def cmd_mesh_info(args) -> int:
    cfg = load_config(args.config)
    problem = get_problem(cfg.problem)
    patch = problem.patch()
    mu = cfg.mu
    degree = (cfg.degree, max(cfg.degree, patch.kv2.degree))
    print(f"# problem={cfg.problem} degree={degree[0]},{degree[1]} mu={mu!r}")
    print(f"{'N':>5} {'elements':>9} {'global_h':>10} {'ndofs':>7} {'theta1':>9} {'min_ratio':>10} {'max_ratio':>10} {'corner':>7} {'ring':>5}")
    for N in cfg.levels:
        space = build_space(patch, degree, (N, N), mu)
        mesh = space.mesh
        th, ratios = quasi_uniformity_report(mesh)
        rmin = ratios.min() if ratios.size else math.nan
        rmax = ratios.max() if ratios.size else math.nan
        try:
            corner, ring = split_domain(mesh, degree[0])
            cr = (len(corner), len(ring))
        except ValueError:
            cr = ("-", "-")
        print(f"{N:>5} {mesh.n_elements:>9} {mesh.global_h:>10.4e} {space.n_dofs:>7} {th:>9.4g} "
              f"{rmin:>10.4g} {rmax:>10.4g} {cr[0]:>7} {cr[1]:>5}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polar-iga", description="Isogeometric Poisson solver on polar domains with corners.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a convergence study from a JSON or TOML config")
    r.add_argument("config")
    r.set_defaults(func=cmd_run)
    e = sub.add_parser("export-geometry", help="write a problem's polar patch as JSON")
    e.add_argument("problem")
    e.add_argument("path")
    e.set_defaults(func=cmd_export_geometry)
    m = sub.add_parser("mesh-info", help="print mesh diagnostics for every level of a config")
    m.add_argument("config")
    m.set_defaults(func=cmd_mesh_info)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, GeometryError, FloatingPointError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
