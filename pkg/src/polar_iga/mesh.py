"""Parametric Bezier meshes, quasi-uniformity diagnostics and the corner/ring split."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .splines import KnotVector, support_extension


@dataclass(frozen=True)
class BezierMesh:
    """Tensor grid of parametric elements ``Q[j1, j2]``.

    Element diameters, and hence ``global_h``, are measured in the
    parametric square.
    """

    breakpoints_u: np.ndarray
    breakpoints_v: np.ndarray
    grading_mu: float = 1.0
    kv1: KnotVector | None = None
    kv2: KnotVector | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.breakpoints_u.size - 1, self.breakpoints_v.size - 1

    @property
    def n_elements(self) -> int:
        return self.shape[0] * self.shape[1]

    @property
    def element_sizes(self) -> tuple[np.ndarray, np.ndarray]:
        return np.diff(self.breakpoints_u), np.diff(self.breakpoints_v)

    @property
    def global_h(self) -> float:
        h1, h2 = self.element_sizes
        return float(math.hypot(h1.max(), h2.max()))

    def elements(self):
        """Yield ``(j1, j2, (z1_lo, z1_hi), (z2_lo, z2_hi))``."""
        zu, zv = self.breakpoints_u, self.breakpoints_v
        for j1 in range(zu.size - 1):
            for j2 in range(zv.size - 1):
                yield j1, j2, (zu[j1], zu[j1 + 1]), (zv[j2], zv[j2 + 1])

    def support_extension(self, j1: int, j2: int):
        """Support extension of element ``(j1, j2)`` as a pair of intervals."""
        if self.kv1 is None or self.kv2 is None:
            raise ValueError("mesh was built without knot vectors")
        return support_extension(self.kv1, j1), support_extension(self.kv2, j2)

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["j1", "j2", "z1_lo", "z1_hi", "z2_lo", "z2_hi"])
            for j1, j2, (a1, b1), (a2, b2) in self.elements():
                w.writerow([j1, j2, repr(float(a1)), repr(float(b1)), repr(float(a2)), repr(float(b2))])


def build_mesh(kv1: KnotVector, kv2: KnotVector, mu: float = 1.0) -> BezierMesh:
    return BezierMesh(kv1.breakpoints, kv2.breakpoints, mu, kv1, kv2)


def theta1(mu: float) -> float:
    """Local quasi-uniformity constant ``2^(1/mu) - 1`` of a graded mesh."""
    return 2.0 ** (1.0 / mu) - 1.0


def quasi_uniformity_report(mesh: BezierMesh) -> tuple[float, np.ndarray]:
    """``(theta1, ratios)`` with ``ratios[j] = h1[j] / h1[j+1]``."""
    h1, _ = mesh.element_sizes
    return theta1(mesh.grading_mu), h1[:-1] / h1[1:]


def size_bound_report(mesh: BezierMesh, warn: bool = True) -> np.ndarray:
    """Ratios ``h1[j] / (h * zeta_j^(1 - mu))`` for columns away from the corner.

    ``zeta_j`` is the left breakpoint of column ``j`` (``j >= 1``). Ratios above
    ``1/mu`` trigger a warning; the bound only holds with that constant when
    the right breakpoint is used instead.
    """
    mu = mesh.grading_mu
    z = mesh.breakpoints_u
    h = 1.0 / (z.size - 1)
    h1, _ = mesh.element_sizes
    ratio = h1[1:] / (h * z[1:-1] ** (1.0 - mu))
    bad = np.nonzero(ratio > 1.0 / mu * (1 + 1e-12))[0]
    if warn and bad.size:
        warnings.warn(
            f"size bound h1 <= h zeta^(1-mu)/mu exceeded in {bad.size} column(s), "
            f"max ratio {ratio.max():.4g} vs {1 / mu:.4g}",
            stacklevel=2,
        )
    return ratio


def split_domain(mesh: BezierMesh, p1: int) -> tuple[range, range]:
    """Columns whose support extension touches the collapsed edge, and the rest."""
    ncols = mesh.shape[0]
    if ncols < p1 + 1:
        raise ValueError(f"need at least {p1 + 1} columns for p1={p1}, mesh has {ncols}")
    return range(0, p1 + 1), range(p1 + 1, ncols)
