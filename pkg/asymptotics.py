"""
Rescaled nodal regions and scaling diagnostics along a p-sweep.

Region i of u is blown up around its extremum:

    z_i(x) = (-1)^i u(x / lam_i) / M_i,   lam_i = M_i^{(p-1)/2},

so that z_i(s_i lam_i) = 1 and every z_i should approach the bubble U.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from limit_problem import LimitProfile
from radial_solver import (
    RadialSolution,
    check_pointwise_bounds,
    energy_per_region,
    region_bounds,
    region_quadrature,
    sphere_area,
)

logger = logging.getLogger(__name__)

DEFAULT_RADIUS = 5.0
DEFAULT_INNER_CUT = 0.1

INCREASING = ("A_", "ratio_", "M_")
DECREASING = ("B_", "C_", "R_", "dist0_", "dist1_")


class EmptyWindowError(ValueError):
    """The comparison window does not meet the rescaled domain."""


Evaluator = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(eq=False)
class RescaledProfile:
    dim: int
    region_index: int
    extremum: float
    scale_factor: float
    x_lower: float
    x_upper: float
    critical_x: float
    evaluator: Evaluator = field(repr=False)
    x_grid: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    z_values: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    def evaluate(self, x) -> tuple[np.ndarray, np.ndarray]:
        return self.evaluator(np.atleast_1d(np.asarray(x, dtype=float)))


def rescale_region(sol: RadialSolution, i: int) -> RescaledProfile:
    """z_i on the tail set (r_i lam_i, lam_i), r_0 = 0."""
    if not 0 <= i < sol.m:
        raise ValueError(f"region index must lie in [0, {sol.m - 1}], got {i}")
    M = sol.nodes.extrema[i]
    lam = M ** ((sol.p - 1.0) / 2.0)
    sign = -1.0 if i % 2 else 1.0
    inner = 0.0 if i == 0 else sol.nodes.nodal_radii[i - 1]

    def evaluator(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        u, du = sol.profile.evaluate(x / lam)
        return sign * u / M, sign * du / (M * lam)

    grid = sol.profile.grid
    grid = grid[(grid >= inner) & (grid <= 1.0)]
    z_values, _ = evaluator(grid * lam)
    return RescaledProfile(
        dim=sol.dim,
        region_index=i,
        extremum=M,
        scale_factor=lam,
        x_lower=inner * lam,
        x_upper=lam,
        critical_x=sol.nodes.critical_radii[i] * lam,
        evaluator=evaluator,
        x_grid=grid * lam,
        z_values=z_values,
    )


@dataclass(frozen=True)
class ProfileDistance:
    c0: float
    c1: float
    window: tuple[float, float]


def profile_distance(
    z: RescaledProfile,
    R: float = DEFAULT_RADIUS,
    inner_cut: float | None = None,
    points: int = 4001,
) -> ProfileDistance:
    """sup |z - U| and sup |z' - U'| over inner_cut <= |x| <= R inside the domain."""
    if inner_cut is None:
        inner_cut = 0.0 if z.region_index == 0 else DEFAULT_INNER_CUT
    if not R > inner_cut >= 0.0:
        raise ValueError(f"need R > inner_cut >= 0, got R={R}, inner_cut={inner_cut}")
    if z.region_index > 0 and inner_cut <= 0.0:
        raise ValueError("regions away from the origin need inner_cut > 0")
    lo = max(inner_cut, z.x_lower)
    hi = min(R, z.x_upper)
    if not hi > lo:
        raise EmptyWindowError(
            f"window [{inner_cut}, {R}] misses rescaled domain ({z.x_lower:.4g}, {z.x_upper:.4g})"
        )
    x = np.linspace(lo, hi, points)
    values, slopes = z.evaluate(x)
    bubble = LimitProfile(z.dim)
    return ProfileDistance(
        c0=float(np.max(np.abs(values - bubble.U(x)))),
        c1=float(np.max(np.abs(slopes - bubble.dU(x)))),
        window=(lo, hi),
    )


@dataclass(frozen=True)
class RescaledEnergy:
    region_index: int
    rescaled_gradient: float
    original_gradient: float
    factor: float

    @property
    def residual(self) -> float:
        mapped = self.rescaled_gradient / self.factor
        return abs(mapped - self.original_gradient) / abs(self.original_gradient)


def rescaled_energy(sol: RadialSolution, i: int) -> RescaledEnergy:
    """int |grad z_i|^2 over the rescaled region, and the factor M^{(N-2)(p-1)/2 - 2} linking it to u."""
    z = rescale_region(sol, i)
    N = sol.dim
    a, b, floor = region_bounds(sol, i)
    r, w = region_quadrature(a, b, floor)
    x, wx = r * z.scale_factor, w * z.scale_factor
    _, dz = z.evaluate(x)
    rescaled = sphere_area(N) * float(np.sum(wx * x ** (N - 1) * dz**2))
    factor = z.extremum ** ((N - 2) * (sol.p - 1.0) / 2.0 - 2.0)
    original = energy_per_region(sol)[i].gradient
    return RescaledEnergy(i, rescaled, original, factor)


def diagnostics_row(sol: RadialSolution, alpha: float = 0.25, R: float = DEFAULT_RADIUS) -> dict[str, float]:
    """One sweep row: scaling quantities, distances to U, energies and potential sup."""
    p, m = sol.p, sol.m
    half = (p - 1.0) / 2.0
    r = sol.nodes.nodal_radii
    s = sol.nodes.critical_radii
    M = sol.nodes.extrema
    row: dict[str, float] = {"p": p}
    for i in range(m):
        row[f"M_{i}"] = M[i]
    for i in range(1, m):
        row[f"A_{i}"] = r[i - 1] * M[i - 1] ** half
        row[f"B_{i}"] = s[i] * M[i] ** half
        row[f"C_{i}"] = r[i - 1] * M[i] ** half
        row[f"R_{i}"] = s[i] / r[i]
        row[f"ratio_{i - 1}"] = M[i - 1] / M[i]
    for i in range(m):
        z = rescale_region(sol, i)
        try:
            dist = profile_distance(z, R)
            row[f"dist0_{i}"], row[f"dist1_{i}"] = dist.c0, dist.c1
        except EmptyWindowError:
            row[f"dist0_{i}"] = row[f"dist1_{i}"] = math.nan
    for energy in energy_per_region(sol):
        row[f"energy_{energy.index}"] = energy.gradient
    bounds = check_pointwise_bounds(sol, alpha)
    row["max_pf"] = bounds.get("potential_sup").value
    row["derivative_constant"] = bounds.get("derivative_constant").value
    row["first_region_margin"] = bounds.get("first_region").margin
    return row


@dataclass
class SweepDiagnostics:
    dim: int
    nodal_count: int
    rows: list[dict[str, float]]

    def __post_init__(self):
        ps = [row["p"] for row in self.rows]
        if any(b <= a for a, b in zip(ps, ps[1:])):
            raise ValueError(f"sweep rows must have strictly increasing p, got {ps}")

    @property
    def columns(self) -> list[str]:
        names: list[str] = []
        for row in self.rows:
            names.extend(k for k in row if k not in names)
        return names

    def trends(self) -> dict[str, bool]:
        """Monotonicity of each tracked column over the last three sweep points."""
        if len(self.rows) < 3:
            return {}
        tail = self.rows[-3:]
        flags = {}
        for name in self.columns:
            if name.startswith(INCREASING):
                sign = 1.0
            elif name.startswith(DECREASING):
                sign = -1.0
            else:
                continue
            values = [row.get(name, math.nan) for row in tail]
            if any(math.isnan(v) for v in values):
                continue
            flags[name] = all(sign * (b - a) > 0 for a, b in zip(values, values[1:]))
        return flags

    @property
    def violations(self) -> list[str]:
        return [name for name, ok in self.trends().items() if not ok]

    def to_csv(self, path: Path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=self.columns, restval="")
            writer.writeheader()
            writer.writerows(self.rows)
        return path

    def write_plot_data(self, directory: Path, columns: list[str] | None = None) -> list[Path]:
        """Two-column (p, value) files, one per column."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for name in columns or [c for c in self.columns if c != "p"]:
            path = directory / f"N{self.dim}_m{self.nodal_count}_{name}.dat"
            lines = [f"{row['p']!r} {row[name]!r}" for row in self.rows if name in row]
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            written.append(path)
        return written


def sweep_diagnostics(solutions: list[RadialSolution], alpha: float = 0.25) -> SweepDiagnostics:
    if len(solutions) < 3:
        raise ValueError(f"need at least three sweep points, got {len(solutions)}")
    first = solutions[0]
    if any(s.dim != first.dim or s.m != first.m for s in solutions):
        raise ValueError("sweep solutions must share (N, m)")
    rows = [diagnostics_row(sol, alpha) for sol in solutions]
    diagnostics = SweepDiagnostics(first.dim, first.m, rows)
    if diagnostics.violations:
        logger.info("trend violations for N=%s m=%s: %s", first.dim, first.m, diagnostics.violations)
    return diagnostics
