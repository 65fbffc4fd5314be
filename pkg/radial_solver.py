"""
Radial nodal solutions of the Lane-Emden problem on the unit ball.

The initial value problem

    u'' + (N-1)/r u' + |u|^{p-1} u = 0,   u(0) = 1,  u'(0) = 0

is integrated in the log-radius variable t = log r with state (u, r u') and
rescaled at its m-th zero R:

    u_m(r) = R^{2/(p-1)} u(R r),

which is the radial solution on the unit ball with exactly m nodal regions
and u_m(0) > 0. No boundary-value shooting is involved.
"""

from __future__ import annotations

import csv
import functools
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import bisect, brentq
from scipy.special import gamma as gamma_fn

logger = logging.getLogger(__name__)

TAYLOR_RADIUS = 1e-6
GAUSS_ORDER = 16
PANEL_WIDTH = 0.1  # in log r
DEGENERATE_GAP = 5e-3


class InvalidProblemError(ValueError):
    """Raised for (N, p, m) outside the admissible range."""


class RadialSolverError(RuntimeError):
    """Base class for failures while integrating or analysing a profile."""


class IntegrationError(RadialSolverError):
    """Step-size control of the IVP integrator did not converge."""


class BlowUpError(RadialSolverError):
    """|u| exceeded the configured ceiling."""

    def __init__(self, radius: float, ceiling: float):
        super().__init__(f"|u| exceeded {ceiling:g} at r = {radius:.6g}")
        self.radius = radius
        self.ceiling = ceiling


class InsufficientDomainError(RadialSolverError):
    """Fewer sign changes than requested; the caller should enlarge r_max."""


class NodalStructureError(RadialSolverError):
    """Zeros and critical points do not interlace as expected."""


class ProfileDomainError(RadialSolverError, ValueError):
    """A profile was evaluated outside the radii it covers."""


def critical_exponent(dim: int) -> float:
    """p_S = (N+2)/(N-2)."""
    return (dim + 2) / (dim - 2)


def sphere_area(dim: int) -> float:
    """Surface measure of S^{N-1}."""
    return 2.0 * math.pi ** (dim / 2) / gamma_fn(dim / 2)


@dataclass(frozen=True)
class ProblemSpec:
    dim: int
    exponent: float
    nodal_count: int = 1

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 3:
            raise InvalidProblemError(f"dimension must be an integer >= 3, got {self.dim}")
        p_s = critical_exponent(self.dim)
        if not 1.0 < self.exponent < p_s:
            raise InvalidProblemError(
                f"exponent {self.exponent} outside (1, {p_s:g}) for N={self.dim}"
            )
        if int(self.nodal_count) != self.nodal_count or self.nodal_count < 1:
            raise InvalidProblemError(f"nodal count must be >= 1, got {self.nodal_count}")
        if p_s - self.exponent < DEGENERATE_GAP or self.exponent - 1.0 < DEGENERATE_GAP:
            logger.warning(
                "degenerate exponent p=%s for N=%s: asymptotic checks may be unreliable",
                self.exponent,
                self.dim,
            )

    @property
    def critical_exponent(self) -> float:
        return critical_exponent(self.dim)

    @property
    def gap(self) -> float:
        return self.critical_exponent - self.exponent

    def to_dict(self) -> dict[str, float | int]:
        return {"dim": self.dim, "exponent": self.exponent, "nodal_count": self.nodal_count}


@dataclass(frozen=True)
class SolverSettings:
    ivp_tolerance: float = 1e-10
    atol_ratio: float = 1e-12
    initial_radius: float = 16.0
    growth_factor: float = 2.0
    max_extensions: int = 400
    blowup_ceiling: float = 1e6
    zero_xtol: float = 1e-12
    profile_points: int = 4096
    residual_factor: float = 10.0
    integrator_safety: float = 1e-2  # solve_ivp rtol = ivp_tolerance * integrator_safety

    @classmethod
    def from_mapping(cls, data: dict | None) -> "SolverSettings":
        data = data or {}
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)


def taylor_start(dim: int, exponent: float, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Series u = 1 - r^2/(2N) + p r^4/(8N(N+2)) and its derivative."""
    r = np.asarray(r, dtype=float)
    c4 = exponent / (8.0 * dim * (dim + 2))
    u = 1.0 - r**2 / (2.0 * dim) + c4 * r**4
    du = -r / dim + 4.0 * c4 * r**3
    return u, du


def _taylor_second(dim: int, exponent: float, r: np.ndarray) -> np.ndarray:
    return -1.0 / dim + 12.0 * exponent / (8.0 * dim * (dim + 2)) * r**2


def _polynomial_slope(interpolant, t: np.ndarray) -> np.ndarray:
    """Exact t-derivative of one DOP853 dense-output step.

    Mirrors the nested evaluation y = y_old + (((F6 x + F5)(1-x) + F4) x ...) of
    scipy's Dop853DenseOutput, x = (t - t_old)/h, carrying the derivative along.
    """
    x = (t - interpolant.t_old) / interpolant.h
    value = np.zeros((interpolant.y_old.shape[0], t.shape[0]))
    slope = np.zeros_like(value)
    for i, coeff in enumerate(reversed(interpolant.F)):
        value += coeff[:, None]
        factor, dfactor = (x, 1.0) if i % 2 == 0 else (1.0 - x, -1.0)
        slope = slope * factor + value * dfactor
        value = value * factor
    return slope / interpolant.h


def _solution_slope(solution, t: np.ndarray) -> np.ndarray:
    """d/dt of a scipy OdeSolution built from DOP853 steps."""
    last = len(solution.interpolants) - 1
    step = np.clip(np.searchsorted(solution.ts, t, side="left") - 1, 0, last)
    out = np.empty((2, t.shape[0]))
    for idx in np.unique(step):
        mask = step == idx
        out[:, mask] = _polynomial_slope(solution.interpolants[idx], t[mask])
    return out


def _log_rhs(t, y, dim, exponent, ceiling):
    u, v = y
    return [v, -(dim - 2) * v - math.exp(2.0 * t) * abs(u) ** (exponent - 1.0) * u]


def _zero_event(t, y, dim, exponent, ceiling):
    return y[0]


def _critical_event(t, y, dim, exponent, ceiling):
    return y[1]


def _blowup_event(t, y, dim, exponent, ceiling):
    return abs(y[0]) - ceiling


_blowup_event.terminal = True


class DenseSolution:
    """Piecewise dense output of the log-radius IVP.

    Radii below the Taylor radius are served by the series start; each
    integration segment contributes one scipy OdeSolution on [t0, t1].
    """

    def __init__(self, dim: int, exponent: float, r0: float = TAYLOR_RADIUS):
        self.dim = dim
        self.exponent = exponent
        self.r0 = r0
        self.t0 = math.log(r0)
        self._ends: list[float] = []
        self._solutions: list = []
        self.zero_events: list[float] = []
        self.critical_events: list[float] = []

    @property
    def t_end(self) -> float:
        return self._ends[-1] if self._ends else self.t0

    @property
    def r_end(self) -> float:
        return math.exp(self.t_end)

    def append(self, t1: float, solution, zeros, criticals) -> None:
        self._ends.append(t1)
        self._solutions.append(solution)
        for target, found in ((self.zero_events, zeros), (self.critical_events, criticals)):
            for t in found:
                r = math.exp(t)
                if target and r <= target[-1] * (1.0 + 1e-13):
                    continue
                target.append(r)

    def state(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(u, r u') at log radii t in [t0, t_end]."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        u = np.empty_like(t)
        v = np.empty_like(t)
        segment = np.searchsorted(np.asarray(self._ends), t, side="left")
        segment = np.minimum(segment, len(self._ends) - 1)
        for idx in np.unique(segment):
            mask = segment == idx
            values = self._solutions[idx](t[mask])
            u[mask] = values[0]
            v[mask] = values[1]
        return u, v

    def _check_domain(self, r: np.ndarray) -> None:
        if np.any(r < 0) or np.any(r > self.r_end * (1.0 + 1e-12)):
            raise ProfileDomainError(
                f"radius outside [0, {self.r_end:.6g}] covered by the dense output"
            )

    def second_derivative(self, r) -> np.ndarray:
        """u'' = (d/dt (r u') - r u') / r^2 from the dense polynomials themselves."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        self._check_domain(r)
        out = np.empty_like(r)
        inner = r < self.r0
        out[inner] = _taylor_second(self.dim, self.exponent, r[inner])
        outer = ~inner
        if np.any(outer):
            t = np.minimum(np.log(r[outer]), self.t_end)
            segment = np.minimum(np.searchsorted(np.asarray(self._ends), t, side="left"), len(self._ends) - 1)
            dv = np.empty_like(t)
            for idx in np.unique(segment):
                mask = segment == idx
                dv[mask] = _solution_slope(self._solutions[idx], t[mask])[1]
            _, v = self.state(t)
            out[outer] = (dv - v) / r[outer] ** 2
        return out

    def __call__(self, r) -> tuple[np.ndarray, np.ndarray]:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        self._check_domain(r)
        u = np.empty_like(r)
        du = np.empty_like(r)
        inner = r < self.r0
        if np.any(inner):
            u[inner], du[inner] = taylor_start(self.dim, self.exponent, r[inner])
        outer = ~inner
        if np.any(outer):
            t = np.minimum(np.log(r[outer]), self.t_end)
            uo, vo = self.state(t)
            u[outer] = uo
            du[outer] = vo / r[outer]
        return u, du


class _IvpRun:
    """Segment-by-segment integration that only ever moves forward in t."""

    def __init__(self, dim: int, exponent: float, settings: SolverSettings):
        self.dim = dim
        self.exponent = exponent
        self.settings = settings
        self.dense = DenseSolution(dim, exponent)
        u0, du0 = taylor_start(dim, exponent, np.array([TAYLOR_RADIUS]))
        self.y = np.array([u0[0], TAYLOR_RADIUS * du0[0]])

    def advance(self, t1: float) -> None:
        t0 = self.dense.t_end
        if t1 <= t0:
            return
        rtol = self.settings.ivp_tolerance * self.settings.integrator_safety
        result = solve_ivp(
            _log_rhs,
            (t0, t1),
            self.y,
            method="DOP853",
            rtol=rtol,
            atol=rtol * self.settings.atol_ratio,
            dense_output=True,
            events=[_zero_event, _critical_event, _blowup_event],
            args=(self.dim, self.exponent, self.settings.blowup_ceiling),
        )
        if result.status == -1:
            raise IntegrationError(f"integration failed on t in [{t0:.4g}, {t1:.4g}]: {result.message}")
        if result.status == 1:
            raise BlowUpError(math.exp(result.t_events[2][0]), self.settings.blowup_ceiling)
        self.dense.append(t1, result.sol, result.t_events[0], result.t_events[1])
        self.y = result.y[:, -1].copy()

    def zero_count(self) -> int:
        return len(self.dense.zero_events)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Sampled radial profile; `dense`, when present, is evaluated exactly.

    With scale R the profile represents R^{2/(p-1)} u(R r) where u is the
    IVP solution carried by `dense`.
    """

    dim: int
    exponent: float
    grid: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    ivp_tolerance: float
    scale: float = 1.0
    dense: DenseSolution | None = field(default=None, repr=False)

    @property
    def amplitude(self) -> float:
        if self.scale == 1.0:
            return 1.0
        return self.scale ** (2.0 / (self.exponent - 1.0))

    @property
    def domain(self) -> tuple[float, float]:
        if self.dense is not None:
            return 0.0, self.dense.r_end / self.scale
        return float(self.grid[0]), float(self.grid[-1])

    @functools.cached_property
    def _spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.grid, self.values, self.derivatives)

    def evaluate(self, r) -> tuple[np.ndarray, np.ndarray]:
        """(u, u') at radii r."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if self.dense is not None:
            u, du = self.dense(self.scale * r)
            return self.amplitude * u, self.amplitude * self.scale * du
        lo, hi = self.domain
        if np.any(r < lo - 1e-14) or np.any(r > hi + 1e-14):
            raise ProfileDomainError(f"radius outside sampled domain [{lo:.6g}, {hi:.6g}]")
        r = np.clip(r, lo, hi)
        return self._spline(r), self._spline(r, 1)

    def second_derivative(self, r) -> np.ndarray:
        """u'' of the interpolant at radii r (dense polynomials, or the Hermite spline)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if self.dense is not None:
            return self.amplitude * self.scale**2 * self.dense.second_derivative(self.scale * r)
        lo, hi = self.domain
        if np.any(r < lo - 1e-14) or np.any(r > hi + 1e-14):
            raise ProfileDomainError(f"radius outside sampled domain [{lo:.6g}, {hi:.6g}]")
        return self._spline(np.clip(r, lo, hi), 2)

    def potential(self, r) -> np.ndarray:
        """p r^2 |u(r)|^{p-1}, the Hardy-scaled linearized potential p f_p(r)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        p = self.exponent
        if self.dense is not None:
            rho = self.scale * r
            u, _ = self.dense(rho)
            return p * rho**2 * np.abs(u) ** (p - 1.0)
        u, _ = self.evaluate(r)
        return p * r**2 * np.abs(u) ** (p - 1.0)


@dataclass(frozen=True)
class NodalData:
    nodal_radii: tuple[float, ...]
    critical_radii: tuple[float, ...]
    extrema: tuple[float, ...]

    @property
    def nodal_count(self) -> int:
        return len(self.nodal_radii)

    @property
    def extrema_decreasing(self) -> bool:
        return all(a > b for a, b in zip(self.extrema, self.extrema[1:]))

    def to_dict(self) -> dict[str, list[float]]:
        return {
            "nodal_radii": list(self.nodal_radii),
            "critical_radii": list(self.critical_radii),
            "extrema": list(self.extrema),
        }


@dataclass(frozen=True, eq=False)
class RadialSolution:
    spec: ProblemSpec
    profile: RadialProfile
    nodes: NodalData

    @property
    def m(self) -> int:
        return self.spec.nodal_count

    @property
    def p(self) -> float:
        return self.spec.exponent

    @property
    def dim(self) -> int:
        return self.spec.dim


def _sample_grid(lower: float, upper: float, points: int, extra=()) -> np.ndarray:
    inner = np.linspace(0.0, lower, 33)
    outer = np.geomspace(lower, upper, points)
    return np.union1d(np.union1d(inner, outer), np.asarray(extra, dtype=float))


def _profile_from_dense(dense, dim, p, grid, tol, scale=1.0) -> RadialProfile:
    profile = RadialProfile(
        dim=dim,
        exponent=p,
        grid=grid,
        values=np.empty(0),
        derivatives=np.empty(0),
        ivp_tolerance=tol,
        scale=scale,
        dense=dense,
    )
    values, derivatives = profile.evaluate(grid)
    return RadialProfile(
        dim=dim,
        exponent=p,
        grid=grid,
        values=values,
        derivatives=derivatives,
        ivp_tolerance=tol,
        scale=scale,
        dense=dense,
    )


def integrate_ivp(
    dim: int,
    exponent: float,
    r_max: float,
    tol: float,
    settings: SolverSettings | None = None,
) -> RadialProfile:
    """Integrate the u(0)=1 IVP on [0, r_max].

    The exponent may sit on the closed range [1, p_S] here; the endpoints are
    only meaningful as test inputs (sin r / r and the bubble).
    """
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    if r_max <= TAYLOR_RADIUS:
        raise ValueError(f"r_max must exceed the Taylor radius {TAYLOR_RADIUS}")
    if exponent < 1.0:
        raise InvalidProblemError(f"exponent must be >= 1, got {exponent}")
    settings = settings or SolverSettings()
    settings = replace(settings, ivp_tolerance=tol)
    run = _IvpRun(dim, exponent, settings)
    run.advance(math.log(r_max))
    grid = _sample_grid(TAYLOR_RADIUS, r_max, settings.profile_points)
    return _profile_from_dense(run.dense, dim, exponent, grid, tol)


def _refine_root(func, guess: float, xtol: float) -> float:
    for width in (1e-9, 1e-7, 1e-5):
        a, b = guess * (1.0 - width), guess * (1.0 + width)
        fa, fb = func(a), func(b)
        if fa == 0.0:
            return a
        if fb == 0.0:
            return b
        if fa * fb < 0:
            return brentq(func, a, b, xtol=max(xtol * guess, 1e-300), rtol=4 * np.finfo(float).eps)
    return guess


def _sample_roots(grid: np.ndarray, values: np.ndarray) -> list[tuple[float, float]]:
    sign = np.sign(values)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    return [(grid[i], grid[i + 1]) for i in idx]


def locate_nodes(profile: RadialProfile, m: int, xtol: float = 1e-12) -> NodalData:
    """First m zeros, the interior critical radii and the extrema |u(s_i)|."""
    if m < 1:
        raise ValueError("m must be >= 1")

    def u_at(r: float) -> float:
        return float(profile.evaluate(r)[0][0])

    def du_at(r: float) -> float:
        return float(profile.evaluate(r)[1][0])

    lo, hi = profile.domain
    if profile.dense is not None:
        zero_hints = [r / profile.scale for r in profile.dense.zero_events]
        crit_hints = [r / profile.scale for r in profile.dense.critical_events]
        zeros = [_refine_root(u_at, r, xtol) for r in zero_hints if r <= hi]
        criticals = [_refine_root(du_at, r, xtol) for r in crit_hints if r <= hi]
    else:
        zeros = [brentq(u_at, a, b, xtol=xtol) for a, b in _sample_roots(profile.grid, profile.values)]
        criticals = [
            brentq(du_at, a, b, xtol=xtol)
            for a, b in _sample_roots(profile.grid[1:], profile.derivatives[1:])
        ]

    if len(zeros) < m:
        raise InsufficientDomainError(
            f"found {len(zeros)} sign change(s) on [0, {hi:.6g}], need {m}; enlarge r_max"
        )
    zeros = zeros[:m]
    interior = []
    previous = 0.0
    for i, r_i in enumerate(zeros):
        inside = [s for s in criticals if previous < s < r_i]
        if i == 0 and inside:
            raise NodalStructureError(f"critical point(s) {inside} inside the first nodal region")
        if i > 0:
            if len(inside) != 1:
                raise NodalStructureError(
                    f"expected one critical point in ({previous:.6g}, {r_i:.6g}), found {len(inside)}"
                )
            interior.append(inside[0])
        previous = r_i

    critical_radii = (0.0, *interior)
    for i, s in enumerate(interior, start=1):
        if not zeros[i - 1] < s < zeros[i]:
            raise NodalStructureError(f"s_{i}={s} does not interlace the zeros")
    extrema = tuple(abs(u_at(s)) for s in critical_radii)
    return NodalData(nodal_radii=tuple(zeros), critical_radii=critical_radii, extrema=extrema)


def solve_m_nodal(spec: ProblemSpec, settings: SolverSettings | None = None) -> RadialSolution:
    """Integrate to the m-th zero R and rescale so the profile lives on [0, 1]."""
    settings = settings or SolverSettings()
    m = spec.nodal_count
    run = _IvpRun(spec.dim, spec.exponent, settings)
    t_target = math.log(settings.initial_radius)
    step = math.log(settings.growth_factor)
    run.advance(t_target)
    extensions = 0
    while run.zero_count() < m:
        if extensions >= settings.max_extensions:
            raise InsufficientDomainError(
                f"{run.zero_count()} zero(s) below r = {run.dense.r_end:.4g} after "
                f"{extensions} extensions; need {m}"
            )
        t_target += step
        run.advance(t_target)
        extensions += 1

    raw_R = run.dense.zero_events[m - 1]
    # headroom beyond r = 1 for derivative stencils
    while run.dense.t_end < math.log(raw_R) + 0.25:
        t_target += step
        run.advance(t_target)

    dense = run.dense
    raw = RadialProfile(
        dim=spec.dim,
        exponent=spec.exponent,
        grid=np.empty(0),
        values=np.empty(0),
        derivatives=np.empty(0),
        ivp_tolerance=settings.ivp_tolerance,
        dense=dense,
    )
    raw_nodes = locate_nodes(raw, m, settings.zero_xtol)
    R = raw_nodes.nodal_radii[-1]
    amplitude = R ** (2.0 / (spec.exponent - 1.0))
    nodes = NodalData(
        nodal_radii=tuple(r / R for r in raw_nodes.nodal_radii[:-1]) + (1.0,),
        critical_radii=tuple(s / R for s in raw_nodes.critical_radii),
        extrema=tuple(amplitude * M for M in raw_nodes.extrema),
    )
    bubble_scale = nodes.extrema[0] ** (-(spec.exponent - 1.0) / 2.0)
    lower = min(nodes.nodal_radii[0] / 100.0, 1e-3 * bubble_scale)
    grid = _sample_grid(
        lower,
        1.0,
        settings.profile_points,
        extra=nodes.nodal_radii + nodes.critical_radii[1:],
    )
    profile = _profile_from_dense(dense, spec.dim, spec.exponent, grid, settings.ivp_tolerance, scale=R)
    if not nodes.extrema_decreasing:
        logger.info("extrema not decreasing for %s (pre-asymptotic exponent)", spec)
    logger.debug("solved %s: R=%.6g M_0=%.6g", spec, R, nodes.extrema[0])
    return RadialSolution(spec=spec, profile=profile, nodes=nodes)


def ode_residual(profile: RadialProfile, radii: np.ndarray | None = None) -> float:
    """Max scaled residual of u'' + (N-1)/r u' + |u|^{p-1} u at collocation radii.

    u'' is the exact second derivative of the interpolant, so the value measures
    integration and interpolation error. Each point is scaled by the sum of the
    magnitudes of the three terms.
    """
    lo, hi = profile.domain
    if radii is None:
        radii = profile.grid
    radii = np.asarray(radii, dtype=float)
    radii = radii[(radii > 0) & (radii >= lo) & (radii <= hi)]
    if radii.size == 0:
        return 0.0
    u, du = profile.evaluate(radii)
    second = profile.second_derivative(radii)
    N, p = profile.dim, profile.exponent
    nonlinear = np.abs(u) ** (p - 1.0) * u
    friction = (N - 1) / radii * du
    residual = second + friction + nonlinear
    scale = np.abs(second) + np.abs(friction) + np.abs(nonlinear) + 1e-300
    return float(np.max(np.abs(residual) / scale))


@dataclass
class ScalingReport:
    h: int
    m: int
    residuals: dict[str, list[float]]
    tolerance: float

    @property
    def max_residual(self) -> float:
        values = [r for group in self.residuals.values() for r in group]
        return max(values, default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tolerance

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "m": self.m,
            "residuals": self.residuals,
            "max_residual": self.max_residual,
            "passed": self.passed,
        }


def _relative(a: float, b: float) -> float:
    denom = max(abs(a), abs(b), 1e-300)
    return abs(a - b) / denom


def check_scaling_relations(
    sol_m: RadialSolution, sol_h: RadialSolution, tolerance: float = 1e-6
) -> ScalingReport:
    """Residuals of the identities linking the h-nodal and m-nodal solutions."""
    if sol_m.dim != sol_h.dim or sol_m.p != sol_h.p:
        raise InvalidProblemError("scaling relations need matching (N, p)")
    m, h = sol_m.m, sol_h.m
    if h > m:
        raise InvalidProblemError(f"need h <= m, got h={h}, m={m}")
    half = (sol_m.p - 1.0) / 2.0
    rm, sm, Mm = sol_m.nodes.nodal_radii, sol_m.nodes.critical_radii, sol_m.nodes.extrema
    rh, sh, Mh = sol_h.nodes.nodal_radii, sol_h.nodes.critical_radii, sol_h.nodes.extrema
    r_mh = rm[h - 1]
    residuals = {
        "nodal_radii": [_relative(rh[j - 1], rm[j - 1] / r_mh) for j in range(1, h + 1)],
        "critical_radii": [_relative(sh[j], sm[j] / r_mh) for j in range(1, h)],
        "invariant_product": [
            _relative(sh[j] * Mh[j] ** half, sm[j] * Mm[j] ** half) for j in range(1, h)
        ],
        "extremum_ratio": [_relative(Mh[j] ** half, r_mh * Mm[j] ** half) for j in range(h)],
    }
    return ScalingReport(h=h, m=m, residuals=residuals, tolerance=tolerance)


def gamma_for_alpha(dim: int, alpha: float, xtol: float = 1e-12) -> float:
    """Unique gamma in (0, 1) with g(gamma) = alpha.

    g(s) = 1/(k-2) + s - (k-1)/(k-2) s^{(k-2)/(k-1)}, k = 2(N-1)/(N-2), is
    decreasing from (N-2)/2 at s=0 to 0 at s=1.
    """
    if not 0.0 < alpha < (dim - 2) / 2.0:
        raise ValueError(f"alpha must lie in (0, {(dim - 2) / 2}), got {alpha}")
    k = 2.0 * (dim - 1) / (dim - 2)

    def g(s: float) -> float:
        return 1.0 / (k - 2.0) + s - (k - 1.0) / (k - 2.0) * s ** ((k - 2.0) / (k - 1.0)) - alpha

    return bisect(g, 0.0, 1.0, xtol=xtol)


@dataclass
class BoundCheck:
    name: str
    status: str  # pass | fail | regime not reached | empty
    margin: float
    value: float | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "margin": self.margin, "value": self.value}


@dataclass
class BoundReport:
    alpha: float
    gamma: float
    regime_reached: bool
    checks: list[BoundCheck]

    def get(self, name: str) -> BoundCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    @property
    def failures(self) -> list[str]:
        return [c.name for c in self.checks if c.status == "fail"]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "gamma": self.gamma,
            "regime_reached": self.regime_reached,
            "checks": [c.to_dict() for c in self.checks],
        }


def check_pointwise_bounds(
    sol: RadialSolution,
    alpha: float = 0.25,
    *,
    asymptotic_window: float = 0.25,
    potential_slack: float = 0.05,
    rel_tol: float = 1e-9,
) -> BoundReport:
    """Pointwise, derivative and potential bounds on a solved instance.

    Nothing here raises: each bound yields a status and a margin.
    """
    N, p = sol.dim, sol.p
    nodes = sol.nodes
    profile = sol.profile
    r = profile.grid
    u = np.abs(profile.values)
    du = np.abs(profile.derivatives)
    regime = sol.spec.gap <= asymptotic_window
    gamma = gamma_for_alpha(N, alpha)
    checks: list[BoundCheck] = []

    M0 = nodes.extrema[0]
    first = r <= nodes.nodal_radii[0]
    bound = M0 / (1.0 + M0 ** (p - 1.0) * r[first] ** 2 / (N * (N - 2))) ** ((N - 2) / 2.0)
    margin = float(np.min((bound - u[first]) / M0))
    checks.append(BoundCheck("first_region", "pass" if margin >= -rel_tol else "fail", margin))

    coeff = 2.0 * alpha / (N * (N - 2) ** 2)
    for i in range(1, sol.m):
        Mi = nodes.extrema[i]
        lo = gamma ** (-1.0 / N) * nodes.critical_radii[i]
        window = (r > lo) & (r < nodes.nodal_radii[i])
        name = f"annular_region_{i}"
        if not np.any(window):
            checks.append(BoundCheck(name, "empty", float("nan")))
            continue
        bound = Mi / (1.0 + coeff * Mi ** (p - 1.0) * r[window] ** 2) ** ((N - 2) / 2.0)
        margin = float(np.min((bound - u[window]) / Mi))
        if margin >= -rel_tol:
            status = "pass"
        else:
            status = "fail" if regime else "regime not reached"
        checks.append(BoundCheck(name, status, margin))

    positive = r > 0
    constant = float(np.max(du[positive] * r[positive] ** ((p + 1.0) / (p - 1.0))))
    checks.append(BoundCheck("derivative_constant", "pass" if np.isfinite(constant) else "fail", 0.0, constant))

    f = r**2 * u ** (p - 1.0)
    limit = N * (N + 2) / 4.0
    sup_pf = float(np.max(p * f))
    margin = limit * (1.0 + potential_slack) - sup_pf
    if margin >= 0:
        status = "pass"
    else:
        status = "fail" if regime else "regime not reached"
    checks.append(BoundCheck("potential_sup", status, margin / limit, sup_pf))
    checks.append(BoundCheck("potential_at_origin", "pass" if f[0] == 0.0 else "fail", 0.0, float(f[0])))
    return BoundReport(alpha=alpha, gamma=gamma, regime_reached=regime, checks=checks)


def region_quadrature(a: float, b: float, floor: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights on [a, b], panels uniform in log r.

    For a == 0 the panels start at `floor` and one linear panel covers [0, floor].
    """
    x, w = np.polynomial.legendre.leggauss(GAUSS_ORDER)
    nodes, weights = [], []
    start = a
    if a == 0.0:
        floor = floor if floor is not None else b * 1e-12
        nodes.append(0.5 * floor * (x + 1.0))
        weights.append(0.5 * floor * w)
        start = floor
    span = math.log(b / start)
    panels = max(8, int(math.ceil(span / PANEL_WIDTH)))
    edges = np.exp(np.linspace(math.log(start), math.log(b), panels + 1))
    edges[0], edges[-1] = start, b
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        nodes.append(lo + half * (x + 1.0))
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


@dataclass
class RegionEnergy:
    index: int
    gradient: float
    potential: float
    mass: float
    critical_mass: float

    @property
    def identity_residual(self) -> float:
        return abs(self.gradient - self.potential) / max(abs(self.gradient), 1e-300)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "gradient": self.gradient,
            "potential": self.potential,
            "mass": self.mass,
            "critical_mass": self.critical_mass,
            "identity_residual": self.identity_residual,
        }


def region_bounds(sol: RadialSolution, i: int) -> tuple[float, float, float]:
    """(a, b, floor) of the i-th nodal region, floor well below the bubble scale."""
    radii = (0.0, *sol.nodes.nodal_radii)
    scale = sol.nodes.extrema[0] ** (-(sol.p - 1.0) / 2.0)
    return radii[i], radii[i + 1], 1e-8 * min(scale, radii[1])


def energy_per_region(sol: RadialSolution) -> list[RegionEnergy]:
    """Per-region integrals with the radial measure |S^{N-1}| r^{N-1} dr."""
    N, p = sol.dim, sol.p
    omega = sphere_area(N)
    critical = 2.0 * N / (N - 2)
    energies = []
    for i in range(sol.m):
        a, b, floor = region_bounds(sol, i)
        r, w = region_quadrature(a, b, floor)
        u, du = sol.profile.evaluate(r)
        measure = omega * w * r ** (N - 1)
        energies.append(
            RegionEnergy(
                index=i,
                gradient=float(np.sum(measure * du**2)),
                potential=float(np.sum(measure * np.abs(u) ** (p + 1.0))),
                mass=float(np.sum(measure * np.abs(u) ** (N * (p - 1.0) / 2.0))),
                critical_mass=float(np.sum(measure * np.abs(u) ** critical)),
            )
        )
    return energies


def solution_checks(sol: RadialSolution, settings: SolverSettings | None = None) -> dict[str, float | bool]:
    """Invariants of a solved instance; flags, never exceptions."""
    settings = settings or SolverSettings()
    profile, nodes = sol.profile, sol.nodes
    u0, du0 = profile.evaluate(0.0)
    u1, _ = profile.evaluate(1.0)
    radii = (0.0, *nodes.nodal_radii)
    interlaced = all(
        radii[i] < nodes.critical_radii[i] < radii[i + 1] for i in range(1, sol.m)
    ) and all(a < b for a, b in zip(radii, radii[1:]))
    residual = ode_residual(profile)
    return {
        "positive_at_origin": bool(u0[0] > 0),
        "flat_at_origin": bool(abs(du0[0]) <= 1e-12 * max(1.0, abs(u0[0]))),
        "boundary_zero": bool(abs(u1[0]) <= 1e2 * profile.ivp_tolerance * nodes.extrema[0]),
        "sign_convention": bool(u0[0] * (1 + 1e-12) >= np.max(np.abs(profile.values))),
        "interlaced": bool(interlaced),
        "extrema_decreasing": nodes.extrema_decreasing,
        "ode_residual": residual,
        "residual_ok": bool(residual <= settings.residual_factor * profile.ivp_tolerance),
    }


def write_solution(sol: RadialSolution, directory: Path, stem: str = "solution") -> tuple[Path, Path]:
    """CSV table (r, u, du) plus a JSON sidecar with spec and nodal data."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / f"{stem}.csv"
    json_path = directory / f"{stem}.json"
    with open(csv_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["r", "u", "du"])
        for row in zip(sol.profile.grid, sol.profile.values, sol.profile.derivatives):
            writer.writerow([repr(float(x)) for x in row])
    payload = {
        "spec": sol.spec.to_dict(),
        **sol.nodes.to_dict(),
        "tolerances": {"ivp": sol.profile.ivp_tolerance},
        "scale": sol.profile.scale,
    }
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    return csv_path, json_path


def read_solution(directory: Path, stem: str = "solution") -> RadialSolution:
    """Reload a written solution; the profile is then Hermite-interpolated."""
    directory = Path(directory)
    payload = json.loads((directory / f"{stem}.json").read_text(encoding="utf-8"))
    with open(directory / f"{stem}.csv", newline="") as handle:
        rows = list(csv.DictReader(handle))
    grid = np.array([float(row["r"]) for row in rows])
    spec = ProblemSpec(**payload["spec"])
    profile = RadialProfile(
        dim=spec.dim,
        exponent=spec.exponent,
        grid=grid,
        values=np.array([float(row["u"]) for row in rows]),
        derivatives=np.array([float(row["du"]) for row in rows]),
        ivp_tolerance=payload["tolerances"]["ivp"],
        scale=1.0,
    )
    nodes = NodalData(
        nodal_radii=tuple(payload["nodal_radii"]),
        critical_radii=tuple(payload["critical_radii"]),
        extrema=tuple(payload["extrema"]),
    )
    return RadialSolution(spec=spec, profile=profile, nodes=nodes)
