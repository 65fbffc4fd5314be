"""
Radial spectrum of the linearized Lane-Emden operator on the annulus 1/n < r < 1.

The Hardy-weighted problem

    r^2 (-v'' - (N-1)/r v' - p |u|^{p-1} v) = beta~ v

is solved on a uniform grid in s = log r. With v(r) = r^{-(N-2)/2} psi(log r)
it becomes the Dirichlet Schroedinger problem -psi'' + q psi = beta~ psi with
q(s) = ((N-2)/2)^2 - p e^{2s} |u(e^s)|^{p-1}.

The plain problem -(r^{N-1} v')' - p |u|^{p-1} r^{N-1} v = beta r^{N-1} v is
discretized separately with linear finite elements on the graded radii
r_j = e^{s_j}, lumped mass r_j^{N-1} (r_{j+1} - r_{j-1}) / 2. The two
negative counts are computed from different matrices and compared.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.interpolate import CubicSpline

from radial_solver import ProfileDomainError, RadialProfile, RadialSolution, sphere_area
from tridiagonal import (
    SpectralError,
    TridiagonalPencil,
    bisect_eigenvalues,
    inverse_iteration,
    richardson,
)

logger = logging.getLogger(__name__)

MIN_GRID_SIZE = 64


class InterpolationDomainError(SpectralError, ValueError):
    """The annulus reaches radii the profile does not cover."""


class AnnulusError(SpectralError, ValueError):
    """The inner radius 1/n lies inside the first nodal region's boundary."""


class StabilizationError(SpectralError):
    """Negative counts did not settle within the doubling cap."""

    def __init__(self, message: str, trajectory: list[tuple[int, int, int]]):
        super().__init__(f"{message}; trajectory (n, weighted, plain) = {trajectory}")
        self.trajectory = trajectory


class AnnulusMode(str, Enum):
    EXPLICIT = "explicit"
    NODAL_RULE = "nodal_rule"
    STABILIZED = "stabilized"


@dataclass(frozen=True)
class AnnulusSpec:
    n: int
    selection_mode: AnnulusMode = AnnulusMode.EXPLICIT
    trajectory: tuple[tuple[int, int, int], ...] = ()

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise AnnulusError(f"annulus index n must be an integer >= 2, got {self.n}")

    @property
    def inner_radius(self) -> float:
        return 1.0 / self.n

    @property
    def log_width(self) -> float:
        return math.log(self.n)

    def admits(self, sol: RadialSolution) -> bool:
        """True when 1/n < r_1, i.e. n >= floor(1/r_1) + 1."""
        return self.inner_radius < sol.nodes.nodal_radii[0]


@dataclass(frozen=True)
class SpectrumSettings:
    grid_size: int = 4096
    eigen_tolerance: float = 1e-13
    sign_margin: float = 1e-6
    richardson: bool = True
    stabilize_max_doublings: int = 12
    oscillation_rtol: float = 1e-10

    @classmethod
    def from_mapping(cls, data: dict | None) -> "SpectrumSettings":
        data = data or {}
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True, eq=False)
class SchroedingerForm:
    """-psi'' + q psi on a uniform s-grid with Dirichlet ends at s_grid[0], s_grid[-1]."""

    dim: int
    n: int
    s_grid: np.ndarray
    potential_q: np.ndarray

    @property
    def grid_size(self) -> int:
        return self.s_grid.shape[0] - 2

    @property
    def step(self) -> float:
        return float(self.s_grid[1] - self.s_grid[0])

    @property
    def interior(self) -> np.ndarray:
        return self.s_grid[1:-1]

    def pencil(self) -> TridiagonalPencil:
        h2 = self.step**2
        diag = np.ascontiguousarray(2.0 / h2 + self.potential_q[1:-1])
        off = np.full(self.grid_size - 1, -1.0 / h2)
        return TridiagonalPencil.standard(diag, off)


@dataclass(frozen=True, eq=False)
class RadialElementForm:
    """Linear elements for -(r^{N-1} v')' - r^{N-1} pV v on radii r_grid, Dirichlet ends."""

    dim: int
    n: int
    r_grid: np.ndarray
    potential_v: np.ndarray  # p |u|^{p-1} at the nodes

    @property
    def grid_size(self) -> int:
        return self.r_grid.shape[0] - 2

    def pencil(self) -> TridiagonalPencil:
        N, r = self.dim, self.r_grid
        h = np.diff(r)
        # integral of r^{N-1} over each element, divided by its length squared
        flux = r[:-1] ** N * np.expm1(N * np.diff(np.log(r))) / (N * h**2)
        mass = 0.5 * (r[2:] - r[:-2]) * r[1:-1] ** (N - 1)
        diag = flux[:-1] + flux[1:] - self.potential_v[1:-1] * mass
        return TridiagonalPencil(
            np.ascontiguousarray(diag), np.ascontiguousarray(-flux[1:-1]), np.ascontiguousarray(mass)
        )


def _annulus_samples(profile: RadialProfile, annulus: AnnulusSpec, grid_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform s-grid with grid_size interior points and p r^2 |u|^{p-1} on it."""
    if grid_size < MIN_GRID_SIZE:
        raise ValueError(f"grid_size must be >= {MIN_GRID_SIZE}, got {grid_size}")
    s = np.linspace(-annulus.log_width, 0.0, grid_size + 2)
    try:
        pf = profile.potential(np.exp(s))
    except ProfileDomainError as exc:
        raise InterpolationDomainError(f"annulus 1/{annulus.n} < r < 1 not covered: {exc}") from exc
    return s, pf


def liouville_transform(profile: RadialProfile, annulus: AnnulusSpec, grid_size: int) -> SchroedingerForm:
    """Sample q(s) = ((N-2)/2)^2 - p e^{2s}|u(e^s)|^{p-1} on grid_size interior points."""
    s, pf = _annulus_samples(profile, annulus, grid_size)
    q = ((profile.dim - 2) / 2.0) ** 2 - pf
    return SchroedingerForm(dim=profile.dim, n=annulus.n, s_grid=s, potential_q=q)


def element_form(profile: RadialProfile, annulus: AnnulusSpec, grid_size: int) -> RadialElementForm:
    """Plain radial problem on the radii e^{s_j} of the same s-grid."""
    s, pf = _annulus_samples(profile, annulus, grid_size)
    r = np.exp(s)
    r[-1] = 1.0
    return RadialElementForm(dim=profile.dim, n=annulus.n, r_grid=r, potential_v=pf / r**2)


class EigenPairs(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray  # (count, grid_size), unit Euclidean norm
    negative_count: int


def eigen_bisect(
    form: SchroedingerForm | RadialElementForm,
    count: int,
    *,
    tolerance: float = 1e-13,
    vectors: bool = True,
) -> EigenPairs:
    """Lowest `count` eigenpairs of the pencil of `form`."""
    pencil = form.pencil()
    values = bisect_eigenvalues(pencil, count, tolerance)
    if vectors:
        basis = np.array([inverse_iteration(pencil, value) for value in values])
    else:
        basis = np.empty((0, form.grid_size))
    return EigenPairs(values=values, vectors=basis, negative_count=pencil.count_below(0.0))


def _prufer_count(spline: CubicSpline, a: float, b: float, rtol: float) -> int:
    def rhs(s, theta):
        return [math.cos(theta[0]) ** 2 - float(spline(s)) * math.sin(theta[0]) ** 2]

    result = solve_ivp(rhs, (a, b), [0.0], method="DOP853", rtol=rtol, atol=1e-12, max_step=(b - a) / 400)
    theta_end = float(result.y[0, -1])
    return max(0, math.ceil(theta_end / math.pi) - 1)


def negative_count_oscillation(form: SchroedingerForm, rtol: float = 1e-10) -> int:
    """Interior zeros of the beta = 0 solution with psi(a) = 0, psi'(a) = 1.

    Equals the number of negative Dirichlet eigenvalues. Falls back to the
    Pruefer angle when the amplitude leaves floating-point range.
    """
    spline = CubicSpline(form.s_grid, form.potential_q)
    a, b = float(form.s_grid[0]), float(form.s_grid[-1])

    def rhs(s, y):
        return [y[1], float(spline(s)) * y[0]]

    def crossing(s, y):
        return y[0]

    with np.errstate(over="ignore", invalid="ignore"):
        result = solve_ivp(
            rhs,
            (a, b),
            [0.0, 1.0],
            method="DOP853",
            rtol=rtol,
            atol=1e-14,
            max_step=(b - a) / 400,
            events=crossing,
        )
    if result.status != 0 or not np.all(np.isfinite(result.y)):
        logger.info("oscillation count on n=%s switched to the Pruefer angle", form.n)
        return _prufer_count(spline, a, b, rtol)
    start_gap = 1e-9 * (b - a)
    zeros = [s for s in result.t_events[0] if start_gap < s - a and s < b - start_gap]
    return len(zeros)


def _sign_changes(vector: np.ndarray) -> int:
    significant = vector[np.abs(vector) > 1e-10 * np.max(np.abs(vector))]
    return int(np.count_nonzero(np.diff(np.sign(significant)) != 0))


@dataclass(eq=False)
class RadialSpectrum:
    dim: int
    nodal_count: int
    annulus: AnnulusSpec
    grid_size: int
    weighted_eigs: np.ndarray
    plain_eigs: np.ndarray
    weighted_raw: tuple[np.ndarray, np.ndarray]
    plain_raw: tuple[np.ndarray, np.ndarray]
    weighted_grid_tolerance: np.ndarray
    plain_grid_tolerance: np.ndarray
    radii: np.ndarray
    eigenfunctions: np.ndarray
    node_counts: list[int]
    negative_count_weighted: int
    negative_count_plain: int
    oscillation_count: int
    sign_margin: float
    indeterminate: list[bool] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.annulus.n

    @property
    def margins(self) -> np.ndarray:
        return np.maximum(self.sign_margin, 5.0 * self.weighted_grid_tolerance)

    @property
    def counts_agree(self) -> bool:
        return self.negative_count_weighted == self.negative_count_plain == self.oscillation_count

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "selection_mode": self.annulus.selection_mode.value,
            "grid_size": self.grid_size,
            "weighted": self.weighted_eigs.tolist(),
            "plain": self.plain_eigs.tolist(),
            "weighted_raw": [v.tolist() for v in self.weighted_raw],
            "plain_raw": [v.tolist() for v in self.plain_raw],
            "weighted_grid_tolerance": self.weighted_grid_tolerance.tolist(),
            "plain_grid_tolerance": self.plain_grid_tolerance.tolist(),
            "negative_counts": {
                "weighted": self.negative_count_weighted,
                "plain": self.negative_count_plain,
                "oscillation": self.oscillation_count,
            },
            "indeterminate_flags": list(self.indeterminate),
            "node_counts": list(self.node_counts),
        }

    def write_eigenfunctions_csv(self, path: Path) -> Path:
        path = Path(path)
        header = "r," + ",".join(f"phi_{i + 1}" for i in range(self.eigenfunctions.shape[0]))
        table = np.column_stack([self.radii, self.eigenfunctions.T])
        np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")
        return path


def _normalized_eigenfunctions(form: SchroedingerForm, vectors: np.ndarray) -> np.ndarray:
    """v = e^{-(N-2)s/2} psi with the integral of psi^2 ds equal to 1/|S^{N-1}|."""
    omega = sphere_area(form.dim)
    s = form.s_grid
    out = np.zeros((vectors.shape[0], s.shape[0]))
    for i, psi_inner in enumerate(vectors):
        psi = np.concatenate(([0.0], psi_inner, [0.0]))
        norm = simpson(psi**2, x=s)
        psi = psi / math.sqrt(norm * omega)
        out[i] = np.exp(-(form.dim - 2) * s / 2.0) * psi
    return out


def radial_spectrum(
    sol: RadialSolution,
    annulus: AnnulusSpec,
    K: int | None = None,
    settings: SpectrumSettings | None = None,
) -> RadialSpectrum:
    """Lowest K weighted and plain radial eigenvalues on the annulus.

    Each problem is solved at G and 2G+1 interior points (step h and h/2);
    the reported values are the Richardson extrapolants, the raw values are
    kept alongside.
    """
    settings = settings or SpectrumSettings()
    K = K if K is not None else sol.m + 3
    G = settings.grid_size
    coarse = liouville_transform(sol.profile, annulus, G)
    fine = liouville_transform(sol.profile, annulus, 2 * G + 1)

    weighted_c = eigen_bisect(coarse, K, tolerance=settings.eigen_tolerance, vectors=False)
    weighted_f = eigen_bisect(fine, K, tolerance=settings.eigen_tolerance)
    plain_c = eigen_bisect(element_form(sol.profile, annulus, G), K, tolerance=settings.eigen_tolerance, vectors=False)
    plain_f = eigen_bisect(
        element_form(sol.profile, annulus, 2 * G + 1), K, tolerance=settings.eigen_tolerance, vectors=False
    )

    weighted, weighted_tol = richardson(weighted_c.values, weighted_f.values)
    plain, plain_tol = richardson(plain_c.values, plain_f.values)
    if not settings.richardson:
        weighted, plain = weighted_f.values.copy(), plain_f.values.copy()

    N = sol.dim
    margins = np.maximum(settings.sign_margin, 5.0 * weighted_tol)
    indeterminate = [
        bool(abs(b) <= mg or abs(b + (N - 1)) <= mg) for b, mg in zip(weighted, margins)
    ]
    if any(indeterminate):
        logger.info("indeterminate radial eigenvalue(s) for %s at n=%s, G=%s", sol.spec, annulus.n, G)

    spectrum = RadialSpectrum(
        dim=N,
        nodal_count=sol.m,
        annulus=annulus,
        grid_size=G,
        weighted_eigs=weighted,
        plain_eigs=plain,
        weighted_raw=(weighted_c.values, weighted_f.values),
        plain_raw=(plain_c.values, plain_f.values),
        weighted_grid_tolerance=weighted_tol,
        plain_grid_tolerance=plain_tol,
        radii=np.exp(fine.s_grid),
        eigenfunctions=_normalized_eigenfunctions(fine, weighted_f.vectors),
        node_counts=[_sign_changes(v) for v in weighted_f.vectors],
        negative_count_weighted=weighted_f.negative_count,
        negative_count_plain=plain_f.negative_count,
        oscillation_count=negative_count_oscillation(fine, settings.oscillation_rtol),
        sign_margin=settings.sign_margin,
        indeterminate=indeterminate,
    )
    if not spectrum.counts_agree:
        logger.warning(
            "negative counts disagree for %s at n=%s: weighted=%s plain=%s oscillation=%s",
            sol.spec,
            annulus.n,
            spectrum.negative_count_weighted,
            spectrum.negative_count_plain,
            spectrum.oscillation_count,
        )
    return spectrum


def negative_counts(sol: RadialSolution, n: int, grid_size: int) -> tuple[int, int]:
    """(weighted, plain) negative counts at annulus n without eigenvalues."""
    annulus = AnnulusSpec(n)
    weighted = liouville_transform(sol.profile, annulus, grid_size).pencil()
    plain = element_form(sol.profile, annulus, grid_size).pencil()
    return weighted.count_below(0.0), plain.count_below(0.0)


@dataclass
class ConvergenceRow:
    n: int
    weighted: list[float]
    plain: list[float]
    weighted_tolerance: list[float]
    plain_tolerance: list[float]
    negative_counts: tuple[int, int]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "weighted": self.weighted,
            "plain": self.plain,
            "weighted_tolerance": self.weighted_tolerance,
            "plain_tolerance": self.plain_tolerance,
            "negative_counts": list(self.negative_counts),
        }


@dataclass
class ConvergenceTable:
    rows: list[ConvergenceRow]
    plain_monotone: list[bool]
    weighted_monotone: list[bool]

    @property
    def monotone(self) -> bool:
        return all(self.plain_monotone) and all(self.weighted_monotone)

    @property
    def counts_stable(self) -> bool:
        return len({row.negative_counts for row in self.rows[-2:]}) <= 1

    def to_dict(self) -> dict:
        return {
            "rows": [row.to_dict() for row in self.rows],
            "plain_monotone": self.plain_monotone,
            "weighted_monotone": self.weighted_monotone,
        }


def _monotone_flags(values: list[np.ndarray], tolerances: list[np.ndarray]) -> list[bool]:
    K = len(values[0])
    flags = []
    for i in range(K):
        ok = True
        for k in range(len(values) - 1):
            slack = 2.0 * (tolerances[k][i] + tolerances[k + 1][i]) + 1e-12 * max(1.0, abs(values[k][i]))
            ok = ok and values[k][i] >= values[k + 1][i] - slack
        flags.append(bool(ok))
    return flags


def convergence_in_n(
    sol: RadialSolution,
    n_list: list[int],
    K: int | None = None,
    settings: SpectrumSettings | None = None,
) -> ConvergenceTable:
    """Eigenvalues for each n with flags for the nonincreasing trend in n."""
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError(f"n_list must be strictly increasing, got {n_list}")
    spectra = [radial_spectrum(sol, AnnulusSpec(n), K, settings) for n in n_list]
    rows = [
        ConvergenceRow(
            n=spec.n,
            weighted=spec.weighted_eigs.tolist(),
            plain=spec.plain_eigs.tolist(),
            weighted_tolerance=spec.weighted_grid_tolerance.tolist(),
            plain_tolerance=spec.plain_grid_tolerance.tolist(),
            negative_counts=(spec.negative_count_weighted, spec.negative_count_plain),
        )
        for spec in spectra
    ]
    return ConvergenceTable(
        rows=rows,
        plain_monotone=_monotone_flags(
            [s.plain_eigs for s in spectra], [s.plain_grid_tolerance for s in spectra]
        ),
        weighted_monotone=_monotone_flags(
            [s.weighted_eigs for s in spectra], [s.weighted_grid_tolerance for s in spectra]
        ),
    )


def derivative_eigenrelation_residual(sol: RadialSolution, annulus: AnnulusSpec, grid_size: int = 4096) -> float:
    """sup |r^2(-eta'' - (N-1)/r eta' - pV eta) + (N-1) eta| / (1 + |eta|), eta = u'.

    eta' is the exact derivative of the integrator's dense output; eta'' comes
    from the once-differentiated equation with u'' taken from the equation
    itself. The identity is exact for the continuum solution, so the value
    tracks the integration tolerance.
    """
    if not annulus.admits(sol):
        raise AnnulusError(
            f"1/n = {annulus.inner_radius:.6g} is not below r_1 = {sol.nodes.nodal_radii[0]:.6g}"
        )
    N, p = sol.dim, sol.p
    r = np.exp(np.linspace(-annulus.log_width, 0.0, grid_size + 2)[1:-1])
    u, eta = sol.profile.evaluate(r)
    pV = p * np.abs(u) ** (p - 1.0)
    eta_prime = sol.profile.second_derivative(r)
    second = -(N - 1) / r * eta - np.abs(u) ** (p - 1.0) * u
    eta_second = -(N - 1) / r * second + (N - 1) / r**2 * eta - pV * eta
    residual = r**2 * (-eta_second - (N - 1) / r * eta_prime - pV * eta) + (N - 1) * eta
    return float(np.max(np.abs(residual) / (1.0 + np.abs(eta))))


def nodal_rule_n(sol: RadialSolution) -> int:
    """max(floor(1/r_1) + 1, floor(M_0^{p-1}) + 1) as an exact integer."""
    by_radius = math.floor(1.0 / sol.nodes.nodal_radii[0]) + 1
    by_mass = math.floor(sol.nodes.extrema[0] ** (sol.p - 1.0)) + 1
    return max(by_radius, by_mass, 2)


def choose_n(
    sol: RadialSolution,
    mode: AnnulusMode | str = AnnulusMode.NODAL_RULE,
    *,
    n: int | None = None,
    settings: SpectrumSettings | None = None,
) -> AnnulusSpec:
    mode = AnnulusMode(mode)
    settings = settings or SpectrumSettings()
    if mode is AnnulusMode.EXPLICIT:
        if n is None:
            raise AnnulusError("explicit annulus mode needs n")
        return AnnulusSpec(n, mode)
    start = nodal_rule_n(sol)
    if mode is AnnulusMode.NODAL_RULE:
        return AnnulusSpec(start, mode)

    trajectory: list[tuple[int, int, int]] = []
    current = start
    for _ in range(settings.stabilize_max_doublings + 1):
        weighted, plain = negative_counts(sol, current, settings.grid_size)
        trajectory.append((current, weighted, plain))
        logger.debug("stabilizing n for %s: n=%s counts=(%s, %s)", sol.spec, current, weighted, plain)
        if len(trajectory) >= 3 and len({t[1:] for t in trajectory[-3:]}) == 1:
            return AnnulusSpec(current, mode, tuple(trajectory))
        current *= 2
    raise StabilizationError(
        f"counts for {sol.spec} did not settle after {settings.stabilize_max_doublings} doublings",
        trajectory,
    )
