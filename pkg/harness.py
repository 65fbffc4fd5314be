"""
Sweep harness: solve, count and report (N, m, p) instances.

Each instance runs solve -> choose_n -> radial spectrum -> combine -> report.
Indeterminate signs are refined in the order grid, then annulus n, then the
next tighter exponent of the sweep; when that budget is spent the instance is
reported unresolved.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from multiprocessing import Pool
from pathlib import Path

import yaml

import acceptance
from asymptotics import SweepDiagnostics, diagnostics_row
from limit_problem import constants_table
from radial_solver import (
    ProblemSpec,
    RadialSolverError,
    SolverSettings,
    check_pointwise_bounds,
    check_scaling_relations,
    critical_exponent,
    energy_per_region,
    solution_checks,
    solve_m_nodal,
    write_solution,
)
from spectral_angular import AngularError, morse_report
from spectral_radial import (
    AnnulusMode,
    AnnulusSpec,
    SpectralError,
    SpectrumSettings,
    choose_n,
    derivative_eigenrelation_residual,
    radial_spectrum,
)

logger = logging.getLogger(__name__)

DEFAULT_GAPS = (0.5, 0.2, 0.1, 0.05, 0.02, 0.01)

SUMMARY_FIELDNAMES = [
    "N",
    "m",
    "p",
    "p_used",
    "n",
    "grid",
    "morse_index",
    "formula_value",
    "radial_index",
    "match",
    "threshold_flags",
    "status",
    "beta_1",
    "min_margin",
    "error_message",
]


class ConfigError(ValueError):
    """Invalid sweep configuration."""


@dataclass
class SweepConfig:
    dim: int = 3
    nodal_counts: list[int] = field(default_factory=lambda: [1, 2, 3])
    p_list: list[float] | None = None
    grid_sizes: list[int] = field(default_factory=lambda: [4096, 8192, 16384])
    annulus_mode: str = AnnulusMode.NODAL_RULE.value
    n: int | None = None
    ivp_tolerance: float = 1e-10
    eigen_tolerance: float = 1e-6
    sign_margin: float = 1e-6
    quadrature_tolerance: float = 1e-6
    alpha: float = 0.25
    extra_eigenvalues: int = 3
    max_n_doublings: int = 2
    workers: int = 1
    out_dir: str = "runs"

    @property
    def exponents(self) -> list[float]:
        if self.p_list is not None:
            return list(self.p_list)
        p_s = critical_exponent(self.dim)
        return [round(p_s - gap, 12) for gap in DEFAULT_GAPS]

    @classmethod
    def from_mapping(cls, data: dict | None) -> "SweepConfig":
        data = dict(data or {})
        unknown = sorted(set(data) - set(cls.__dataclass_fields__))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        if isinstance(data.get("nodal_counts"), int):
            data["nodal_counts"] = [data["nodal_counts"]]
        config = cls(**data)
        config.validate()
        return config

    @classmethod
    def load(cls, path: Path) -> "SweepConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file '{path}' not found")
        text = path.read_text(encoding="utf-8")
        if path.suffix in {".yaml", ".yml"}:
            data = yaml.safe_load(text) or {}
        elif path.suffix == ".json":
            data = json.loads(text)
        else:
            raise ConfigError(f"unsupported config format '{path.suffix}'")
        return cls.from_mapping(data)

    def to_mapping(self) -> dict:
        data = asdict(self)
        data["p_list"] = self.exponents
        return data

    def validate(self) -> None:
        p_s = critical_exponent(self.dim) if self.dim >= 3 else math.inf
        if self.dim < 3:
            raise ConfigError(f"dim must be >= 3, got {self.dim}")
        if not self.nodal_counts or any(m < 1 for m in self.nodal_counts):
            raise ConfigError(f"nodal_counts must be a non-empty list of m >= 1, got {self.nodal_counts}")
        ps = self.exponents
        if not ps:
            raise ConfigError("p_list is empty")
        if any(b <= a for a, b in zip(ps, ps[1:])):
            raise ConfigError(f"p_list must be strictly increasing, got {ps}")
        if any(not 1.0 < p < p_s for p in ps):
            raise ConfigError(f"every p must lie in (1, {p_s:g}), got {ps}")
        if not self.grid_sizes or any(b <= a for a, b in zip(self.grid_sizes, self.grid_sizes[1:])):
            raise ConfigError(f"grid_sizes must be non-empty and increasing, got {self.grid_sizes}")
        for name in ("ivp_tolerance", "eigen_tolerance", "sign_margin", "quadrature_tolerance"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if AnnulusMode(self.annulus_mode) is AnnulusMode.EXPLICIT and not self.n:
            raise ConfigError("explicit annulus mode needs n")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def solver_settings(self) -> SolverSettings:
        return SolverSettings(ivp_tolerance=self.ivp_tolerance)

    def spectrum_settings(self, grid_size: int) -> SpectrumSettings:
        return SpectrumSettings(grid_size=grid_size, sign_margin=self.sign_margin)


@dataclass
class InstanceResult:
    spec: ProblemSpec
    p_requested: float
    status: str  # resolved | unresolved | failed
    trail: list[str] = field(default_factory=list)
    morse: dict | None = None
    spectrum: dict | None = None
    nodes: dict | None = None
    checks: dict | None = None
    diagnostics: dict | None = None
    error_message: str | None = None
    eigen_tolerance: float | None = None

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "p_requested": self.p_requested,
            "status": self.status,
            "trail": self.trail,
            "morse": self.morse,
            "spectrum": self.spectrum,
            "nodes": self.nodes,
            "checks": self.checks,
            "diagnostics": self.diagnostics,
            "error_message": self.error_message,
            "eigen_tolerance": self.eigen_tolerance,
        }


def instance_dirname(dim: int, m: int, p: float) -> str:
    return f"N{dim}_m{m}_p{p:.6g}"


def _instance_checks(sol, spectrum, config: SweepConfig) -> dict:
    checks: dict = {"solution": solution_checks(sol, config.solver_settings)}
    energies = energy_per_region(sol)
    checks["energies"] = [e.to_dict() for e in energies]
    checks["energy_identity_ok"] = all(e.identity_residual < config.quadrature_tolerance for e in energies)
    checks["bounds"] = check_pointwise_bounds(sol, config.alpha).to_dict()
    if sol.m >= 2:
        lower = solve_m_nodal(ProblemSpec(sol.dim, sol.p, sol.m - 1), config.solver_settings)
        checks["scaling"] = check_scaling_relations(sol, lower).to_dict()
    annulus = spectrum.annulus
    if annulus.admits(sol):
        checks["derivative_relation_residual"] = derivative_eigenrelation_residual(
            sol, annulus, config.grid_sizes[0]
        )
    return checks


def _resolve_spectrum(sol, annulus: AnnulusSpec, config: SweepConfig, trail: list[str]):
    """Grid refinement, then annulus doubling. Returns (spectrum, report | None)."""
    K = sol.m + config.extra_eigenvalues
    spectrum, report = None, None
    for doubling in range(config.max_n_doublings + 1):
        if doubling:
            annulus = AnnulusSpec(annulus.n * 2, annulus.selection_mode, annulus.trajectory)
            trail.append(f"double n to {annulus.n}")
        for grid in config.grid_sizes:
            spectrum = radial_spectrum(sol, annulus, K, config.spectrum_settings(grid))
            converged = float(max(spectrum.weighted_grid_tolerance[: sol.m + 1])) <= config.eigen_tolerance
            try:
                report = morse_report(sol, spectrum, margin=config.sign_margin)
            except AngularError as exc:
                report = None
                trail.append(f"grid {grid}, n {annulus.n}: {exc}")
                continue
            if report.resolved and (converged or grid == config.grid_sizes[-1]):
                if not converged:
                    trail.append(f"grid tolerance above {config.eigen_tolerance:g} at grid {grid}")
                return spectrum, report
            trail.append(f"grid {grid}, n {annulus.n}: refine (resolved={report.resolved}, converged={converged})")
    return spectrum, report


def run_instance(spec: ProblemSpec, config: SweepConfig, out_dir: Path | None = None) -> InstanceResult:
    """Solve and count one instance; failures are recorded, never raised."""
    trail: list[str] = []
    candidates = [spec.exponent] + [p for p in config.exponents if p > spec.exponent]
    result = InstanceResult(
        spec=spec,
        p_requested=spec.exponent,
        status="unresolved",
        trail=trail,
        eigen_tolerance=config.eigen_tolerance,
    )
    try:
        for p in candidates:
            current = ProblemSpec(spec.dim, p, spec.nodal_count)
            if p != spec.exponent:
                trail.append(f"advance p to {p:g}")
            sol = solve_m_nodal(current, config.solver_settings)
            annulus = choose_n(sol, config.annulus_mode, n=config.n, settings=config.spectrum_settings(config.grid_sizes[0]))
            spectrum, report = _resolve_spectrum(sol, annulus, config, trail)
            result.spec = current
            result.nodes = sol.nodes.to_dict()
            result.spectrum = spectrum.to_dict() if spectrum is not None else None
            result.morse = report.to_dict() if report is not None else None
            if report is not None and report.resolved:
                result.status = "resolved"
                result.checks = _instance_checks(sol, spectrum, config)
                result.diagnostics = diagnostics_row(sol, config.alpha)
                if out_dir is not None:
                    _write_instance(out_dir, sol, spectrum, result)
                return result
        logger.warning("instance N=%s m=%s p=%s unresolved: %s", spec.dim, spec.nodal_count, spec.exponent, trail[-1:])
    except (RadialSolverError, SpectralError, ValueError) as exc:
        logger.error("instance N=%s m=%s p=%s failed: %s", spec.dim, spec.nodal_count, spec.exponent, exc)
        result.status = "failed"
        result.error_message = str(exc)
    if out_dir is not None:
        _write_instance(out_dir, None, None, result)
    return result


def _dump(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_instance(out_dir: Path, sol, spectrum, result: InstanceResult) -> Path:
    target = Path(out_dir) / "instances" / instance_dirname(
        result.spec.dim, result.spec.nodal_count, result.p_requested
    )
    target.mkdir(parents=True, exist_ok=True)
    _dump(target / acceptance.REPORT_NAME, result.to_dict())
    if spectrum is not None:
        _dump(target / "spectrum.json", spectrum.to_dict())
        spectrum.write_eigenfunctions_csv(target / "eigenfunctions.csv")
    if sol is not None:
        write_solution(sol, target)
    return target


def _instance_job(job: tuple[dict, dict, str | None]) -> dict:
    """Top-level worker for the process pool."""
    spec_data, config_data, out_dir = job
    config = SweepConfig.from_mapping(config_data)
    spec = ProblemSpec(**spec_data)
    print(f"→ Running N={spec.dim} m={spec.nodal_count} p={spec.exponent:g}")
    result = run_instance(spec, config, Path(out_dir) if out_dir else None)
    print(f"✓ Done    N={spec.dim} m={spec.nodal_count} p={spec.exponent:g} ({result.status})")
    return result.to_dict()


@dataclass
class SweepOutcome:
    out_dir: Path
    results: list[dict]
    thresholds: dict[int, float | None]
    acceptance: acceptance.AcceptanceResult

    @property
    def exit_code(self) -> int:
        return 0 if self.acceptance.passed else 1


def lock_in_thresholds(results: list[dict]) -> dict[int, float | None]:
    """First requested p per m from which every later instance matches."""
    return {m: p for (_, m), p in acceptance.lock_in_exponents(results).items()}


def summary_row(r: dict, thresholds: dict[int, float | None]) -> dict:
    morse = r.get("morse") or {}
    spectrum = r.get("spectrum") or {}
    m = r["spec"]["nodal_count"]
    threshold = thresholds.get(m)
    weighted = spectrum.get("weighted") or [math.nan]
    return {
        "N": r["spec"]["dim"],
        "m": m,
        "p": r["p_requested"],
        "p_used": r["spec"]["exponent"],
        "n": spectrum.get("n", ""),
        "grid": spectrum.get("grid_size", ""),
        "morse_index": morse.get("morse_index", ""),
        "formula_value": morse.get("formula_value", ""),
        "radial_index": morse.get("radial_morse_index", ""),
        "match": bool(morse.get("match", False)) and r["status"] == "resolved",
        "threshold_flags": "locked" if threshold is not None and r["p_requested"] >= threshold else "",
        "status": r["status"],
        "beta_1": weighted[0],
        "min_margin": morse.get("min_margin", ""),
        "error_message": r.get("error_message") or "",
    }


def _write_plots(out_dir: Path, dim: int, m: int, rows: list[dict]) -> None:
    plots = out_dir / "plots"
    plots.mkdir(parents=True, exist_ok=True)
    series = {
        "beta_1": lambda r: (r.get("spectrum") or {}).get("weighted", [math.nan])[0],
        "beta_1_gap": lambda r: abs((r.get("spectrum") or {}).get("weighted", [math.nan])[0] + (dim - 1)),
        "morse_index": lambda r: (r.get("morse") or {}).get("morse_index", math.nan),
    }
    for name, value in series.items():
        lines = [f"{r['p_requested']!r} {value(r)!r}" for r in rows if r["status"] == "resolved"]
        (plots / f"N{dim}_m{m}_{name}.dat").write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_sweep(config: SweepConfig, out_dir: Path) -> SweepOutcome:
    """Run every (m, p) instance and write the summary, diagnostics and plot data."""
    config.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _dump(out_dir / "config.json", config.to_mapping())

    mapping = config.to_mapping()
    jobs = [
        ({"dim": config.dim, "exponent": p, "nodal_count": m}, mapping, str(out_dir))
        for m in sorted(config.nodal_counts)
        for p in config.exponents
    ]
    print(f"Total instances: {len(jobs)}")
    if config.workers > 1:
        with Pool(config.workers) as pool:
            results = pool.map(_instance_job, jobs)
    else:
        results = [_instance_job(job) for job in jobs]

    thresholds = lock_in_thresholds(results)
    with open(out_dir / "summary.csv", "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=SUMMARY_FIELDNAMES)
        writer.writeheader()
        for r in results:
            writer.writerow(summary_row(r, thresholds))

    for m in sorted(config.nodal_counts):
        rows = [r for r in results if r["spec"]["nodal_count"] == m]
        diag_rows = [
            r["diagnostics"]
            for r in rows
            if r["diagnostics"] is not None and r["spec"]["exponent"] == r["p_requested"]
        ]
        diagnostics = SweepDiagnostics(config.dim, m, diag_rows)
        diagnostics.to_csv(out_dir / f"diagnostics_N{config.dim}_m{m}.csv")
        diagnostics.write_plot_data(out_dir / "plots")
        _dump(out_dir / f"trends_N{config.dim}_m{m}.json", diagnostics.trends())
        _write_plots(out_dir, config.dim, m, rows)

    _dump(out_dir / "limits.json", constants_table((config.dim,)))
    verdict = acceptance.validate_reports(results)
    _dump(out_dir / "acceptance.json", verdict.to_dict())
    _dump(out_dir / "thresholds.json", {str(m): p for m, p in thresholds.items()})
    return SweepOutcome(out_dir=out_dir, results=results, thresholds=thresholds, acceptance=verdict)


def resolve_annulus(sol, mode: str, n: int | None, grid_size: int) -> AnnulusSpec:
    """CLI helper: `auto` maps to the nodal rule, an integer to an explicit n."""
    settings = replace(SpectrumSettings(), grid_size=grid_size)
    if n is None:
        return choose_n(sol, mode, settings=settings)
    return choose_n(sol, AnnulusMode.EXPLICIT, n=n, settings=settings)
