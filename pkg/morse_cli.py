#!/usr/bin/env python3
"""
Command-line runner for Lane-Emden Morse index computations.
"""

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from datetime import datetime
from pathlib import Path

from dotenv import load_dotenv

from harness import ConfigError, SweepConfig, resolve_annulus, run_instance, run_sweep
from limit_problem import constants_table
from radial_solver import InvalidProblemError, ProblemSpec, RadialSolverError, solve_m_nodal, write_solution
from spectral_radial import SpectralError, radial_spectrum

ROOT_DIR = Path(__file__).resolve().parent
CONFIG_PATH = ROOT_DIR / "lane_emden.config.yaml"

logger = logging.getLogger("morse_cli")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dim", type=int, help="Space dimension N >= 3")
    parser.add_argument("--m", type=int, help="Number of nodal regions")
    parser.add_argument("--p", type=float, help="Exponent p in (1, (N+2)/(N-2))")
    parser.add_argument(
        "--n",
        type=str,
        default=None,
        help="Annulus index: 'auto' for the nodal rule, or an integer (default: from config)",
    )
    parser.add_argument("--grid", type=int, help="Interior grid size G (the fine grid is 2G+1)")
    parser.add_argument("--tol-ivp", type=float, help="Relative tolerance of the radial integrator")
    parser.add_argument("--tol-eig", type=float, help="Target grid tolerance for eigenvalues")
    parser.add_argument("--margin", type=float, help="Sign margin for indeterminate eigenvalues")
    parser.add_argument("--out", type=str, help="Output folder (default: runs/<timestamp>)")
    parser.add_argument("--format", choices=["json", "csv"], default="json", help="Output format (default: json)")
    parser.add_argument("--config", type=str, help="YAML or JSON config mirroring SweepConfig")
    parser.add_argument(
        "--log-level",
        choices=["debug", "info", "warning", "error"],
        default="warning",
        help="Logging level (default: warning)",
    )


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse command line arguments for the five subcommands."""
    parser = argparse.ArgumentParser(description="Radial nodal Lane-Emden solutions and their Morse index")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "Solve one instance and write its profile and nodal data"),
        ("spectrum", "Radial eigenvalues of one instance"),
        ("morse", "Morse index report of one instance"),
        ("sweep", "Full sweep over m and p"),
        ("limits", "Limit-problem constants and residuals"),
    ):
        command = sub.add_parser(name, help=help_text)
        _add_common(command)
        if name == "sweep":
            command.add_argument("--p-list", type=float, nargs="+", help="Increasing exponents to sweep")
            command.add_argument("--m-list", type=int, nargs="+", help="Nodal counts to sweep")
            command.add_argument("--workers", type=int, help="Worker processes (default: LANE_EMDEN_WORKERS or 1)")
        if name == "limits":
            command.add_argument("--dims", type=int, nargs="+", default=[3, 4, 5, 6], help="Dimensions to tabulate")
    return parser.parse_args(argv)


def load_config(args: argparse.Namespace) -> SweepConfig:
    """Config file (flag, LANE_EMDEN_CONFIG, or the repo default) overridden by flags."""
    path = args.config or os.environ.get("LANE_EMDEN_CONFIG")
    if path:
        config = SweepConfig.load(Path(path))
    elif CONFIG_PATH.exists():
        config = SweepConfig.load(CONFIG_PATH)
    else:
        config = SweepConfig()

    overrides: dict = {}
    if args.dim is not None:
        overrides["dim"] = args.dim
        if getattr(args, "p_list", None) is None and config.p_list is not None and args.dim != config.dim:
            overrides["p_list"] = None
    if args.m is not None:
        overrides["nodal_counts"] = [args.m]
    if getattr(args, "m_list", None):
        overrides["nodal_counts"] = args.m_list
    if getattr(args, "p_list", None):
        overrides["p_list"] = args.p_list
    if args.grid is not None:
        overrides["grid_sizes"] = [args.grid, 2 * args.grid]
    if args.tol_ivp is not None:
        overrides["ivp_tolerance"] = args.tol_ivp
    if args.tol_eig is not None:
        overrides["eigen_tolerance"] = args.tol_eig
    if args.margin is not None:
        overrides["sign_margin"] = args.margin
    if args.n is not None:
        if args.n == "auto":
            overrides.update(annulus_mode="nodal_rule", n=None)
        else:
            overrides.update(annulus_mode="explicit", n=int(args.n))
    workers = getattr(args, "workers", None) or os.environ.get("LANE_EMDEN_WORKERS")
    if workers:
        overrides["workers"] = int(workers)
    config = replace(config, **overrides)
    config.validate()
    return config


def output_dir(args: argparse.Namespace) -> Path:
    if args.out:
        return Path(args.out)
    root = Path(os.environ.get("LANE_EMDEN_OUT", ROOT_DIR / "runs"))
    return root / datetime.now().strftime("%Y_%m_%d_%H_%M")


def _single_spec(args: argparse.Namespace, config: SweepConfig) -> ProblemSpec:
    if args.p is None:
        raise ConfigError("--p is required for single-instance commands")
    return ProblemSpec(config.dim, args.p, config.nodal_counts[0])


def _banner(title: str, lines: list[str]) -> None:
    print(f"\n{'=' * 60}")
    print(title)
    print(f"{'=' * 60}")
    for line in lines:
        print(line)
    print(f"{'=' * 60}\n")


def cmd_solve(args, config, out: Path) -> int:
    spec = _single_spec(args, config)
    sol = solve_m_nodal(spec, config.solver_settings)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = write_solution(sol, out)
    if args.format == "json":
        print(json.dumps({"spec": spec.to_dict(), **sol.nodes.to_dict()}, indent=2))
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(["quantity", "index", "value"])
        for name, values in sol.nodes.to_dict().items():
            writer.writerows((name, i, repr(v)) for i, v in enumerate(values))
    _banner(
        f"Solved N={spec.dim} m={spec.nodal_count} p={spec.exponent:g}",
        [f"M_0 = {sol.nodes.extrema[0]:.10g}", f"r_1 = {sol.nodes.nodal_radii[0]:.10g}", f"Artifacts: {csv_path}, {json_path}"],
    )
    return 0


def cmd_spectrum(args, config, out: Path) -> int:
    spec = _single_spec(args, config)
    sol = solve_m_nodal(spec, config.solver_settings)
    annulus = resolve_annulus(sol, config.annulus_mode, config.n, config.grid_sizes[0])
    spectrum = radial_spectrum(sol, annulus, sol.m + config.extra_eigenvalues, config.spectrum_settings(config.grid_sizes[0]))
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "csv":
        spectrum.write_eigenfunctions_csv(out / "eigenfunctions.csv")
    (out / "spectrum.json").write_text(json.dumps(spectrum.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps(spectrum.to_dict()["negative_counts"]))
    _banner(
        f"Radial spectrum N={spec.dim} m={spec.nodal_count} p={spec.exponent:g} n={annulus.n}",
        [f"beta~_{i + 1} = {b:.10g}" for i, b in enumerate(spectrum.weighted_eigs)],
    )
    return 0


def cmd_morse(args, config, out: Path) -> int:
    spec = _single_spec(args, config)
    result = run_instance(spec, config, out)
    morse = result.morse or {}
    status = "✓" if morse.get("match") else "✗"
    _banner(
        f"Morse index N={spec.dim} m={spec.nodal_count} p={spec.exponent:g}",
        [
            f"{status} morse_index = {morse.get('morse_index')} (m + N(m-1) = {morse.get('formula_value')})",
            f"  radial index = {morse.get('radial_morse_index')}, status = {result.status}",
            f"Artifacts: {out}",
        ],
    )
    return 0 if result.status == "resolved" else 1


def cmd_sweep(args, config, out: Path) -> int:
    _banner(
        f"Starting sweep: N={config.dim}, m in {config.nodal_counts}",
        [f"p_list: {config.exponents}", f"Artifacts folder: {out}"],
    )
    outcome = run_sweep(config, out)
    for failure in outcome.acceptance.failures:
        print(f"✗ {failure}")
    _banner(
        "SWEEP COMPLETE",
        [
            f"Acceptance: {outcome.acceptance.assertions_passed}/{outcome.acceptance.assertions_total} assertions",
            f"Lock-in exponents: {outcome.thresholds}",
            f"Artifacts: {out}",
        ],
    )
    return outcome.exit_code


def cmd_limits(args, config, out: Path) -> int:
    table = constants_table(tuple(args.dims))
    out.mkdir(parents=True, exist_ok=True)
    (out / "limits.json").write_text(json.dumps(table, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for dim, row in table.items():
        print(
            f"✓ N={dim}: S_N^(N/2) = {row['sobolev_energy']['closed_form']:.10g}, "
            f"sup r^2 V = {row['sup_r2V']:.10g}, eta* quotient = {row['rayleigh_eta_star']:.10g}"
        )
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "spectrum": cmd_spectrum,
    "morse": cmd_morse,
    "sweep": cmd_sweep,
    "limits": cmd_limits,
}


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    args = parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args)
        return COMMANDS[args.command](args, config, output_dir(args))
    except (ConfigError, InvalidProblemError) as e:
        print(f"\n✗ INVALID INPUT: {e}", file=sys.stderr)
        return 2
    except (RadialSolverError, SpectralError) as e:
        print(f"\n✗ ERROR: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
