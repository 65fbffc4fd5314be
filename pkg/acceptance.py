#!/usr/bin/env python3
"""
Assertions for Morse-index reports written by a sweep.
Run this on a finished sweep folder, or on a single report.json.
"""

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from asymptotics import SweepDiagnostics

REPORT_NAME = "report.json"
STATUSES = {"resolved", "unresolved", "failed"}
DERIVATIVE_RELATION_TOL = 1e-5
MARGIN_FACTOR = 10.0
TAIL = 3


@dataclass
class AcceptanceResult:
    """Structured result from validating one report or a whole sweep."""
    passed: bool
    assertions_passed: int
    assertions_total: int
    reports_checked: int = 0
    failures: list[str] = field(default_factory=list)
    error_message: str | None = None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "assertions_passed": self.assertions_passed,
            "assertions_total": self.assertions_total,
            "reports_checked": self.reports_checked,
            "failures": self.failures,
            "error_message": self.error_message,
        }


Check = tuple[str, Callable[[dict], bool], Callable[[dict], str]]


def _label(report: dict) -> str:
    spec = report.get("spec", {})
    return f"N={spec.get('dim')} m={spec.get('nodal_count')} p={spec.get('exponent')}"


def _morse(report: dict) -> dict:
    return report.get("morse") or {}


def _resolved(report: dict) -> bool:
    return report.get("status") == "resolved"


def _negative_radial_matches(report: dict) -> bool:
    morse = _morse(report)
    from_contributions = sorted(c["value"] for c in morse.get("contributions", []) if c["k"] == 0)
    from_radial = sorted(b for b in morse.get("weighted_eigs", []) if b < 0)
    return from_contributions == from_radial


def _counts_agree(report: dict) -> bool:
    counts = (report.get("spectrum") or {}).get("negative_counts", {})
    return counts.get("weighted") == counts.get("plain") == counts.get("oscillation")


def _checks(report: dict) -> dict:
    return report.get("checks") or {}


def _bound_failures(report: dict) -> list[str]:
    bounds = _checks(report)["bounds"]["checks"]
    return [c["name"] for c in bounds if c["status"] == "fail"]


def _scaling_ok(report: dict) -> bool:
    scaling = _checks(report).get("scaling")
    return scaling is None or scaling["passed"]


def _derivative_relation_ok(report: dict) -> bool:
    residual = _checks(report).get("derivative_relation_residual")
    return residual is None or residual < DERIVATIVE_RELATION_TOL


def _margin_ok(report: dict) -> bool:
    return _morse(report)["min_margin"] >= MARGIN_FACTOR * report["eigen_tolerance"]


def _eigen_window(report: dict) -> bool:
    spec = report["spec"]
    m, dim = spec["nodal_count"], spec["dim"]
    betas = _morse(report).get("weighted_eigs", [])
    return len(betas) > m and -(dim - 1) < betas[m - 1] < 0 <= betas[m]


BASE_CHECKS: list[Check] = [
    ("status", lambda r: r.get("status") in STATUSES, lambda r: f"unknown status {r.get('status')!r}"),
    ("completed", lambda r: r.get("status") != "failed", lambda r: f"instance failed: {r.get('error_message')}"),
    (
        "unresolved is never a match",
        lambda r: _resolved(r) or not _morse(r).get("match", False),
        lambda r: "unresolved instance reported as a match",
    ),
    (
        "lower bound",
        lambda r: not _resolved(r) or _morse(r)["morse_index"] >= _morse(r)["formula_value"],
        lambda r: f"morse index {_morse(r).get('morse_index')} below m + N(m-1) = {_morse(r).get('formula_value')}",
    ),
    (
        "radial index",
        lambda r: not _resolved(r) or _morse(r)["radial_morse_index"] == r["spec"]["nodal_count"],
        lambda r: f"radial index {_morse(r).get('radial_morse_index')} != m",
    ),
    (
        "k=0 contributions",
        lambda r: not _resolved(r) or _negative_radial_matches(r),
        lambda r: "k = 0 contributions differ from the negative radial eigenvalues",
    ),
    (
        "count equality",
        lambda r: not _resolved(r) or _counts_agree(r),
        lambda r: f"negative counts disagree: {(r.get('spectrum') or {}).get('negative_counts')}",
    ),
    (
        "ode residual",
        lambda r: not _resolved(r) or _checks(r)["solution"]["residual_ok"],
        lambda r: f"ODE residual {_checks(r)['solution']['ode_residual']:.3g} above the tolerance bound",
    ),
    (
        "energy identity",
        lambda r: not _resolved(r) or _checks(r)["energy_identity_ok"],
        lambda r: "per-region energies differ from the nonlinear terms",
    ),
    (
        "pointwise bounds",
        lambda r: not _resolved(r) or not _bound_failures(r),
        lambda r: f"bounds failed: {_bound_failures(r)}",
    ),
    (
        "scaling relations",
        lambda r: not _resolved(r) or _scaling_ok(r),
        lambda r: f"scaling residual {_checks(r)['scaling']['max_residual']:.3g}",
    ),
    (
        "derivative relation",
        lambda r: not _resolved(r) or _derivative_relation_ok(r),
        lambda r: f"derivative relation residual {_checks(r)['derivative_relation_residual']:.3g} >= {DERIVATIVE_RELATION_TOL:g}",
    ),
]

TIGHT_CHECKS: list[Check] = [
    ("match", lambda r: _morse(r).get("match", False), lambda r: f"morse index {_morse(r).get('morse_index')} != {_morse(r).get('formula_value')}"),
    ("eigenvalue window", _eigen_window, lambda r: f"beta~_m, beta~_m+1 outside the window: {_morse(r).get('weighted_eigs')}"),
    ("only k <= 1", lambda r: _morse(r).get("only_low_modes", False), lambda r: "a k >= 2 mode contributes"),
    (
        "sign margin",
        _margin_ok,
        lambda r: f"min margin {_morse(r).get('min_margin')} below {MARGIN_FACTOR:g} x eigen tolerance {r.get('eigen_tolerance')}",
    ),
]


def validate_report(report: dict, *, tight: bool = False) -> bool:
    """Validate one report dict and raise AssertionError on the first failure."""
    checks = BASE_CHECKS + (TIGHT_CHECKS if tight else [])
    for name, predicate, message in checks:
        assert predicate(report), f"{_label(report)}: {message(report)}"
        print(f"✓ {_label(report)}: {name}")
    return True


def validate_report_file(path: Path, *, tight: bool = False) -> bool:
    assert path.exists(), f"Report '{path}' not found"
    return validate_report(json.loads(path.read_text(encoding="utf-8")), tight=tight)


def validate_with_metrics(report: dict, *, tight: bool = False) -> AcceptanceResult:
    """Run every check on one report and collect failures instead of raising."""
    checks = BASE_CHECKS + (TIGHT_CHECKS if tight else [])
    passed, failures = 0, []
    for name, predicate, message in checks:
        try:
            ok = predicate(report)
        except (KeyError, TypeError, IndexError) as exc:
            ok, detail = False, f"malformed report ({exc})"
        else:
            detail = message(report) if not ok else ""
        if ok:
            passed += 1
        else:
            failures.append(f"{_label(report)}: {name}: {detail}")
    return AcceptanceResult(
        passed=not failures,
        assertions_passed=passed,
        assertions_total=len(checks),
        reports_checked=1,
        failures=failures,
    )


def _key(report: dict) -> tuple[int, int]:
    return report["spec"]["dim"], report["spec"]["nodal_count"]


def _group(reports: list[dict]) -> dict[tuple[int, int], list[dict]]:
    groups: dict[tuple[int, int], list[dict]] = {}
    for report in reports:
        groups.setdefault(_key(report), []).append(report)
    return {key: sorted(rows, key=lambda r: r["p_requested"]) for key, rows in groups.items()}


def lock_in_exponents(reports: list[dict]) -> dict[tuple[int, int], float | None]:
    """First requested p per (N, m) from which every later instance matches."""
    thresholds: dict[tuple[int, int], float | None] = {}
    for key, rows in _group(reports).items():
        threshold = None
        for row in reversed(rows):
            if _resolved(row) and _morse(row).get("match"):
                threshold = row["p_requested"]
            else:
                break
        thresholds[key] = threshold
    return thresholds


def tight_exponents(reports: list[dict]) -> dict[tuple[int, int], float]:
    """Smallest requested p per (N, m) held to the tight checks.

    That is the lock-in exponent, or the largest p when nothing locks in.
    """
    locked = lock_in_exponents(reports)
    tight = {}
    for key, rows in _group(reports).items():
        largest = rows[-1]["p_requested"]
        tight[key] = largest if locked[key] is None else min(locked[key], largest)
    return tight


def _tail(rows: list[dict]) -> list[dict]:
    """Resolved instances solved at their requested p."""
    return [r for r in rows if _resolved(r) and r["spec"]["exponent"] == r["p_requested"]]


def sweep_failures(reports: list[dict]) -> tuple[int, list[str]]:
    """Checks over the tail of each (N, m) sweep; returns (checks run, failures)."""
    total, failures = 0, []
    for (dim, m), rows in _group(reports).items():
        tail = _tail(rows)
        if len(tail) < TAIL:
            continue
        label = f"N={dim} m={m}"
        total += 2
        gaps = [abs(r["morse"]["weighted_eigs"][0] + (dim - 1)) for r in tail[-TAIL:]]
        if not all(b < a for a, b in zip(gaps, gaps[1:])):
            failures.append(f"{label}: beta~_1 approach: |beta~_1 + {dim - 1}| not decreasing: {gaps}")
        rows_with_diagnostics = [r["diagnostics"] for r in tail if r.get("diagnostics")]
        if len(rows_with_diagnostics) < TAIL:
            failures.append(f"{label}: trends: diagnostics missing on resolved instances")
            continue
        violations = SweepDiagnostics(dim, m, rows_with_diagnostics).violations
        if violations:
            failures.append(f"{label}: trends: not monotone on the last {TAIL} points: {violations}")
    return total, failures


def validate_reports(reports: list[dict]) -> AcceptanceResult:
    tight = tight_exponents(reports)
    total = AcceptanceResult(passed=True, assertions_passed=0, assertions_total=0)
    for report in reports:
        result = validate_with_metrics(report, tight=report["p_requested"] >= tight[_key(report)])
        total.assertions_passed += result.assertions_passed
        total.assertions_total += result.assertions_total
        total.reports_checked += 1
        total.failures.extend(result.failures)
    checked, failures = sweep_failures(reports)
    total.assertions_total += checked
    total.assertions_passed += checked - len(failures)
    total.failures.extend(failures)
    total.passed = not total.failures
    return total


def validate_sweep_dir(directory: Path) -> AcceptanceResult:
    """Validate every instance report under a sweep folder."""
    paths = sorted(Path(directory).glob(f"instances/*/{REPORT_NAME}"))
    if not paths:
        return AcceptanceResult(
            passed=False,
            assertions_passed=0,
            assertions_total=1,
            error_message=f"No reports under '{directory}'",
        )
    try:
        reports = [json.loads(p.read_text(encoding="utf-8")) for p in paths]
    except (OSError, json.JSONDecodeError) as exc:
        return AcceptanceResult(False, 0, 1, error_message=str(exc))
    return validate_reports(reports)


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("runs")
    try:
        if target.is_file():
            validate_report_file(target, tight="--tight" in sys.argv)
        else:
            result = validate_sweep_dir(target)
            for failure in result.failures:
                print(f"✗ {failure}", file=sys.stderr)
            assert result.passed, result.error_message or f"{len(result.failures)} check(s) failed"
            print(f"ALL ASSERTIONS PASSED ✓ ({result.assertions_passed}/{result.assertions_total})")
        sys.exit(0)
    except AssertionError as e:
        print(f"\n✗ ASSERTION FAILED: {e}", file=sys.stderr)
        sys.exit(1)
    except Exception as e:
        print(f"\n✗ ERROR: {e}", file=sys.stderr)
        sys.exit(1)
