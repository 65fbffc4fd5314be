#!/usr/bin/env python3
"""
Summarize sweep artifacts into one results CSV.

This script walks a runs/ folder, finds every sweep (a folder holding
config.json and instances/), re-validates each instance report, and writes
a fresh CSV with one row per instance.

Usage:
    python dev/summarize_sweeps.py                 # Summarize runs/ folder
    python dev/summarize_sweeps.py runs-n4         # Summarize a specific folder
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

ROOT_DIR = Path(__file__).resolve().parents[1]
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from acceptance import REPORT_NAME, tight_exponents, validate_with_metrics  # noqa: E402

FIELDNAMES = [
    "sweep_id",
    "N",
    "m",
    "p",
    "p_used",
    "status",
    "morse_index",
    "formula_value",
    "radial_index",
    "match",
    "n",
    "grid",
    "beta_1",
    "beta_m",
    "beta_m_plus_1",
    "passed",
    "assertions_passed",
    "assertions_total",
    "trail_length",
    "error_message",
]


def find_sweeps(runs_folder: Path) -> list[Path]:
    """Folders under runs_folder that look like sweep outputs."""
    return sorted(p.parent for p in runs_folder.rglob("config.json") if (p.parent / "instances").is_dir())


def load_reports(sweep: Path) -> list[dict]:
    reports = []
    for path in sorted(sweep.glob(f"instances/*/{REPORT_NAME}")):
        try:
            reports.append(json.loads(path.read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            print(f"Skipping unreadable report {path}: {exc}")
    return reports


def _eig(report: dict, index: int):
    weighted = (report.get("spectrum") or {}).get("weighted") or []
    return weighted[index] if 0 <= index < len(weighted) else ""


def report_row(sweep_id: str, report: dict, tight: bool) -> dict:
    morse = report.get("morse") or {}
    spectrum = report.get("spectrum") or {}
    spec = report["spec"]
    m = spec["nodal_count"]
    validation = validate_with_metrics(report, tight=tight)
    return {
        "sweep_id": sweep_id,
        "N": spec["dim"],
        "m": m,
        "p": report["p_requested"],
        "p_used": spec["exponent"],
        "status": report["status"],
        "morse_index": morse.get("morse_index", ""),
        "formula_value": morse.get("formula_value", ""),
        "radial_index": morse.get("radial_morse_index", ""),
        "match": morse.get("match", False),
        "n": spectrum.get("n", ""),
        "grid": spectrum.get("grid_size", ""),
        "beta_1": _eig(report, 0),
        "beta_m": _eig(report, m - 1),
        "beta_m_plus_1": _eig(report, m),
        "passed": validation.passed,
        "assertions_passed": validation.assertions_passed,
        "assertions_total": validation.assertions_total,
        "trail_length": len(report.get("trail", [])),
        "error_message": "; ".join(validation.failures) or (report.get("error_message") or ""),
    }


def summarize_sweeps(runs_folder: Path, output_path: Path) -> int:
    """Write one CSV row per instance across all sweeps; returns the row count."""
    sweeps = find_sweeps(runs_folder)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(output_path, "w", newline="") as outfile:
        writer = csv.DictWriter(outfile, fieldnames=FIELDNAMES)
        writer.writeheader()
        for sweep in sweeps:
            reports = load_reports(sweep)
            if not reports:
                continue
            tight = tight_exponents(reports)
            sweep_id = str(sweep.relative_to(runs_folder)) if sweep != runs_folder else sweep.name
            for report in reports:
                key = (report["spec"]["dim"], report["spec"]["nodal_count"])
                writer.writerow(report_row(sweep_id, report, report["p_requested"] >= tight[key]))
                count += 1

    print(f"Summary of {count} instance(s) from {len(sweeps)} sweep(s) written to {output_path}")
    return count


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Summarize sweep artifacts into a CSV.")
    parser.add_argument(
        "runs_folder",
        nargs="?",
        default="runs",
        help="Folder containing sweeps (default: runs)",
    )
    parser.add_argument(
        "--output",
        default="runs/summarized_results.csv",
        help="Output CSV path (default: runs/summarized_results.csv)",
    )
    args = parser.parse_args()
    summarize_sweeps(Path(args.runs_folder), Path(args.output))
