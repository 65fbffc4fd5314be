#!/usr/bin/env python3
"""
Regrade existing sweep folders with the current acceptance checks.

This reads each sweep's instance reports, re-validates them, rewrites
acceptance.json and refreshes the match/lock-in columns of summary.csv.

Usage:
    python dev/regrade_sweeps.py runs/2026_10_01_09_30     # Regrade one sweep
    python dev/regrade_sweeps.py runs --all                # Regrade every sweep below runs/
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

from acceptance import AcceptanceResult, validate_reports  # noqa: E402
from harness import SUMMARY_FIELDNAMES, summary_row, lock_in_thresholds  # noqa: E402

from summarize_sweeps import find_sweeps, load_reports  # noqa: E402


def regrade(sweep: Path) -> AcceptanceResult:
    """Regrade one sweep folder in place."""
    reports = load_reports(sweep)
    assert reports, f"No instance reports under {sweep}"

    result = validate_reports(reports)
    (sweep / "acceptance.json").write_text(
        json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    reports.sort(key=lambda r: (r["spec"]["nodal_count"], r["p_requested"]))
    thresholds = lock_in_thresholds(reports)
    output_path = sweep / "summary_new.csv"
    with open(output_path, "w", newline="") as outfile:
        writer = csv.DictWriter(outfile, fieldnames=SUMMARY_FIELDNAMES)
        writer.writeheader()
        for report in reports:
            writer.writerow(summary_row(report, thresholds))
    final_path = sweep / "summary.csv"
    output_path.replace(final_path)

    status = "PASSED" if result.passed else "FAILED"
    print(f"{sweep}: {status} ({result.assertions_passed}/{result.assertions_total} assertions)")
    for failure in result.failures:
        print(f"  ✗ {failure}")
    return result


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Regrade sweep artifacts with updated validation.")
    parser.add_argument(
        "folder",
        nargs="?",
        default="runs",
        help="Sweep folder, or a folder of sweeps with --all (default: runs)",
    )
    parser.add_argument("--all", action="store_true", help="Regrade every sweep below the folder")
    args = parser.parse_args()
    targets = find_sweeps(Path(args.folder)) if args.all else [Path(args.folder)]
    results = [regrade(target) for target in targets]
    sys.exit(0 if all(r.passed for r in results) else 1)
