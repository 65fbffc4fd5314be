"""Report assertions used to grade sweeps."""

import copy
import json

import pytest

from acceptance import (
    BASE_CHECKS,
    TIGHT_CHECKS,
    lock_in_exponents,
    sweep_failures,
    tight_exponents,
    validate_report,
    validate_report_file,
    validate_reports,
    validate_sweep_dir,
    validate_with_metrics,
)

REPORT = {
    "spec": {"dim": 3, "exponent": 4.99, "nodal_count": 2},
    "p_requested": 4.99,
    "status": "resolved",
    "error_message": None,
    "morse": {
        "morse_index": 5,
        "formula_value": 5,
        "radial_morse_index": 2,
        "match": True,
        "only_low_modes": True,
        "min_margin": 0.1,
        "weighted_eigs": [-2.1, -1.9, 1.5, 7.0],
        "contributions": [
            {"i": 1, "k": 0, "value": -2.1, "multiplicity": 1},
            {"i": 2, "k": 0, "value": -1.9, "multiplicity": 1},
            {"i": 1, "k": 1, "value": -0.1, "multiplicity": 3},
        ],
    },
    "spectrum": {"negative_counts": {"weighted": 2, "plain": 2, "oscillation": 2}},
    "eigen_tolerance": 1e-6,
    "checks": {
        "solution": {"residual_ok": True, "ode_residual": 2e-10},
        "energy_identity_ok": True,
        "bounds": {
            "checks": [
                {"name": "first_region", "status": "pass", "margin": 0.01, "value": None},
                {"name": "potential_sup", "status": "pass", "margin": 0.03, "value": 3.81},
            ]
        },
        "scaling": {"passed": True, "max_residual": 3e-9},
        "derivative_relation_residual": 4e-8,
    },
    "diagnostics": {"p": 4.99, "M_0": 40.0, "B_1": 1.2, "ratio_0": 9.0},
}


def _report(**changes) -> dict:
    report = copy.deepcopy(REPORT)
    for path, value in changes.items():
        target = report
        *parents, leaf = path.split("__")
        for key in parents:
            target = target[key]
        target[leaf] = value
    return report


def test_clean_report_passes_every_check(capsys):
    assert validate_report(REPORT, tight=True)
    result = validate_with_metrics(REPORT, tight=True)
    assert result.passed
    assert result.assertions_passed == result.assertions_total == len(BASE_CHECKS) + len(TIGHT_CHECKS)
    assert "✓" in capsys.readouterr().out


def test_lower_bound_violation():
    report = _report(morse__morse_index=3, morse__match=False)
    result = validate_with_metrics(report)
    assert not result.passed
    assert any("lower bound" in failure for failure in result.failures)
    with pytest.raises(AssertionError):
        validate_report(report)


def test_unresolved_report_cannot_match():
    report = _report(status="unresolved")
    assert validate_with_metrics(report).passed is False
    report["morse"]["match"] = False
    assert validate_with_metrics(report).passed
    assert not validate_with_metrics(report, tight=True).passed


def test_count_disagreement():
    report = _report(spectrum__negative_counts={"weighted": 2, "plain": 2, "oscillation": 3})
    failures = validate_with_metrics(report).failures
    assert len(failures) == 1 and "count equality" in failures[0]


def test_eigenvalue_window():
    report = _report(morse__weighted_eigs=[-2.1, -1.9, -0.2, 7.0])
    failures = validate_with_metrics(report, tight=True).failures
    assert any("eigenvalue window" in failure for failure in failures)


def test_malformed_report_is_a_failure():
    report = _report()
    del report["morse"]["radial_morse_index"]
    result = validate_with_metrics(report)
    assert not result.passed
    assert any("malformed" in failure for failure in result.failures)


def test_failed_instance():
    report = _report(status="failed", error_message="boom", morse=None)
    failures = validate_with_metrics(report).failures
    assert failures == ["N=3 m=2 p=4.99: completed: instance failed: boom"]


def test_tight_exponents_and_sweep(tmp_path):
    loose = _report(p_requested=4.5, morse__match=False, morse__morse_index=5)
    loose["spec"]["exponent"] = 4.5
    assert tight_exponents([loose, REPORT]) == {(3, 2): 4.99}
    result = validate_reports([loose, REPORT])
    assert result.passed and result.reports_checked == 2

    for name, report in (("N3_m2_p4.5", loose), ("N3_m2_p4.99", REPORT)):
        folder = tmp_path / "instances" / name
        folder.mkdir(parents=True)
        (folder / "report.json").write_text(json.dumps(report))
    assert validate_sweep_dir(tmp_path).passed
    assert validate_report_file(tmp_path / "instances" / "N3_m2_p4.99" / "report.json", tight=True)


def test_empty_sweep_dir(tmp_path):
    result = validate_sweep_dir(tmp_path)
    assert not result.passed
    assert "No reports" in result.error_message


@pytest.mark.parametrize(
    "path, value, name",
    [
        ("checks__solution__residual_ok", False, "ode residual"),
        ("checks__energy_identity_ok", False, "energy identity"),
        ("checks__scaling__passed", False, "scaling relations"),
        ("checks__derivative_relation_residual", 3e-5, "derivative relation"),
    ],
)
def test_instance_checks_are_graded(path, value, name):
    failures = validate_with_metrics(_report(**{path: value})).failures
    assert len(failures) == 1 and name in failures[0], failures


def test_failed_bound_is_named():
    report = _report()
    report["checks"]["bounds"]["checks"][1]["status"] = "fail"
    failures = validate_with_metrics(report).failures
    assert failures == ["N=3 m=2 p=4.99: pointwise bounds: bounds failed: ['potential_sup']"]


def test_optional_checks_may_be_absent():
    report = _report()
    del report["checks"]["scaling"]
    del report["checks"]["derivative_relation_residual"]
    assert validate_with_metrics(report, tight=True).passed


def test_sign_margin_is_tight_only():
    report = _report(morse__min_margin=5e-6)
    assert validate_with_metrics(report).passed
    failures = validate_with_metrics(report, tight=True).failures
    assert len(failures) == 1 and "sign margin" in failures[0]


def _sweep(gaps, b_values, ps=(4.95, 4.98, 4.99)) -> list[dict]:
    reports = []
    for p, gap, b in zip(ps, gaps, b_values):
        report = _report(p_requested=p, morse__weighted_eigs=[-2.0 + gap, -1.9, 1.5, 7.0])
        report["spec"]["exponent"] = p
        report["morse"]["contributions"][0]["value"] = -2.0 + gap
        report["diagnostics"] = {"p": p, "M_0": 10.0 * p, "B_1": b, "ratio_0": p}
        reports.append(report)
    return reports


def test_sweep_tail_checks():
    clean = _sweep([0.3, 0.2, 0.1], [1.3, 1.2, 1.1])
    assert sweep_failures(clean) == (2, [])
    assert validate_reports(clean).passed

    checked, failures = sweep_failures(_sweep([0.3, 0.2, 0.25], [1.3, 1.2, 1.1]))
    assert checked == 2 and len(failures) == 1 and "beta~_1 approach" in failures[0]

    result = validate_reports(_sweep([0.3, 0.2, 0.1], [1.3, 1.2, 1.25]))
    assert not result.passed
    assert result.failures == ["N=3 m=2: trends: not monotone on the last 3 points: ['B_1']"]


def test_short_sweeps_skip_tail_checks():
    assert sweep_failures(_sweep([0.3, 0.2], [1.3, 1.2])) == (0, [])


def test_tight_checks_apply_from_lock_in():
    early = _report(status="unresolved", p_requested=4.5, morse__match=False)
    early["spec"]["exponent"] = 4.5
    locked = _report(p_requested=4.8, morse__weighted_eigs=[-2.1, -2.05, 1.5, 7.0])
    locked["spec"]["exponent"] = 4.8
    locked["morse"]["contributions"][1]["value"] = -2.05
    reports = [early, locked, REPORT]
    assert lock_in_exponents(reports) == {(3, 2): 4.8}
    assert tight_exponents(reports) == {(3, 2): 4.8}
    failures = validate_reports(reports).failures
    assert failures == [
        "N=3 m=2 p=4.8: eigenvalue window: beta~_m, beta~_m+1 outside the window: [-2.1, -2.05, 1.5, 7.0]"
    ]
