"""Rescaled nodal regions and sweep trends."""

import math

import numpy as np
import pytest

from asymptotics import (
    EmptyWindowError,
    SweepDiagnostics,
    diagnostics_row,
    profile_distance,
    rescale_region,
    rescaled_energy,
    sweep_diagnostics,
)


def test_rescaled_profiles_peak_at_one(solve):
    sol = solve(3, 4.5, 3)
    for i in range(sol.m):
        z = rescale_region(sol, i)
        value, slope = z.evaluate(z.critical_x)
        assert value[0] == pytest.approx(1.0, rel=1e-9), f"region {i}"
        assert abs(slope[0]) < 1e-6
        assert z.scale_factor == pytest.approx(sol.nodes.extrema[i] ** 1.75)
        assert z.x_upper == pytest.approx(z.scale_factor)
    assert rescale_region(sol, 0).x_lower == 0.0


def test_rescale_region_index(two_nodal):
    with pytest.raises(ValueError):
        rescale_region(two_nodal, 2)
    with pytest.raises(ValueError):
        rescale_region(two_nodal, -1)


def test_first_region_approaches_bubble(solve):
    distances = [profile_distance(rescale_region(solve(3, p, 1), 0)).c0 for p in (4.8, 4.9, 4.95)]
    assert distances[0] > distances[1] > distances[2], distances
    assert distances[2] < 0.1


def test_profile_distance_windows(two_nodal):
    z1 = rescale_region(two_nodal, 1)
    with pytest.raises(ValueError):
        profile_distance(z1, inner_cut=0.0)
    with pytest.raises(ValueError):
        profile_distance(z1, R=0.05, inner_cut=0.1)
    with pytest.raises(EmptyWindowError):
        profile_distance(z1, R=0.5 * z1.x_lower, inner_cut=0.25 * z1.x_lower)
    dist = profile_distance(rescale_region(two_nodal, 0))
    assert dist.window[0] == 0.0
    assert dist.c0 >= 0.0 and dist.c1 >= 0.0


def test_rescaled_energy_factor(two_nodal):
    for i in range(two_nodal.m):
        energy = rescaled_energy(two_nodal, i)
        assert energy.residual < 1e-10, f"region {i}"


def test_diagnostics_row_columns(solve):
    row = diagnostics_row(solve(3, 4.5, 3))
    for name in ("p", "M_0", "M_2", "A_1", "B_2", "C_1", "R_2", "ratio_0", "ratio_1", "dist0_0", "energy_2", "max_pf"):
        assert name in row, f"missing column {name}"
    assert row["first_region_margin"] >= -1e-9
    assert row["ratio_0"] > 1.0


def _rows(values):
    return [{"p": p, "A_1": a, "B_1": b, "M_0": m, "energy_0": 1.0} for p, a, b, m in values]


def test_trends_on_monotone_rows():
    diagnostics = SweepDiagnostics(3, 2, _rows([(4.5, 1.0, 3.0, 10.0), (4.8, 2.0, 2.0, 20.0), (4.9, 3.0, 1.0, 40.0)]))
    assert diagnostics.trends() == {"A_1": True, "B_1": True, "M_0": True}
    assert diagnostics.violations == []


def test_trends_use_last_three_points():
    rows = _rows(
        [(4.0, 9.0, 0.5, 1.0), (4.5, 1.0, 3.0, 10.0), (4.8, 2.0, 2.5, 20.0), (4.9, 3.0, 2.6, 40.0)]
    )
    diagnostics = SweepDiagnostics(3, 2, rows)
    assert diagnostics.violations == ["B_1"]


def test_trends_need_three_points():
    assert SweepDiagnostics(3, 1, _rows([(4.5, 1.0, 1.0, 1.0)])).trends() == {}


def test_rows_must_increase_in_p():
    with pytest.raises(ValueError):
        SweepDiagnostics(3, 2, _rows([(4.8, 1.0, 1.0, 1.0), (4.5, 1.0, 1.0, 1.0)]))


def test_diagnostics_files(tmp_path):
    diagnostics = SweepDiagnostics(3, 2, _rows([(4.5, 1.0, 3.0, 10.0), (4.8, 2.0, 2.0, 20.0), (4.9, 3.0, 1.0, 40.0)]))
    csv_path = diagnostics.to_csv(tmp_path / "diagnostics.csv")
    assert csv_path.read_text().splitlines()[0] == "p,A_1,B_1,M_0,energy_0"
    written = diagnostics.write_plot_data(tmp_path / "plots", ["A_1"])
    assert [p.name for p in written] == ["N3_m2_A_1.dat"]
    lines = written[0].read_text().splitlines()
    assert [tuple(map(float, line.split())) for line in lines] == [(4.5, 1.0), (4.8, 2.0), (4.9, 3.0)]


def test_sweep_diagnostics_needs_three_points(two_nodal):
    with pytest.raises(ValueError):
        sweep_diagnostics([two_nodal, two_nodal])


def test_sweep_of_first_region_distances(solve):
    diagnostics = sweep_diagnostics([solve(3, p, 1) for p in (4.8, 4.9, 4.95)])
    trends = diagnostics.trends()
    assert trends["M_0"], "the maximum blows up as p approaches p_S"
    assert trends["dist0_0"]
    assert all(math.isfinite(row["max_pf"]) for row in diagnostics.rows)
    assert np.all(np.diff([row["p"] for row in diagnostics.rows]) > 0)


TAIL_EXPONENTS = (4.95, 4.98, 4.99)


@pytest.mark.slow
def test_two_nodal_sweep_trends(solve):
    diagnostics = sweep_diagnostics([solve(3, p, 2) for p in TAIL_EXPONENTS])
    trends = diagnostics.trends()
    assert trends["B_1"], [row["B_1"] for row in diagnostics.rows]
    assert trends["ratio_0"]


@pytest.mark.slow
def test_three_nodal_sweep_trends(solve):
    diagnostics = sweep_diagnostics([solve(3, p, 3) for p in TAIL_EXPONENTS])
    trends = diagnostics.trends()
    assert trends["R_1"], [row["R_1"] for row in diagnostics.rows]
    assert trends["ratio_0"] and trends["ratio_1"]


@pytest.mark.slow
def test_potential_sup_approaches_bubble_value(solve):
    # sup r^2 p U^{p-1} = N(N+2)/4 for N = 3
    values = [diagnostics_row(solve(3, p, 1))["max_pf"] for p in TAIL_EXPONENTS]
    assert all(abs(v - 3.75) / 3.75 < 0.05 for v in values), values
