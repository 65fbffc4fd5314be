"""Radial eigenvalue problems on the annulus."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import simpson

from radial_solver import RadialProfile, sphere_area
from spectral_radial import (
    AnnulusError,
    AnnulusMode,
    AnnulusSpec,
    InterpolationDomainError,
    RadialElementForm,
    SchroedingerForm,
    SpectrumSettings,
    StabilizationError,
    choose_n,
    convergence_in_n,
    derivative_eigenrelation_residual,
    eigen_bisect,
    element_form,
    liouville_transform,
    negative_count_oscillation,
    negative_counts,
    nodal_rule_n,
    radial_spectrum,
)
from tridiagonal import richardson

FAST = SpectrumSettings(grid_size=1024)


def _constant_form(c: float, n: int = 100, grid_size: int = 256) -> SchroedingerForm:
    s = np.linspace(-math.log(n), 0.0, grid_size + 2)
    return SchroedingerForm(dim=3, n=n, s_grid=s, potential_q=np.full(grid_size + 2, c))


@pytest.fixture(scope="module")
def spectrum(two_nodal):
    return radial_spectrum(two_nodal, choose_n(two_nodal), settings=FAST)


def test_constant_potential_discrete_spectrum():
    form = _constant_form(0.25)
    h, L = form.step, math.log(100)
    k = np.arange(1, 6)
    expected = 0.25 + 4.0 / h**2 * np.sin(k * math.pi * h / (2.0 * L)) ** 2
    pairs = eigen_bisect(form, 5)
    assert_allclose(pairs.values, expected, rtol=1e-10)
    assert pairs.negative_count == 0


def test_richardson_recovers_continuum_eigenvalues():
    coarse = eigen_bisect(_constant_form(0.25, grid_size=256), 4, vectors=False).values
    fine = eigen_bisect(_constant_form(0.25, grid_size=513), 4, vectors=False).values
    exact = 0.25 + (np.arange(1, 5) * math.pi / math.log(100)) ** 2
    extrapolated, tol = richardson(coarse, fine)
    raw_error = np.abs(fine - exact)
    assert np.all(np.abs(extrapolated - exact) < 1e-2 * raw_error)
    assert np.all(tol > np.abs(extrapolated - exact))


@pytest.mark.parametrize("c, expected", [(1.0, 0), (-0.1, 0), (-1.0, 1), (-5.0, 3)])
def test_oscillation_count_matches_bisection(c, expected):
    form = _constant_form(c)
    assert form.pencil().count_below(0.0) == expected
    assert negative_count_oscillation(form) == expected


def _element_form(pV: float, n: int = 2, grid_size: int = 256, dim: int = 3) -> RadialElementForm:
    r = np.exp(np.linspace(-math.log(n), 0.0, grid_size + 2))
    r[-1] = 1.0
    return RadialElementForm(dim=dim, n=n, r_grid=r, potential_v=np.full(grid_size + 2, pV))


def test_element_form_matches_annulus_eigenvalues():
    # N = 3, v = w / r: -w'' - c w = beta w on (1/2, 1), so beta_k = (2 k pi)^2 - c
    exact = (2.0 * math.pi * np.arange(1, 4)) ** 2 - 50.0
    coarse = eigen_bisect(_element_form(50.0), 3, vectors=False)
    fine = eigen_bisect(_element_form(50.0, grid_size=513), 3, vectors=False)
    extrapolated, _ = richardson(coarse.values, fine.values)
    assert np.all(np.abs(fine.values - exact) > 0)
    assert np.all(np.abs(extrapolated - exact) < 0.1 * np.abs(fine.values - exact))
    assert fine.negative_count == 1


@pytest.mark.parametrize("c, expected", [(10.0, 0), (50.0, 1), (200.0, 2)])
def test_plain_and_weighted_discretizations_count_alike(c, expected):
    n, grid_size = 2, 256
    s = np.linspace(-math.log(n), 0.0, grid_size + 2)
    weighted = SchroedingerForm(dim=3, n=n, s_grid=s, potential_q=0.25 - c * np.exp(2.0 * s))
    plain = _element_form(c, n=n, grid_size=grid_size)
    w_values = eigen_bisect(weighted, 3, vectors=False).values
    p_values = eigen_bisect(plain, 3, vectors=False).values
    assert not np.allclose(w_values, p_values)
    assert weighted.pencil().count_below(0.0) == plain.pencil().count_below(0.0) == expected
    assert negative_count_oscillation(weighted) == expected


def test_boundary_potential(two_nodal):
    form = liouville_transform(two_nodal.profile, AnnulusSpec(100), 256)
    assert form.potential_q[-1] == pytest.approx(0.25, abs=1e-12), "u vanishes at r = 1"
    assert form.grid_size == 256


def test_small_grid_rejected(two_nodal):
    with pytest.raises(ValueError):
        liouville_transform(two_nodal.profile, AnnulusSpec(10), 32)


def test_profile_domain_is_checked():
    grid = np.linspace(0.5, 1.0, 20)
    profile = RadialProfile(
        dim=3,
        exponent=2.0,
        grid=grid,
        values=1.0 - grid,
        derivatives=-np.ones_like(grid),
        ivp_tolerance=1e-10,
    )
    with pytest.raises(InterpolationDomainError):
        liouville_transform(profile, AnnulusSpec(4), 128)


def test_annulus_spec_validation():
    for bad in (1, 0, 2.5):
        with pytest.raises(AnnulusError):
            AnnulusSpec(bad)
    assert AnnulusSpec(8).inner_radius == 0.125


def test_radial_index_and_count_equality(spectrum, two_nodal):
    assert spectrum.counts_agree, spectrum.to_dict()["negative_counts"]
    assert spectrum.negative_count_weighted == two_nodal.m
    assert int(np.sum(spectrum.weighted_eigs < 0)) == two_nodal.m
    assert len(spectrum.weighted_eigs) == two_nodal.m + 3


def test_plain_and_weighted_signs_agree(spectrum):
    assert np.array_equal(np.sign(spectrum.weighted_eigs), np.sign(spectrum.plain_eigs))
    assert np.all(np.diff(spectrum.weighted_eigs) > 0)
    assert np.all(np.diff(spectrum.plain_eigs) > 0)


def test_eigenfunction_nodes_and_normalization(spectrum):
    assert spectrum.node_counts == list(range(len(spectrum.weighted_eigs)))
    s = np.log(spectrum.radii)
    for v in spectrum.eigenfunctions:
        psi = v * spectrum.radii ** 0.5
        assert simpson(psi**2, x=s) * sphere_area(3) == pytest.approx(1.0, rel=1e-12)
        assert v[0] == 0.0 and v[-1] == 0.0


def test_eigenfunctions_csv(spectrum, tmp_path):
    path = spectrum.write_eigenfunctions_csv(tmp_path / "eigenfunctions.csv")
    lines = path.read_text().splitlines()
    assert lines[0].startswith("r,phi_1,phi_2")
    assert len(lines) == 1 + spectrum.radii.shape[0]


def test_spectrum_dict(spectrum):
    data = spectrum.to_dict()
    assert data["selection_mode"] == "nodal_rule"
    assert data["grid_size"] == 1024
    assert len(data["weighted_raw"]) == 2
    assert set(data["negative_counts"]) == {"weighted", "plain", "oscillation"}


def test_negative_counts_without_eigenvalues(two_nodal):
    n = nodal_rule_n(two_nodal)
    assert negative_counts(two_nodal, n, 1024) == (2, 2)


def test_nodal_rule(two_nodal):
    n = nodal_rule_n(two_nodal)
    assert isinstance(n, int)
    r1, M0 = two_nodal.nodes.nodal_radii[0], two_nodal.nodes.extrema[0]
    assert n == max(math.floor(1.0 / r1) + 1, math.floor(M0 ** 3.5) + 1, 2)
    annulus = choose_n(two_nodal, "nodal_rule")
    assert annulus.n == n and annulus.admits(two_nodal)


def test_explicit_mode(two_nodal):
    with pytest.raises(AnnulusError):
        choose_n(two_nodal, AnnulusMode.EXPLICIT)
    annulus = choose_n(two_nodal, "explicit", n=50)
    assert annulus.n == 50 and annulus.selection_mode is AnnulusMode.EXPLICIT


def test_stabilized_mode(two_nodal):
    annulus = choose_n(two_nodal, AnnulusMode.STABILIZED, settings=SpectrumSettings(grid_size=512))
    trajectory = annulus.trajectory
    assert len(trajectory) >= 3
    assert len({t[1:] for t in trajectory[-3:]}) == 1
    assert trajectory[-1][0] == annulus.n == nodal_rule_n(two_nodal) * 2 ** (len(trajectory) - 1)


def test_stabilization_cap(two_nodal):
    settings = SpectrumSettings(grid_size=512, stabilize_max_doublings=1)
    with pytest.raises(StabilizationError) as excinfo:
        choose_n(two_nodal, AnnulusMode.STABILIZED, settings=settings)
    assert len(excinfo.value.trajectory) == 2


def test_monotone_convergence_in_n(solve):
    table = convergence_in_n(solve(3, 4.8, 2), [20, 40, 80, 160], K=4, settings=FAST)
    assert [row.n for row in table.rows] == [20, 40, 80, 160]
    assert table.monotone, table.to_dict()


def test_convergence_needs_increasing_n(two_nodal):
    with pytest.raises(ValueError):
        convergence_in_n(two_nodal, [40, 20])


def test_derivative_eigenrelation(two_nodal):
    residual = derivative_eigenrelation_residual(two_nodal, AnnulusSpec(200), grid_size=4096)
    assert residual < 1e-5


def test_derivative_eigenrelation_needs_admissible_annulus(two_nodal):
    n = math.floor(1.0 / two_nodal.nodes.nodal_radii[0])
    assert n >= 2
    with pytest.raises(AnnulusError):
        derivative_eigenrelation_residual(two_nodal, AnnulusSpec(n))


def test_derivative_eigenrelation_tracks_tolerance(solve):
    annulus = AnnulusSpec(200)
    loose = derivative_eigenrelation_residual(solve(3, 4.5, 2, 1e-7), annulus, grid_size=4096)
    tight = derivative_eigenrelation_residual(solve(3, 4.5, 2, 1e-8), annulus, grid_size=4096)
    assert tight < 1e-6
    assert loose > 3.0 * tight


def test_element_form_on_solved_instance(two_nodal):
    annulus = AnnulusSpec(nodal_rule_n(two_nodal))
    plain = element_form(two_nodal.profile, annulus, 1024)
    weighted = liouville_transform(two_nodal.profile, annulus, 1024)
    assert plain.grid_size == weighted.grid_size == 1024
    assert plain.r_grid[-1] == 1.0
    assert np.ptp(plain.pencil().off) > 0
    assert np.ptp(weighted.pencil().off) == 0
    plain_eigs = eigen_bisect(plain, 3, vectors=False).values
    weighted_eigs = eigen_bisect(weighted, 3, vectors=False).values
    assert not np.allclose(plain_eigs, weighted_eigs)
    assert np.array_equal(np.sign(plain_eigs), np.sign(weighted_eigs))
