"""Angular spectrum, combination with radial eigenvalues, and the Morse count."""

import math
from types import SimpleNamespace

import numpy as np
import pytest

from radial_solver import ProblemSpec
from spectral_angular import (
    IndeterminateSpectrumError,
    TruncationError,
    angular_eigenvalues,
    combine_spectra,
    harmonic_dimension,
    morse_report,
    required_k_max,
)
from spectral_radial import AnnulusSpec, RadialSpectrum, SpectrumSettings, choose_n, radial_spectrum


def _radial(betas, m: int, dim: int = 3, tolerance: float = 0.0, sign_margin: float = 1e-6) -> RadialSpectrum:
    betas = np.asarray(betas, dtype=float)
    tol = np.full_like(betas, tolerance)
    margins = np.maximum(sign_margin, 5.0 * tol)
    empty = np.empty((0, 0))
    return RadialSpectrum(
        dim=dim,
        nodal_count=m,
        annulus=AnnulusSpec(100),
        grid_size=1024,
        weighted_eigs=betas,
        plain_eigs=betas,
        weighted_raw=(betas, betas),
        plain_raw=(betas, betas),
        weighted_grid_tolerance=tol,
        plain_grid_tolerance=tol,
        radii=np.empty(0),
        eigenfunctions=empty,
        node_counts=list(range(len(betas))),
        negative_count_weighted=int(np.sum(betas < 0)),
        negative_count_plain=int(np.sum(betas < 0)),
        oscillation_count=int(np.sum(betas < 0)),
        sign_margin=sign_margin,
        indeterminate=[bool(abs(b) <= mg or abs(b + dim - 1) <= mg) for b, mg in zip(betas, margins)],
    )


def _solution(dim: int, p: float, m: int):
    return SimpleNamespace(spec=ProblemSpec(dim, p, m))


def test_low_dimensional_harmonics():
    assert angular_eigenvalues(3, 4).pairs == ((0, 1), (2, 3), (6, 5), (12, 7), (20, 9))
    assert angular_eigenvalues(4, 3).pairs == ((0, 1), (3, 4), (8, 9), (15, 16))


@pytest.mark.parametrize("dim", [3, 4, 5, 6, 7])
def test_multiplicity_closed_form(dim):
    spectrum = angular_eigenvalues(dim, 8)
    for k in range(9):
        expected = (2 * k + dim - 2) * math.factorial(k + dim - 3) // (math.factorial(k) * math.factorial(dim - 2))
        assert spectrum.multiplicity(k) == expected, f"N={dim}, k={k}"
        assert spectrum.eigenvalue(k) == k * (k + dim - 2)


@pytest.mark.parametrize("dim", [3, 5])
def test_multiplicities_fill_polynomial_space(dim):
    spectrum = angular_eigenvalues(dim, 6)
    total = sum(spectrum.multiplicity(k) for k in range(7))
    assert total == harmonic_dimension(dim, 6) + harmonic_dimension(dim, 5)


def test_angular_input_validation():
    with pytest.raises(ValueError):
        angular_eigenvalues(2, 3)
    with pytest.raises(ValueError):
        angular_eigenvalues(3, 0)
    assert harmonic_dimension(3, -1) == 0


def test_required_k_max():
    assert required_k_max(3, -7.5, 1.0) == 3
    assert required_k_max(3, 4.0, 1.0) == 1
    assert required_k_max(4, -2.0, 1e-6) == 1


def test_two_nodal_count():
    radial = _radial([-2.5, -1.2, 3.0, 10.0], m=2)
    combined = combine_spectra(radial, angular_eigenvalues(3, 3))
    assert combined.count == 5
    assert [(c.i, c.k) for c in combined.contributions] == [(1, 0), (2, 0), (1, 1)]
    assert combined.near_zero == []


def test_morse_report_formula_match():
    radial = _radial([-2.5, -1.2, 3.0, 10.0], m=2)
    report = morse_report(_solution(3, 4.99, 2), radial)
    assert report.morse_index == report.formula_value == 5
    assert report.radial_morse_index == 2
    assert report.lower_bound_value == 5
    assert report.match and report.resolved and report.lower_bound_holds
    assert report.only_low_modes
    assert report.angular_one_signs == [(1, pytest.approx(-0.5), True)]
    assert report.min_margin == pytest.approx(0.5)
    data = report.to_dict()
    assert data["match"] and data["contributions"][0] == {"i": 1, "k": 0, "value": -2.5, "multiplicity": 1}


def test_lower_bound_violation_is_reported():
    # beta~_1 above -(N-1): the k = 1 mode of the first eigenvalue does not contribute
    radial = _radial([-1.5, -0.4, 3.0, 10.0], m=2)
    report = morse_report(_solution(3, 4.5, 2), radial)
    assert report.morse_index == 2
    assert not report.match
    assert report.resolved
    assert not report.lower_bound_holds


def test_near_zero_sum_is_flagged():
    radial = _radial([-2.5, -1.2, 3.0, 10.0], m=2)
    radial.weighted_eigs[0] = -6.0 + 1e-9
    report = morse_report(_solution(3, 4.99, 2), radial, margin=1e-6)
    assert not report.resolved
    assert not report.match
    assert any(c.i == 1 and c.k == 2 for c in report.indeterminate)


def test_indeterminate_radial_eigenvalue_blocks_count():
    radial = _radial([-2.0 + 1e-9, -1.2, 3.0, 10.0], m=2)
    with pytest.raises(IndeterminateSpectrumError) as excinfo:
        combine_spectra(radial, angular_eigenvalues(3, 3))
    assert excinfo.value.indices == [1]


def test_truncation_errors():
    with pytest.raises(TruncationError):
        combine_spectra(_radial([-2.5, -1.2], m=2), angular_eigenvalues(3, 3))
    with pytest.raises(TruncationError):
        combine_spectra(_radial([-2.5, -1.2, -0.3], m=2), angular_eigenvalues(3, 3))
    with pytest.raises(TruncationError):
        combine_spectra(_radial([-7.0, -1.2, 3.0], m=2), angular_eigenvalues(3, 1))


def test_lower_bound_on_solved_instance(two_nodal):
    radial = radial_spectrum(two_nodal, choose_n(two_nodal), settings=SpectrumSettings(grid_size=4096))
    report = morse_report(two_nodal, radial)
    assert report.radial_index_matches
    assert report.resolved, [c.to_dict() for c in report.indeterminate]
    assert report.lower_bound_holds
    assert report.morse_index >= report.lower_bound_value == 5
