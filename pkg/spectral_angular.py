"""
Spherical-harmonic spectrum and the Morse index count.

The weighted linearized operator splits as radial part plus the Laplace-Beltrami
operator on S^{N-1}, so its eigenvalues are beta~_i + lambda_k with
lambda_k = k(k+N-2) of multiplicity N_k - N_{k-2}, N_h = C(N-1+h, N-1).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from radial_solver import ProblemSpec, RadialSolution
from spectral_radial import RadialSpectrum

logger = logging.getLogger(__name__)


class AngularError(RuntimeError):
    """Base class for failures while combining spectra."""


class IndeterminateSpectrumError(AngularError):
    """A radial eigenvalue needed for the count sits within its sign margin."""

    def __init__(self, indices: list[int]):
        super().__init__(
            f"radial eigenvalue(s) {indices} are indeterminate; refine the grid, then n, then p"
        )
        self.indices = indices


class TruncationError(AngularError):
    """The radial or angular truncation could miss a negative combination."""


def harmonic_dimension(dim: int, h: int) -> int:
    """N_h = C(N-1+h, N-1), zero for h < 0."""
    return math.comb(dim - 1 + h, dim - 1) if h >= 0 else 0


@dataclass(frozen=True)
class AngularSpectrum:
    dim: int
    pairs: tuple[tuple[int, int], ...]  # (lambda_k, multiplicity), k = 0..k_max

    @property
    def k_max(self) -> int:
        return len(self.pairs) - 1

    def eigenvalue(self, k: int) -> int:
        return self.pairs[k][0]

    def multiplicity(self, k: int) -> int:
        return self.pairs[k][1]


def angular_eigenvalues(dim: int, k_max: int) -> AngularSpectrum:
    if dim < 3:
        raise ValueError(f"dimension must be >= 3, got {dim}")
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    pairs = tuple(
        (k * (k + dim - 2), harmonic_dimension(dim, k) - harmonic_dimension(dim, k - 2))
        for k in range(k_max + 1)
    )
    return AngularSpectrum(dim=dim, pairs=pairs)


def required_k_max(dim: int, lowest: float, margin: float) -> int:
    """Smallest k >= 1 with lambda_k > -min(lowest, 0) + margin."""
    target = -min(lowest, 0.0) + margin
    k = 1
    while k * (k + dim - 2) <= target:
        k += 1
    return k


@dataclass(frozen=True)
class Contribution:
    i: int  # radial index, 1-based
    k: int
    value: float
    multiplicity: int

    def to_dict(self) -> dict:
        return {"i": self.i, "k": self.k, "value": self.value, "multiplicity": self.multiplicity}


@dataclass
class CombinedSpectrum:
    count: int
    contributions: list[Contribution]
    near_zero: list[Contribution]


def combine_spectra(
    radial: RadialSpectrum, angular: AngularSpectrum, margin: float | None = None
) -> CombinedSpectrum:
    """Negative eigenvalues beta~_i + lambda_k counted with multiplicity.

    Sums within the sign margin of zero are flagged and left out of the count.
    """
    m = radial.nodal_count
    betas = radial.weighted_eigs
    margins = radial.margins if margin is None else [max(margin, mg) for mg in radial.margins]
    if len(betas) < m + 1:
        raise TruncationError(f"need at least {m + 1} radial eigenvalues, got {len(betas)}")
    blocked = [i + 1 for i in range(m) if radial.indeterminate[i]]
    if blocked:
        raise IndeterminateSpectrumError(blocked)
    if betas[-1] < margins[-1]:
        raise TruncationError(
            f"largest computed radial eigenvalue {betas[-1]:.6g} is not positive; increase K"
        )
    if angular.eigenvalue(angular.k_max) <= -min(betas[0], 0.0) + max(margins):
        raise TruncationError(
            f"lambda_{angular.k_max} = {angular.eigenvalue(angular.k_max)} does not clear "
            f"-beta~_1 = {-betas[0]:.6g}"
        )

    contributions: list[Contribution] = []
    near_zero: list[Contribution] = []
    for i, (beta, mg) in enumerate(zip(betas, margins), start=1):
        for k, (lam, mult) in enumerate(angular.pairs):
            value = float(beta) + lam
            if abs(value) <= mg:
                near_zero.append(Contribution(i, k, value, mult))
            elif value < 0:
                contributions.append(Contribution(i, k, value, mult))
    contributions.sort(key=lambda c: c.value)
    return CombinedSpectrum(
        count=sum(c.multiplicity for c in contributions),
        contributions=contributions,
        near_zero=near_zero,
    )


@dataclass
class MorseReport:
    spec: ProblemSpec
    n_used: int
    grid_size: int
    morse_index: int
    radial_morse_index: int
    formula_value: int
    lower_bound_value: int
    contributions: list[Contribution]
    indeterminate: list[Contribution]
    weighted_eigs: list[float]
    min_margin: float
    angular_one_signs: list[tuple[int, float, bool]] = field(default_factory=list)

    @property
    def resolved(self) -> bool:
        return not self.indeterminate

    @property
    def match(self) -> bool:
        return self.resolved and self.morse_index == self.formula_value

    @property
    def lower_bound_holds(self) -> bool:
        """m(u) >= m_rad(u) + N(m-1), or the count is blocked by a flag."""
        return self.morse_index >= self.lower_bound_value or not self.resolved

    @property
    def radial_index_matches(self) -> bool:
        return self.radial_morse_index == self.spec.nodal_count

    @property
    def only_low_modes(self) -> bool:
        return all(c.k <= 1 for c in self.contributions)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "n_used": self.n_used,
            "grid_size": self.grid_size,
            "morse_index": self.morse_index,
            "radial_morse_index": self.radial_morse_index,
            "formula_value": self.formula_value,
            "lower_bound_value": self.lower_bound_value,
            "match": self.match,
            "resolved": self.resolved,
            "lower_bound_holds": self.lower_bound_holds,
            "radial_index_matches": self.radial_index_matches,
            "only_low_modes": self.only_low_modes,
            "min_margin": self.min_margin,
            "weighted_eigs": self.weighted_eigs,
            "angular_one_signs": [
                {"i": i, "value": value, "negative": negative} for i, value, negative in self.angular_one_signs
            ],
            "contributions": [c.to_dict() for c in self.contributions],
            "indeterminate": [c.to_dict() for c in self.indeterminate],
        }


def morse_report(
    sol: RadialSolution,
    radial: RadialSpectrum,
    angular: AngularSpectrum | None = None,
    margin: float | None = None,
) -> MorseReport:
    """Count negative eigenvalues and compare with m + N(m-1)."""
    spec = sol.spec
    m, N = spec.nodal_count, spec.dim
    if angular is None:
        floor = margin if margin is not None else radial.sign_margin
        angular = angular_eigenvalues(N, required_k_max(N, float(radial.weighted_eigs[0]), max(floor, 1.0)))
    combined = combine_spectra(radial, angular, margin)
    radial_index = sum(c.multiplicity for c in combined.contributions if c.k == 0)
    lam1 = angular.eigenvalue(1)
    one_signs = [
        (i, float(radial.weighted_eigs[i - 1]) + lam1, float(radial.weighted_eigs[i - 1]) + lam1 < 0)
        for i in range(1, m)
    ]
    sums = [
        abs(float(beta) + lam) for beta in radial.weighted_eigs for lam, _ in angular.pairs
    ]
    report = MorseReport(
        spec=spec,
        n_used=radial.n,
        grid_size=radial.grid_size,
        morse_index=combined.count,
        radial_morse_index=radial_index,
        formula_value=m + N * (m - 1),
        lower_bound_value=radial_index + N * (m - 1),
        contributions=combined.contributions,
        indeterminate=combined.near_zero,
        weighted_eigs=radial.weighted_eigs.tolist(),
        min_margin=min(sums),
        angular_one_signs=one_signs,
    )
    if report.resolved and not report.match:
        logger.info(
            "Morse count %s differs from m + N(m-1) = %s for %s",
            report.morse_index,
            report.formula_value,
            spec,
        )
    return report
