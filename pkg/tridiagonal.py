"""
Sturm-sequence bisection for symmetric tridiagonal pencils (K, M).

K is symmetric tridiagonal, M a positive diagonal mass matrix. The number of
eigenvalues of K x = lambda M x below a shift sigma equals the number of
negative pivots in the LDL^T factorization of K - sigma M.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.linalg import LinAlgError, solve_banded

MAX_BISECTIONS = 400
MAX_BRACKET_EXPANSIONS = 200


class SpectralError(RuntimeError):
    """Base class for spectral-engine failures."""


class BisectionError(SpectralError):
    """The bisection bracket could not be established or did not converge."""


@njit(cache=True)
def _sturm_count(diag, off, mass, shift, pivmin):
    count = 0
    d = diag[0] - shift * mass[0]
    if abs(d) < pivmin:
        d = -pivmin
    if d < 0.0:
        count += 1
    for j in range(1, diag.shape[0]):
        d = diag[j] - shift * mass[j] - off[j - 1] * off[j - 1] / d
        if abs(d) < pivmin:
            d = -pivmin
        if d < 0.0:
            count += 1
    return count


@dataclass(frozen=True, eq=False)
class TridiagonalPencil:
    diag: np.ndarray
    off: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        n = self.diag.shape[0]
        if n < 1 or self.off.shape[0] != n - 1 or self.mass.shape[0] != n:
            raise ValueError(
                f"inconsistent pencil shapes: diag {self.diag.shape}, off {self.off.shape}, mass {self.mass.shape}"
            )
        if np.any(self.mass <= 0):
            raise ValueError("mass matrix must be positive")

    @classmethod
    def standard(cls, diag, off) -> "TridiagonalPencil":
        diag = np.ascontiguousarray(diag, dtype=float)
        return cls(diag, np.ascontiguousarray(off, dtype=float), np.ones_like(diag))

    @property
    def size(self) -> int:
        return self.diag.shape[0]

    @property
    def pivmin(self) -> float:
        largest = float(np.max(self.off**2)) if self.size > 1 else 0.0
        return np.finfo(float).tiny * max(1.0, largest)

    def count_below(self, shift: float) -> int:
        """Number of eigenvalues strictly below `shift`."""
        return int(_sturm_count(self.diag, self.off, self.mass, float(shift), self.pivmin))

    def lower_bound(self) -> float:
        """Gershgorin bound min_j (K_jj - sum_k |K_jk|) / m_j, nudged down."""
        radius = np.zeros(self.size)
        radius[:-1] += np.abs(self.off)
        radius[1:] += np.abs(self.off)
        bound = float(np.min((self.diag - radius) / self.mass))
        return bound - 1e-10 * max(1.0, abs(bound))

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        K = np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)
        return K, np.diag(self.mass)


def _upper_bracket(pencil: TridiagonalPencil, count: int, lower: float) -> float:
    width = max(1.0, abs(lower))
    upper = lower + width
    for _ in range(MAX_BRACKET_EXPANSIONS):
        if pencil.count_below(upper) >= count:
            return upper
        width *= 2.0
        upper = lower + width
    raise BisectionError(f"no upper bracket for {count} eigenvalues above {lower:.6g}")


def bisect_eigenvalues(pencil: TridiagonalPencil, count: int, tolerance: float = 1e-13) -> np.ndarray:
    """Lowest `count` eigenvalues of the pencil, each to relative `tolerance`.

    The bracket for eigenvalue k starts at the final left end for k-1.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if count > pencil.size:
        raise BisectionError(f"requested {count} eigenvalues of a size-{pencil.size} pencil")
    left = pencil.lower_bound()
    if pencil.count_below(left) > 0:
        raise BisectionError(f"Gershgorin bound {left:.6g} is not below the spectrum")
    upper = _upper_bracket(pencil, count, left)
    values = np.empty(count)
    for k in range(count):
        a, b = left, upper
        for _ in range(MAX_BISECTIONS):
            if b - a <= tolerance * max(1.0, abs(a), abs(b)):
                break
            mid = 0.5 * (a + b)
            if pencil.count_below(mid) >= k + 1:
                b = mid
            else:
                a = mid
        else:
            raise BisectionError(f"eigenvalue {k} did not converge in {MAX_BISECTIONS} steps")
        values[k] = 0.5 * (a + b)
        left = a
    return values


def inverse_iteration(pencil: TridiagonalPencil, value: float, iterations: int = 3) -> np.ndarray:
    """Eigenvector for an eigenvalue already located by bisection.

    Returned with unit Euclidean norm and a positive first significant entry.
    """
    n = pencil.size
    shift = value + 1e-12 * max(1.0, abs(value))
    banded = np.zeros((3, n))
    banded[0, 1:] = pencil.off
    banded[2, :-1] = pencil.off
    x = np.linspace(1.0, 2.0, n)
    for _ in range(iterations):
        banded[1] = pencil.diag - shift * pencil.mass
        try:
            x = solve_banded((1, 1), banded, pencil.mass * x)
        except LinAlgError:
            shift += 1e-9 * max(1.0, abs(value))
            continue
        x /= np.linalg.norm(x)
    if not np.all(np.isfinite(x)):
        raise BisectionError(f"inverse iteration diverged near {value:.6g}")
    lead = np.flatnonzero(np.abs(x) > 1e-8 * np.max(np.abs(x)))[0]
    return x if x[lead] > 0 else -x


def richardson(coarse: np.ndarray, fine: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Second-order Richardson extrapolation and its error estimate."""
    coarse = np.asarray(coarse, dtype=float)
    fine = np.asarray(fine, dtype=float)
    return (4.0 * fine - coarse) / 3.0, np.abs(fine - coarse) / 3.0
