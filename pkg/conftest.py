"""Shared solved instances for the test modules."""

import functools

import pytest

from radial_solver import ProblemSpec, RadialSolution, SolverSettings, solve_m_nodal


@functools.lru_cache(maxsize=None)
def _solve(dim: int, exponent: float, m: int, ivp_tolerance: float) -> RadialSolution:
    return solve_m_nodal(ProblemSpec(dim, exponent, m), SolverSettings(ivp_tolerance=ivp_tolerance))


@pytest.fixture(scope="session")
def solve():
    """Cached solve_m_nodal keyed by (N, p, m) and the IVP tolerance."""

    def _get(dim: int, exponent: float, m: int, ivp_tolerance: float = 1e-10) -> RadialSolution:
        return _solve(dim, exponent, m, ivp_tolerance)

    return _get


@pytest.fixture(scope="session")
def two_nodal(solve) -> RadialSolution:
    return solve(3, 4.5, 2)
