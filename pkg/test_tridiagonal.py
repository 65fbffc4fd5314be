"""Sturm bisection against dense LAPACK eigensolvers."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import eigh

from tridiagonal import (
    BisectionError,
    TridiagonalPencil,
    bisect_eigenvalues,
    inverse_iteration,
    richardson,
)


def _random_pencil(rng: np.random.Generator, size: int, weighted: bool) -> TridiagonalPencil:
    diag = rng.normal(size=size) * 3.0
    off = rng.normal(size=size - 1)
    mass = rng.uniform(0.2, 2.0, size=size) if weighted else np.ones(size)
    return TridiagonalPencil(diag, off, mass)


@pytest.mark.parametrize("seed", range(30))
def test_bisection_matches_eigvalsh(seed):
    rng = np.random.default_rng(seed)
    size = int(rng.integers(2, 60))
    pencil = _random_pencil(rng, size, weighted=False)
    count = min(size, 6)
    expected = np.linalg.eigvalsh(pencil.dense()[0])[:count]
    values = bisect_eigenvalues(pencil, count)
    assert_allclose(values, expected, atol=1e-10, err_msg=f"seed {seed}, size {size}")


@pytest.mark.parametrize("seed", range(30))
def test_generalized_bisection_matches_eigh(seed):
    rng = np.random.default_rng(100 + seed)
    size = int(rng.integers(2, 60))
    pencil = _random_pencil(rng, size, weighted=True)
    K, M = pencil.dense()
    count = min(size, 5)
    expected = eigh(K, M, eigvals_only=True)[:count]
    values = bisect_eigenvalues(pencil, count)
    assert_allclose(values, expected, atol=1e-9, err_msg=f"seed {seed}, size {size}")


@pytest.mark.parametrize("seed", range(10))
def test_count_below_agrees_with_dense_spectrum(seed):
    rng = np.random.default_rng(200 + seed)
    pencil = _random_pencil(rng, 40, weighted=True)
    K, M = pencil.dense()
    spectrum = eigh(K, M, eigvals_only=True)
    for shift in rng.uniform(spectrum[0] - 1.0, spectrum[-1] + 1.0, size=8):
        if np.min(np.abs(spectrum - shift)) < 1e-8:
            continue
        assert pencil.count_below(shift) == int(np.sum(spectrum < shift)), f"shift {shift}"


def test_lower_bound_is_below_spectrum():
    rng = np.random.default_rng(7)
    for _ in range(20):
        pencil = _random_pencil(rng, 25, weighted=True)
        bound = pencil.lower_bound()
        assert pencil.count_below(bound) == 0, "Gershgorin bound must lie below every eigenvalue"


def test_discrete_laplacian_closed_form():
    size, h = 200, 1.0 / 201
    pencil = TridiagonalPencil.standard(np.full(size, 2.0 / h**2), np.full(size - 1, -1.0 / h**2))
    k = np.arange(1, 5)
    expected = 4.0 / h**2 * np.sin(k * np.pi * h / 2.0) ** 2
    assert_allclose(bisect_eigenvalues(pencil, 4), expected, rtol=1e-9)


def test_inverse_iteration_returns_eigenvector():
    rng = np.random.default_rng(11)
    pencil = _random_pencil(rng, 50, weighted=True)
    K, M = pencil.dense()
    values = bisect_eigenvalues(pencil, 3)
    for value in values:
        vector = inverse_iteration(pencil, value)
        residual = K @ vector - value * (M @ vector)
        assert np.linalg.norm(residual) < 1e-7, f"residual {np.linalg.norm(residual)} at {value}"
        assert abs(np.linalg.norm(vector) - 1.0) < 1e-12
        lead = np.flatnonzero(np.abs(vector) > 1e-8 * np.max(np.abs(vector)))[0]
        assert vector[lead] > 0, "sign convention: first significant entry positive"


def test_richardson_removes_second_order_error():
    exact = np.array([1.0, -2.0])
    coarse = exact + 0.4
    fine = exact + 0.1
    value, tol = richardson(coarse, fine)
    assert_allclose(value, exact, atol=1e-14)
    assert_allclose(tol, [0.1, 0.1], atol=1e-14)


def test_invalid_requests():
    pencil = TridiagonalPencil.standard(np.array([1.0, 2.0]), np.array([0.5]))
    with pytest.raises(ValueError):
        bisect_eigenvalues(pencil, 0)
    with pytest.raises(BisectionError):
        bisect_eigenvalues(pencil, 3)
    with pytest.raises(ValueError):
        TridiagonalPencil(np.ones(3), np.ones(2), np.array([1.0, 0.0, 1.0]))
    with pytest.raises(ValueError):
        TridiagonalPencil(np.ones(3), np.ones(3), np.ones(3))
