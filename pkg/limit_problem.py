"""
Closed-form limit objects at the critical exponent.

With a = N(N-2) and w(r) = 1 + r^2/a:

    U(r)    = w^{-(N-2)/2}            bubble, -Delta U = U^{p_S}, U(0) = 1
    V(r)    = p_S U^{p_S-1} = p_S w^{-2}
    eta*(r) = r w^{-N/2}              -Delta eta - V eta = -(N-1) eta / r^2

All derivatives below are analytic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, simpson
from scipy.optimize import minimize_scalar
from scipy.special import gamma as gamma_fn

from radial_solver import critical_exponent, sphere_area

logger = logging.getLogger(__name__)


class QuadratureError(RuntimeError):
    """A radial integral's power-law tail does not decay."""

    def __init__(self, message: str, tail: float):
        super().__init__(f"{message} (estimated tail {tail:.3g})")
        self.tail = tail


@dataclass(frozen=True)
class LimitProfile:
    dim: int

    def __post_init__(self):
        if self.dim < 3:
            raise ValueError(f"dimension must be >= 3, got {self.dim}")

    @property
    def a(self) -> float:
        return float(self.dim * (self.dim - 2))

    @property
    def p_s(self) -> float:
        return critical_exponent(self.dim)

    def _w(self, r):
        r = np.asarray(r, dtype=float)
        return 1.0 + r**2 / self.a

    def U(self, r):
        return self._w(r) ** (-(self.dim - 2) / 2.0)

    def dU(self, r):
        N, a = self.dim, self.a
        r = np.asarray(r, dtype=float)
        return -(N - 2) * r / a * self._w(r) ** (-N / 2.0)

    def d2U(self, r):
        N, a = self.dim, self.a
        r = np.asarray(r, dtype=float)
        w = self._w(r)
        return -(N - 2) / a * w ** (-N / 2.0) + (N - 2) * N * r**2 / a**2 * w ** (-N / 2.0 - 1.0)

    def V(self, r):
        return self.p_s * self._w(r) ** -2.0

    def eta(self, r):
        r = np.asarray(r, dtype=float)
        return r * self._w(r) ** (-self.dim / 2.0)

    def deta(self, r):
        N, a = self.dim, self.a
        r = np.asarray(r, dtype=float)
        w = self._w(r)
        f = w ** (-N / 2.0)
        df = -N * r / a * w ** (-N / 2.0 - 1.0)
        return f + r * df

    def d2eta(self, r):
        N, a = self.dim, self.a
        r = np.asarray(r, dtype=float)
        w = self._w(r)
        df = -N * r / a * w ** (-N / 2.0 - 1.0)
        d2f = -N / a * w ** (-N / 2.0 - 1.0) + N * (N + 2) * r**2 / a**2 * w ** (-N / 2.0 - 2.0)
        return 2.0 * df + r * d2f


def bubble_residual(dim: int, r_grid) -> float:
    """sup |U'' + (N-1)/r U' + U^{p_S}| over the grid."""
    lp = LimitProfile(dim)
    r = np.asarray(r_grid, dtype=float)
    residual = lp.d2U(r) + (dim - 1) / r * lp.dU(r) + lp.U(r) ** lp.p_s
    return float(np.max(np.abs(residual)))


def eta_star_residual(dim: int, r_grid, scale: float = 1.0) -> float:
    """sup |eta'' + (N-1)/r eta' + V eta - (N-1) eta/r^2| for eta = scale * eta*."""
    lp = LimitProfile(dim)
    r = np.asarray(r_grid, dtype=float)
    residual = scale * (
        lp.d2eta(r) + (dim - 1) / r * lp.deta(r) + lp.V(r) * lp.eta(r) - (dim - 1) * lp.eta(r) / r**2
    )
    return float(np.max(np.abs(residual)))


def _power_tail(s: np.ndarray, g: np.ndarray, end: int, total: float, name: str) -> float:
    """Tail of a log-grid integrand beyond one end, assuming g ~ exp(-kappa |s|)."""
    if end == -1:
        g1, g2, ds = g[-1], g[-2], s[-1] - s[-2]
    else:
        g1, g2, ds = g[0], g[1], s[1] - s[0]
    if abs(g1) <= 1e-300:
        return 0.0
    if g1 * g2 <= 0:
        raise QuadratureError(f"{name} integrand changes sign at the truncation", abs(g1))
    kappa = math.log(g2 / g1) / ds
    if kappa <= 0:
        raise QuadratureError(f"{name} integrand does not decay at the truncation", abs(g1) * (s[-1] - s[0]))
    tail = g1 / kappa
    if abs(tail) > 1e-2 * max(abs(total), 1e-300):
        logger.info("%s tail %.3g is large relative to the integral %.3g", name, tail, total)
    return tail


@dataclass
class RadialIntegral:
    value: float
    tail: float


def log_grid_integral(r: np.ndarray, integrand: np.ndarray, name: str = "radial") -> RadialIntegral:
    """Integral of f(r) dr over (0, inf) from samples on a geometric grid.

    Simpson's rule in s = log r, plus power-law tails at both ends.
    """
    r = np.asarray(r, dtype=float)
    s = np.log(r)
    g = np.asarray(integrand, dtype=float) * r
    body = float(simpson(g, x=s))
    tail = _power_tail(s, g, 0, body, name) + _power_tail(s, g, -1, body, name)
    return RadialIntegral(value=body + tail, tail=tail)


@dataclass
class RayleighResult:
    value: float
    gradient: float
    potential: float
    weighted_mass: float
    tail: float

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "gradient": self.gradient,
            "potential": self.potential,
            "weighted_mass": self.weighted_mass,
            "tail": self.tail,
        }


def rayleigh_quotient(dim: int, r, v, dv) -> RayleighResult:
    """(int |grad v|^2 - int V v^2) / int v^2/|x|^2 for radial v sampled on a geometric grid."""
    lp = LimitProfile(dim)
    omega = sphere_area(dim)
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    dv = np.asarray(dv, dtype=float)
    grad = log_grid_integral(r, dv**2 * r ** (dim - 1), "gradient")
    pot = log_grid_integral(r, lp.V(r) * v**2 * r ** (dim - 1), "potential")
    mass = log_grid_integral(r, v**2 * r ** (dim - 3), "weighted mass")
    value = (grad.value - pot.value) / mass.value
    return RayleighResult(
        value=value,
        gradient=omega * grad.value,
        potential=omega * pot.value,
        weighted_mass=omega * mass.value,
        tail=abs(grad.tail) + abs(pot.tail) + abs(mass.tail),
    )


def hardy_margin(dim: int, r, v, dv) -> float:
    """(2/(N-2)) ||grad v|| - ||v/|x|||, nonnegative for admissible v."""
    omega = sphere_area(dim)
    grad = log_grid_integral(r, np.asarray(dv) ** 2 * np.asarray(r) ** (dim - 1), "gradient")
    mass = log_grid_integral(r, np.asarray(v) ** 2 * np.asarray(r) ** (dim - 3), "weighted mass")
    return 2.0 / (dim - 2) * math.sqrt(omega * grad.value) - math.sqrt(omega * mass.value)


@dataclass(frozen=True)
class SobolevEnergy:
    dim: int
    gradient: float
    critical: float
    closed_form: float

    @property
    def relative_gap(self) -> float:
        return abs(self.gradient - self.critical) / self.critical

    def to_dict(self) -> dict:
        return {
            "gradient": self.gradient,
            "critical": self.critical,
            "closed_form": self.closed_form,
            "relative_gap": self.relative_gap,
        }


def sobolev_constant_power(dim: int) -> float:
    """S_N^{N/2} with S_N = pi N (N-2) (Gamma(N/2)/Gamma(N))^{2/N}."""
    s_n = math.pi * dim * (dim - 2) * (gamma_fn(dim / 2) / gamma_fn(dim)) ** (2.0 / dim)
    return s_n ** (dim / 2.0)


def sobolev_energy(dim: int, epsrel: float = 1e-12) -> SobolevEnergy:
    """int |grad U|^2 and int U^{2*} over R^N by adaptive quadrature."""
    lp = LimitProfile(dim)
    omega = sphere_area(dim)
    critical = 2.0 * dim / (dim - 2)
    options = dict(epsabs=0.0, epsrel=epsrel, limit=400)
    # split at the bubble scale so quad sees the knee
    knee = math.sqrt(lp.a)

    def integrate(func) -> float:
        return quad(func, 0.0, knee, **options)[0] + quad(func, knee, np.inf, **options)[0]

    gradient = integrate(lambda r: float(lp.dU(r)) ** 2 * r ** (dim - 1))
    mass = integrate(lambda r: float(lp.U(r)) ** critical * r ** (dim - 1))
    return SobolevEnergy(
        dim=dim,
        gradient=omega * gradient,
        critical=omega * mass,
        closed_form=sobolev_constant_power(dim),
    )


def sup_r2_potential(dim: int) -> tuple[float, float]:
    """(max r^2 V(r), maximizing r) by bounded scalar minimization."""
    lp = LimitProfile(dim)
    hi = 10.0 * math.sqrt(lp.a)
    result = minimize_scalar(
        lambda r: -float(r**2 * lp.V(r)), bounds=(0.0, hi), method="bounded", options={"xatol": 1e-12}
    )
    return -float(result.fun), float(result.x)


def constants_table(dims=(3, 4, 5, 6)) -> dict[str, dict]:
    """Limit constants and identity residuals per dimension, keyed by str(N)."""
    table = {}
    r_check = np.geomspace(1e-3, 1e3, 2001)
    r_quad = np.geomspace(1e-8, 1e8, 40001)
    for dim in dims:
        lp = LimitProfile(dim)
        energy = sobolev_energy(dim)
        sup_value, maximizer = sup_r2_potential(dim)
        rayleigh = rayleigh_quotient(dim, r_quad, lp.eta(r_quad), lp.deta(r_quad))
        table[str(dim)] = {
            "critical_exponent": lp.p_s,
            "sobolev_energy": energy.to_dict(),
            "sup_r2V": sup_value,
            "sup_r2V_analytic": dim * (dim + 2) / 4.0,
            "maximizer": maximizer,
            "maximizer_analytic": math.sqrt(lp.a),
            "rayleigh_eta_star": rayleigh.value,
            "limit_eigenvalue": -(dim - 1.0),
            "bubble_residual": bubble_residual(dim, r_check),
            "eta_star_residual": eta_star_residual(dim, r_check),
        }
    return table
