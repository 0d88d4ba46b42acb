"""Potentials, the sigmoid-smoothed lattice target and related log densities.

Everything is unnormalised and in log space. Normalising constants of the
continuous density and of the lattice mass function cancel in every
Metropolis ratio, so they are never computed here.

All potential methods broadcast over leading axes: ``x`` has shape
``(..., d)`` and ``value`` returns shape ``(...)``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from .lattice import GeneratorMatrix, InvalidInputError, round_nearest, round_nearest_float
from .special import DomainError, bessel_zero, first_zero, omega_d

__all__ = [
    "Potential",
    "IsotropicGaussianPotential",
    "PullbackGaussianPotential",
    "PerfectSecurityPotential",
    "SigmoidTarget",
    "PiecewiseConstantTarget",
    "softplus",
    "log_pi_unnorm",
    "log_pi_bar_unnorm",
    "perfect_security_log_density",
    "perfect_security_rho_for_unit_variance",
    "piecewise_constant_log_target",
]

LOG2 = math.log(2.0)
SOFTPLUS_CUTOFF = 35.0
SINGULARITY_WINDOW = 1e-6
GRADIENT_WINDOW = 3e-4


def softplus(a):
    """``log(1 + e^a)`` without overflow."""
    a = np.asarray(a, dtype=float)
    with np.errstate(over="ignore"):
        mid = np.log1p(np.exp(np.clip(a, -SOFTPLUS_CUTOFF, SOFTPLUS_CUTOFF)))
    out = np.where(a > SOFTPLUS_CUTOFF, a, np.where(a < -SOFTPLUS_CUTOFF, np.exp(np.minimum(a, 0.0)), mid))
    return out if out.ndim else float(out)


class Potential(ABC):
    """Negative log of an unnormalised density on R^d."""

    dim: int
    smoothness_L: Optional[float] = None

    @abstractmethod
    def value(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def grad(self, x: np.ndarray) -> np.ndarray:
        ...

    def _as_points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise InvalidInputError(f"expected points of dimension {self.dim}, got shape {x.shape}")
        return x


class IsotropicGaussianPotential(Potential):
    """``||x - c||^2 / (2 sigma^2)``."""

    def __init__(self, dim: int, variance: float = 1.0, center=None):
        if dim < 1 or not variance > 0:
            raise InvalidInputError("need dim >= 1 and a positive variance")
        self.dim = int(dim)
        self.variance = float(variance)
        self.center = np.zeros(dim) if center is None else np.asarray(center, dtype=float).reshape(dim)
        self.smoothness_L = 1.0 / self.variance

    def value(self, x):
        r = self._as_points(x) - self.center
        return 0.5 * np.sum(r * r, axis=-1) / self.variance

    def grad(self, x):
        return (self._as_points(x) - self.center) / self.variance

    def covariance(self) -> np.ndarray:
        return self.variance * np.eye(self.dim)


class PullbackGaussianPotential(Potential):
    """``||B x - c||^2 / (2 sigma^2)``: a Gaussian on ``B Z^d`` pulled back to ``Z^d``."""

    def __init__(self, basis: GeneratorMatrix, variance: float = 1.0, center=None):
        if not variance > 0:
            raise InvalidInputError("variance must be positive")
        self.basis = basis
        self.dim = basis.dim
        self.variance = float(variance)
        self.center = np.zeros(self.dim) if center is None else np.asarray(center, dtype=float).reshape(self.dim)
        self._b = basis.entries
        self.smoothness_L = basis.gram_max_eigenvalue() / self.variance

    def value(self, x):
        r = self._as_points(x) @ self._b.T - self.center
        return 0.5 * np.sum(r * r, axis=-1) / self.variance

    def grad(self, x):
        r = self._as_points(x) @ self._b.T - self.center
        return (r @ self._b) / self.variance

    def covariance(self) -> np.ndarray:
        binv = np.linalg.inv(self._b)
        return self.variance * binv @ binv.T


class PerfectSecurityPotential(Potential):
    """Potential of ``(Omega_d(u) / (j^2 - u^2))^2`` with ``u = ||x|| / (2 rho)``.

    ``j`` is the first positive zero of ``J_{(d-2)/2}``. The quotient is
    analytic at ``u = j`` and is evaluated there by a Taylor expansion.

    The density is positive on all of R^d apart from the spheres through the
    later Bessel zeros, and its tail decays only like ``u^-(d+3)``. With
    ``truncate=True`` points with ``u`` at or beyond the second zero of
    ``J_{(d-2)/2}`` (the guard radius) get potential ``+inf`` instead; that
    truncation removes about 12% of the per-coordinate variance.
    """

    def __init__(self, dim: int, rho: float, truncate: bool = False):
        if dim < 2 or dim > 26:
            raise DomainError("Perfect Security potential supports 2 <= d <= 26")
        if not rho > 0:
            raise InvalidInputError("rho must be positive")
        self.dim = int(dim)
        self.rho = float(rho)
        nu = (dim - 2) / 2.0
        self.j = first_zero(nu)
        self.guard_u = bessel_zero(nu, 2)
        self.guard_radius = 2.0 * self.rho * self.guard_u
        self.truncate = bool(truncate)
        j = self.j
        om2 = omega_d(dim + 2, j)
        om4 = omega_d(dim + 4, j)
        # derivatives at j from Omega_d'(u) = -(u/2) Omega_{d+2}(u); the Bessel
        # recurrence gives Omega_{d+6} from the two orders below it
        om6 = (4.0 * (nu + 2.0) * om4 - 4.0 * om2) / (j * j)
        self._d1 = -0.5 * j * om2
        self._d2 = -0.5 * om2 + 0.25 * j * j * om4
        self._d3 = 0.75 * j * om4 - 0.125 * j**3 * om6

    def _quotient(self, u: np.ndarray):
        """``g(u) = Omega_d(u)/(j^2-u^2)`` and ``G(u) = -2 g'(u) / (u g(u))``."""
        j = self.j
        g = np.empty_like(u)
        big_g = np.empty_like(u)
        h = u - j
        near = np.abs(h) < SINGULARITY_WINDOW
        # the closed form of G cancels two O(1/h) terms, so it switches to the
        # expansion further out than g does
        near_g = np.abs(h) < GRADIENT_WINDOW
        far = ~near_g
        if np.any(far):
            uf = u[far]
            om = omega_d(self.dim, uf, extended=True)
            om2 = omega_d(self.dim + 2, uf, extended=True)
            den = j * j - uf * uf
            g[far] = om / den
            with np.errstate(divide="ignore", invalid="ignore"):
                big_g[far] = om2 / om - 4.0 / den
        if np.any(near_g):
            hn = h[near_g]
            num = self._d1 + hn * (0.5 * self._d2 + hn * self._d3 / 6.0)
            dnum = 0.5 * self._d2 + hn * self._d3 / 3.0
            den = 2.0 * j + hn
            gn = -num / den
            dgn = -(dnum * den - num) / (den * den)
            mid = near_g & ~near
            g[near_g] = gn
            if np.any(mid):
                g[mid] = omega_d(self.dim, u[mid]) / (j * j - u[mid] * u[mid])
            big_g[near_g] = -2.0 * dgn / (u[near_g] * gn)
        return g, big_g

    def _radial(self, x: np.ndarray):
        x = self._as_points(x)
        u = np.sqrt(np.sum(x * x, axis=-1)) / (2.0 * self.rho)
        return x, u

    def _inside(self, u):
        ok = np.isfinite(u)
        return ok & (u < self.guard_u) if self.truncate else ok

    def value(self, x):
        x, u = self._radial(x)
        u = np.asarray(u)
        out = np.full(u.shape, np.inf)
        inside = self._inside(u)
        if np.any(inside):
            g, _ = self._quotient(u[inside])
            with np.errstate(divide="ignore"):
                out[inside] = -2.0 * np.log(np.abs(g))
        return out if out.ndim else float(out)

    def grad(self, x):
        x, u = self._radial(x)
        u = np.asarray(u)
        coef = np.zeros(u.shape)
        inside = self._inside(u)
        if np.any(inside):
            _, big_g = self._quotient(u[inside])
            coef[inside] = big_g
        return coef[..., None] * x / (4.0 * self.rho * self.rho)

    def component_variance(self) -> float:
        """Per-coordinate variance ``4 rho^2 j^2 / d`` (of the untruncated density)."""
        return 4.0 * self.rho**2 * self.j**2 / self.dim

    def covariance(self) -> np.ndarray:
        return self.component_variance() * np.eye(self.dim)


class SigmoidTarget:
    """Piecewise-sigmoid density whose unit-cube masses equal the lattice pmf.

    On the cube around integer ``z`` the log density is
    ``log 2 - phi(z) - softplus(2 (x - z) . grad phi(z))``.
    """

    def __init__(self, potential: Potential):
        self.potential = potential
        self.dim = potential.dim

    def log_density(self, x) -> np.ndarray:
        """Unnormalised log density; ``-inf`` where ``phi`` at the cube centre is infinite."""
        x = np.asarray(x, dtype=float)
        xbar = round_nearest_float(x)
        phi = np.asarray(self.potential.value(xbar))
        g = self.potential.grad(xbar)
        with np.errstate(invalid="ignore"):
            a = 2.0 * np.sum((x - xbar) * g, axis=-1)
            out = LOG2 - phi - softplus(a)
        out = np.where(np.isposinf(phi), -np.inf, out)
        return out if np.ndim(out) else float(out)

    def log_weight(self, x) -> np.ndarray:
        """``log pibar(x) - log pi(x)`` (NaN where undefined)."""
        with np.errstate(invalid="ignore"):
            return self.log_density(x) + np.asarray(self.potential.value(x))


class PiecewiseConstantTarget(SigmoidTarget):
    """``pibar(x) = pi([x])``: the naive target, kept only to show it mixes badly."""

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        out = -np.asarray(self.potential.value(round_nearest_float(x)))
        return out if np.ndim(out) else float(out)


def _scalar_or_array(val):
    val = np.asarray(val, dtype=float)
    return val if val.ndim else float(val)


def log_pi_unnorm(p: Potential, x):
    """``-phi(x)``; raises on a non-finite potential."""
    val = -np.asarray(p.value(x), dtype=float)
    if not np.all(np.isfinite(val)):
        raise InvalidInputError("potential is not finite")
    return _scalar_or_array(val)


def log_pi_bar_unnorm(t: SigmoidTarget, x):
    x = np.asarray(x, dtype=float)
    round_nearest(x)  # rejects non-finite input
    val = np.asarray(t.log_density(x), dtype=float)
    if not np.all(np.isfinite(val)):
        raise InvalidInputError("sigmoid target log density is not finite")
    return _scalar_or_array(val)


def piecewise_constant_log_target(p: Potential, x):
    """``-phi([x])``."""
    return _scalar_or_array(-np.asarray(p.value(round_nearest(x).astype(float))))


def perfect_security_log_density(p: PerfectSecurityPotential, x):
    """``2 [log|Omega_d(u)| - log|j^2 - u^2|]``.

    Raises :class:`DomainError` for non-finite input and, on a truncated
    potential, for points past the guard radius.
    """
    x = np.asarray(x, dtype=float)
    u = np.sqrt(np.sum(x * x, axis=-1)) / (2.0 * p.rho)
    if not np.all(np.isfinite(u)):
        raise DomainError("point must be finite")
    if p.truncate and np.any(u >= p.guard_u):
        raise DomainError("point lies beyond the second Bessel zero")
    return -p.value(x)


def perfect_security_rho_for_unit_variance(d: int) -> float:
    """Scale ``rho = sqrt(d) / (2 j_{(d-2)/2})`` giving unit per-coordinate variance."""
    if d < 2:
        raise DomainError("d must be at least 2")
    return math.sqrt(d) / (2.0 * first_zero((d - 2) / 2.0))
