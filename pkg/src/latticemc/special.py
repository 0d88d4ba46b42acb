"""Bessel functions of the first kind for integer and half-integer orders.

Only what the Perfect Security density needs: ``J_nu`` for ``2*nu`` an
integer in ``[-1, 28]``, the scaled function
``Omega_d(u) = (2/u)**((d-2)/2) * J_{(d-2)/2}(u)`` and positive zeros of
``J_nu``. The guaranteed range is ``0 <= u <= 50``; ``extended=True`` lifts
the upper limit for callers that need the density's far tail.

Evaluation strategy:

* ``u <= 12``: ascending power series (all orders).
* ``u > 12``, half-integer order: closed forms for ``J_{-1/2}``, ``J_{1/2}``
  followed by upward recurrence (stable because ``u > nu`` there).
* ``u > 12``, integer order: Miller's downward recurrence normalised with
  ``J_0 + 2 * sum_k J_{2k} = 1``.
* ``u > 50`` (extended mode only): Hankel's asymptotic expansion, whose
  terms for these orders shrink far below double precision before they
  start to grow.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

__all__ = [
    "bessel_j",
    "omega_d",
    "first_zero",
    "bessel_zero",
    "DomainError",
    "MAX_ARG",
    "MAX_TWICE_ORDER",
]

MAX_ARG = 50.0
MAX_TWICE_ORDER = 28
SERIES_CUTOFF = 12.0
_SERIES_TERMS = 80


class DomainError(ValueError):
    """Argument or order outside the supported range."""


def _check_order(nu) -> float:
    two_nu = 2.0 * float(nu)
    if not (two_nu == round(two_nu) and -1 <= two_nu <= MAX_TWICE_ORDER):
        raise DomainError(f"unsupported Bessel order {nu!r}: need 2*nu integer in [-1, {MAX_TWICE_ORDER}]")
    return float(nu)


def _check_arg(u, extended: bool = False) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)) or np.any(u < 0) or (not extended and np.any(u > MAX_ARG)):
        raise DomainError(f"Bessel argument must lie in [0, {MAX_ARG}]" + ("" if not extended else " or be finite"))
    return u


def _reduced_series(nu: float, u: np.ndarray) -> np.ndarray:
    """``sum_k (-u^2/4)^k / (k! Gamma(k + nu + 1))`` == ``(2/u)^nu J_nu(u)``."""
    q = -0.25 * u * u
    term = np.full_like(u, 1.0 / math.gamma(nu + 1.0))
    total = term.copy()
    for k in range(1, _SERIES_TERMS):
        term = term * q / (k * (k + nu))
        total += term
        if np.all(np.abs(term) <= 1e-18 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _half_integer_upward(nu: float, u: np.ndarray) -> np.ndarray:
    pref = np.sqrt(2.0 / (math.pi * u))
    j_prev = pref * np.cos(u)  # J_{-1/2}
    j_cur = pref * np.sin(u)  # J_{1/2}
    if nu == -0.5:
        return j_prev
    order = 0.5
    while order < nu:
        j_prev, j_cur = j_cur, (2.0 * order / u) * j_cur - j_prev
        order += 1.0
    return j_cur


def _integer_miller(n: int, u: np.ndarray) -> np.ndarray:
    top = max(float(u.max()), float(n))
    start = 2 * int((top + 30.0 + 6.0 * top ** (1.0 / 3.0)) / 2.0 + 1)
    j_next = np.zeros_like(u)
    j_cur = np.full_like(u, 1e-30)
    norm = np.zeros_like(u)
    result = np.zeros_like(u)
    for k in range(start, 0, -1):
        # j_cur holds J_k (unnormalised); step down to J_{k-1}
        j_prev = (2.0 * k / u) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if k - 1 == n:
            result = j_cur.copy()
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
        big = np.abs(j_cur) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            j_cur *= scale
            j_next *= scale
            norm *= scale
            result *= scale
    norm += j_cur  # J_0
    return result / norm


def _hankel(nu: float, u: np.ndarray) -> np.ndarray:
    """Large-argument expansion ``sqrt(2/(pi u)) (P cos chi - Q sin chi)``."""
    mu = 4.0 * nu * nu
    p = np.ones_like(u)
    q = np.zeros_like(u)
    term = np.ones_like(u)
    for k in range(1, 80):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * u)
        if k % 4 == 1:
            q += term
        elif k % 4 == 2:
            p -= term
        elif k % 4 == 3:
            q -= term
        else:
            p += term
        if np.all(np.abs(term) < 1e-17):
            break
    chi = u - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * u)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j(nu, u, extended: bool = False):
    """Bessel function of the first kind ``J_nu(u)``.

    Args:
        nu: order; ``2*nu`` must be an integer in ``[-1, 28]``.
        u: scalar or array with entries in ``[0, 50]`` (any finite
            non-negative value when ``extended``).

    Returns:
        float for scalar input, otherwise an array of ``u``'s shape.
        Absolute error is below 1e-10 on ``[0, 50]``.
    """
    nu = _check_order(nu)
    scalar = np.ndim(u) == 0
    u = np.atleast_1d(_check_arg(u, extended))
    if nu < 0 and np.any(u == 0):
        raise DomainError("J_{-1/2} is singular at 0")
    out = np.empty_like(u)
    small = u <= SERIES_CUTOFF
    if np.any(small):
        us = u[small]
        with np.errstate(divide="ignore"):
            out[small] = (0.5 * us) ** nu * _reduced_series(nu, us)
    far = u > MAX_ARG
    if np.any(far):
        out[far] = _hankel(nu, u[far])
    large = ~small & ~far
    if np.any(large):
        ul = u[large]
        if nu != int(nu):
            out[large] = _half_integer_upward(nu, ul)
        else:
            out[large] = _integer_miller(int(nu), ul)
    return float(out[0]) if scalar else out


def omega_d(d: int, u, extended: bool = False):
    """``Omega_d(u) = (2/u)**((d-2)/2) J_{(d-2)/2}(u)``, with ``Omega_d(0) = 1/Gamma(d/2)``."""
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be a positive integer, got {d!r}")
    nu = _check_order((d - 2) / 2.0)
    scalar = np.ndim(u) == 0
    u = np.atleast_1d(_check_arg(u, extended))
    out = np.empty_like(u)
    small = u <= SERIES_CUTOFF
    if np.any(small):
        out[small] = _reduced_series(nu, u[small])
    if np.any(~small):
        ul = u[~small]
        out[~small] = (2.0 / ul) ** nu * bessel_j(nu, ul, extended)
    return float(out[0]) if scalar else out


def _bessel_deriv(nu: float, u: float) -> float:
    # J' = J_{nu-1} - (nu/u) J_nu stays inside the supported orders for nu >= 1/2
    if nu >= 0.5:
        return bessel_j(nu - 1.0, u) - (nu / u) * bessel_j(nu, u)
    return -bessel_j(1.0, u)


@lru_cache(maxsize=None)
def bessel_zero(nu, k: int = 1) -> float:
    """``k``-th positive zero of ``J_nu`` for ``nu >= 0``.

    Brackets the zero by scanning upward from ``nu`` in steps of 0.1 (zeros
    are more than ``pi/2`` apart) and refines by bisection plus a Newton
    polish.
    """
    nu = _check_order(nu)
    if nu < 0 or k < 1:
        raise DomainError("zeros are supported for nu >= 0 and k >= 1")
    step = 0.1
    a = nu + step if nu > 0 else step
    fa = bessel_j(nu, a)
    found = 0
    while True:
        b = a + step
        if b > MAX_ARG:
            raise RuntimeError(f"bracketing failed for zero {k} of J_{nu}")
        fb = bessel_j(nu, b)
        if fa == 0.0 or fa * fb < 0:
            found += 1
            if found == k:
                break
        a, fa = b, fb
    if fa == 0.0:
        return a
    lo, hi, flo = a, b, fa
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        fm = bessel_j(nu, mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(3):
        dx = bessel_j(nu, x) / _bessel_deriv(nu, x)
        if not math.isfinite(dx) or abs(dx) > 1e-10:
            break
        x -= dx
    return x


def first_zero(nu) -> float:
    """First positive zero ``j_nu`` of ``J_nu``."""
    return bessel_zero(nu, 1)
