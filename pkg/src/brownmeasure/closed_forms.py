"""Exact formulas for z = x y^{-1} (x, y a circular pair) and its powers z^n.

Everything here is plain real/complex arithmetic. Numerical cross-checks
(quadrature, random matrices) live in the test-suite, never in this module.

Notation used throughout: for n >= 1 put ``c = pi/(n+1)`` and
``a = 2/(n+1)``; the variable ``v = t**a`` turns the density of |z^n| into a
Cauchy-type kernel, which is what makes the CDF and quantile elementary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "ZnFamily",
    "abs_z_density",
    "abs_zn_density",
    "abs_zn_cdf",
    "abs_zn_quantile",
    "abs_zn_sq_density",
    "abs_zn_sq_cdf",
    "abs_zn_sq_quantile",
    "brown_zn_density",
    "brown_zn_radial_cdf",
    "lp_norm_zn",
    "lp_norm_zn_pow",
    "h_n",
    "g_abs_zn_sq",
    "beta_integral",
]


def _check_n(n):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    return int(n)


def abs_z_density(t):
    """Density of |z|: ``(2/pi) / (1 + t^2)`` on (0, inf)."""
    t = np.asarray(t, dtype=float)
    return np.where(t >= 0, (2.0 / np.pi) / (1.0 + t * t), 0.0)


def abs_zn_density(t, n):
    """Density of |z^n| at ``t > 0``.

    ``(2/pi) sin(c) / (t (t^a + 2 cos(c) + t^-a))``; reduces to
    :func:`abs_z_density` for ``n = 1``.
    """
    n = _check_n(n)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("abs_zn_density is defined for t > 0 only")
    c = np.pi / (n + 1)
    a = 2.0 / (n + 1)
    v = t**a
    return (2.0 / np.pi) * np.sin(c) / (t * (v + 2.0 * np.cos(c) + 1.0 / v))


def _cdf_in_v(v, n):
    # d/dv atan2(v sin c, 1 + v cos c) = sin c / (v^2 + 2 v cos c + 1)
    c = np.pi / (n + 1)
    return (n + 1) / np.pi * np.arctan2(v * np.sin(c), 1.0 + v * np.cos(c))


def _quantile_in_v(q, n):
    c = np.pi / (n + 1)
    q = np.asarray(q, dtype=float)
    if np.any((q < 0) | (q > 1)):
        raise DomainError("quantile level must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        return np.sin(c * q) / np.sin(c * (1.0 - q))


def abs_zn_cdf(t, n):
    """CDF of |z^n|; equals ``(2/pi) arctan t`` for ``n = 1``."""
    n = _check_n(n)
    t = np.maximum(np.asarray(t, dtype=float), 0.0)
    return _cdf_in_v(t ** (2.0 / (n + 1)), n)


def abs_zn_quantile(q, n):
    """Inverse of :func:`abs_zn_cdf`: ``(sin(cq) / sin(c(1-q)))^((n+1)/2)``."""
    n = _check_n(n)
    return _quantile_in_v(q, n) ** ((n + 1) / 2.0)


def abs_zn_sq_density(x, n):
    """Density of |z^n|^2 (for n = 1: ``1 / (pi sqrt(x) (1 + x))``)."""
    x = np.asarray(x, dtype=float)
    r = np.sqrt(x)
    return abs_zn_density(r, n) / (2.0 * r)


def abs_zn_sq_cdf(x, n):
    n = _check_n(n)
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    return _cdf_in_v(x ** (1.0 / (n + 1)), n)


def abs_zn_sq_quantile(q, n):
    n = _check_n(n)
    return _quantile_in_v(q, n) ** (n + 1)


def brown_zn_density(s, n):
    """Planar density of the Brown measure of z^n at ``s`` (complex).

    ``|s|^(2/n - 2) / (n pi (1 + |s|^(2/n))^2)``; for n = 1 this is
    ``1 / (pi (1 + |s|^2)^2)``.
    """
    n = _check_n(n)
    r = np.abs(np.asarray(s))
    if n > 1 and np.any(r == 0):
        raise DomainError("brown_zn_density is singular at s = 0 for n > 1")
    q = r ** (2.0 / n)
    return r ** (2.0 / n - 2.0) / (n * np.pi * (1.0 + q) ** 2)


def brown_zn_radial_cdf(r, n):
    """Brown mass of the closed disc of radius r: ``r^(2/n) / (1 + r^(2/n))``."""
    n = _check_n(n)
    q = np.maximum(np.asarray(r, dtype=float), 0.0) ** (2.0 / n)
    with np.errstate(invalid="ignore"):
        return np.where(np.isinf(q), 1.0, q / (1.0 + q))


def _check_p(n, p):
    if not 0 < p < 2.0 / (n + 1):
        raise DomainError(
            f"z^{n} lies in L^p only for 0 < p < {2.0 / (n + 1):g}; got p={float(p):g}"
        )


def lp_norm_zn_pow(n, p):
    """``||z^n||_p^p = ||z^-n||_p^p = (n+1) sin(pi p/2) / sin((n+1) pi p/2)``."""
    n = _check_n(n)
    _check_p(n, p)
    return (n + 1) * np.sin(np.pi * p / 2.0) / np.sin((n + 1) * np.pi * p / 2.0)


def lp_norm_zn(n, p):
    """``||z^n||_p`` (the p-th root of :func:`lp_norm_zn_pow`)."""
    return lp_norm_zn_pow(n, p) ** (1.0 / p)


def h_n(s, n):
    """``int s/(s^2+u^2) dmu_{|z^n|}(u) = 1 / (s + s^((n-1)/(n+1)))``."""
    n = _check_n(n)
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise DomainError("h_n is defined for s > 0 only")
    return 1.0 / (s + s ** ((n - 1.0) / (n + 1.0)))


def g_abs_zn_sq(lam, n):
    """Cauchy transform of |z^n|^2 off the cut [0, inf).

    ``1 / (lam (1 + (-lam)^(-1/(n+1))))`` with the principal branch of the
    root of ``-lam``, which is analytic exactly on C minus [0, inf).
    """
    n = _check_n(n)
    lam = np.asarray(lam, dtype=complex)
    if np.any((lam.imag == 0) & (lam.real >= 0)):
        raise DomainError("g_abs_zn_sq: lambda lies on the cut [0, inf)")
    return 1.0 / (lam * (1.0 + (-lam) ** (-1.0 / (n + 1))))


def beta_integral(beta):
    """``int_0^inf t^(beta-1)/(1+t) dt = pi / sin(beta pi)`` for 0 < beta < 1."""
    if not 0 < beta < 1:
        raise DomainError("beta_integral needs 0 < beta < 1")
    return np.pi / np.sin(beta * np.pi)


@dataclass(frozen=True)
class ZnFamily:
    """The quotient-of-circulars family z^n for a fixed positive integer n."""

    n: int = 1

    def __post_init__(self):
        _check_n(self.n)

    @property
    def lp_threshold(self) -> float:
        """Supremum of the p for which z^n is p-integrable."""
        return 2.0 / (self.n + 1)

    def density(self, t):
        return abs_zn_density(t, self.n)

    def cdf(self, t):
        return abs_zn_cdf(t, self.n)

    def quantile(self, q):
        return abs_zn_quantile(q, self.n)

    def brown_density(self, s):
        return brown_zn_density(s, self.n)

    def brown_radial_cdf(self, r):
        return brown_zn_radial_cdf(r, self.n)

    def lp_norm(self, p):
        return lp_norm_zn(self.n, p)

    def h(self, s):
        return h_n(s, self.n)

    def cauchy_sq(self, lam):
        return g_abs_zn_sq(lam, self.n)
