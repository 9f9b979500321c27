"""Brown measures of R-diagonal operators from the distribution of |T|.

Given ``mu = mu_|T|`` (not a Dirac mass) the subordination functions

    h(s)   = int s/(s^2 + u^2) dmu(u)                       s > 0
    k(s,t) = (s - t)(1/h(s) - s + t)
    s(l,t) = the root s > t of k(s, t) = l^2

determine the Fuglede-Kadison determinant of ``T - lambda`` and, through the
S-transform of ``mu_|T|^2``, the rotation-invariant Brown measure of T.

Internally ``1/h(s) - s`` is evaluated as ``N(s) / (s D(s))`` with
``N = int u^2/(s^2+u^2)`` and ``D = int 1/(s^2+u^2)``; the naive difference
cancels catastrophically for large s.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special
from scipy.interpolate import PchipInterpolator

from . import closed_forms as cf
from .errors import (
    AboveOuterRadius,
    BelowInnerRadius,
    DiracUnsupported,
    DivergentIntegral,
    DomainError,
    SingularMomentError,
)
from .measures import (
    AtomicMeasure,
    Measure,
    NamedDensity,
    lambda_bounds,
    log_fk_determinant,
    pushforward,
)
from .transforms import s_transform

__all__ = [
    "SubordinationContext",
    "RadialBrownMeasure",
    "h",
    "k",
    "solve_s",
    "h_lambda",
    "delta_shifted",
    "log_delta_shifted",
    "radial_cdf",
    "radial_density",
    "planar_pushforward",
    "log_potential",
    "neg_moment_via_h",
    "resolvent_bound",
]

GRID_SIZE = 2048
SOLVE_RTOL = 1e-11


@dataclass(frozen=True, eq=False)
class SubordinationContext:
    """Distribution of |T| together with its radii ``lambda1 <= lambda2``."""

    mu_abs: Measure
    lambda1: float = field(init=False)
    lambda2: float = field(init=False)

    def __post_init__(self):
        b = lambda_bounds(self.mu_abs)
        if b.dirac:
            raise DiracUnsupported(
                "mu_|T| is a Dirac mass; T would be a multiple of a Haar unitary"
            )
        object.__setattr__(self, "lambda1", b.lambda1)
        object.__setattr__(self, "lambda2", b.lambda2)

    @property
    def kernel_mass(self) -> float:
        return self.mu_abs.kernel_mass

    def _nd(self, s: float) -> tuple[float, float]:
        """``(N(s), D(s))`` at a single s > 0."""
        mu = self.mu_abs
        s2 = s * s
        if isinstance(mu, AtomicMeasure):
            u2 = mu.nodes * mu.nodes
            q = 1.0 / (s2 + u2)
            return float(mu.weights @ (u2 * q)), float(mu.weights @ q)
        # in y = log u both pieces are logistic in y - log s
        ys = float(np.log(s))
        num = mu.expect_log(lambda y: _sigmoid(2.0 * (y - ys)), split_at=ys)
        den = mu.expect_log(lambda y: _sigmoid(2.0 * (ys - y)), split_at=ys) / s2
        return num, den


def _sigmoid(z):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-z))


def _scalar_s(s) -> float:
    s = float(s)
    if not s > 0:
        raise DomainError("s must be positive")
    return s


def h(ctx: SubordinationContext, s):
    """``h(s) = int s/(s^2+u^2) dmu(u)``; lies in ``(0, 1/s)``. Accepts arrays."""
    if np.ndim(s):
        return np.array([h(ctx, v) for v in np.ravel(s)]).reshape(np.shape(s))
    s = _scalar_s(s)
    return s * ctx._nd(s)[1]


def _k(ctx: SubordinationContext, s: float, t: float) -> float:
    num, den = ctx._nd(s)
    if den == 0.0:  # s so large that every term underflowed: 1/h - s -> int u^2
        return (s - t) * (num + t)
    return (s - t) * (num / (s * den) + t)


def k(ctx: SubordinationContext, s, t):
    """``k(s,t) = (s - t)(1/h(s) - s + t)``; increasing in s on ``s > t >= 0``."""
    if np.ndim(s) or np.ndim(t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        return np.array([_k(ctx, _scalar_s(a), float(b)) for a, b in zip(s.ravel(), t.ravel())]).reshape(s.shape)
    return _k(ctx, _scalar_s(s), float(t))


def solve_s(ctx: SubordinationContext, lam: float, t: float) -> float:
    """The root ``s > t`` of ``k(s, t) = lam^2``.

    For ``t = 0`` a root exists only for ``lambda1 < lam < lambda2``.

    Raises
    ------
    BelowInnerRadius, AboveOuterRadius
        ``t = 0`` and ``lam`` outside the open annulus.
    """
    lam = float(lam)
    t = float(t)
    if lam <= 0 or t < 0:
        raise DomainError("solve_s needs lam > 0 and t >= 0")
    if t == 0.0:
        if lam <= ctx.lambda1:
            raise BelowInnerRadius(f"|lambda|={lam:g} <= lambda1={ctx.lambda1:g}")
        if lam >= ctx.lambda2:
            raise AboveOuterRadius(f"|lambda|={lam:g} >= lambda2={ctx.lambda2:g}")
    target = lam * lam

    def f(y):
        return _k(ctx, float(np.exp(y)), t) - target

    if t > 0:
        # k(t,t) = 0 and k(s,t) >= (s - t) t, so s = t + lam^2/t brackets the root
        y_lo = np.log(t)
        y_hi = np.log(t + target / t) + 1e-12
        while f(y_hi) < 0:  # rounding guard
            y_hi += 1.0
    else:
        y_lo, y_hi = -1.0, 1.0
        while f(y_lo) >= 0:
            y_lo -= 2.0
            if y_lo < -690:
                raise BelowInnerRadius(f"|lambda|={lam:g} numerically at the inner radius")
        while f(y_hi) <= 0:
            y_hi += 2.0
            if y_hi > 690:
                raise AboveOuterRadius(f"|lambda|={lam:g} numerically at the outer radius")
    y = optimize.brentq(f, y_lo, y_hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    s = float(np.exp(y))
    return max(s, np.nextafter(t, np.inf))


def h_lambda(ctx: SubordinationContext, lam: float, t: float) -> float:
    """``h(s(|lam|, t))``: the h-function of ``|T - lam|`` evaluated at t."""
    lam = abs(complex(lam))
    if t <= 0:
        raise DomainError("h_lambda needs t > 0")
    if lam == 0:
        return h(ctx, t)
    return h(ctx, solve_s(ctx, lam, t))


def _log_det_shift(ctx: SubordinationContext, s: float) -> float:
    """``int log(u^2 + s^2) dmu(u)``, written as ``2 log max + log1p(min^2/max^2)``."""
    mu = ctx.mu_abs

    ys = float(np.log(s))
    if isinstance(mu, AtomicMeasure):
        with np.errstate(divide="ignore"):
            y = np.log(mu.nodes)
    else:
        y = None

    def g(y):
        return 2.0 * np.maximum(y, ys) + np.log1p(np.exp(-2.0 * np.abs(y - ys)))

    if y is not None:
        return float(mu.weights @ g(y))
    return mu.expect_log(g, split_at=ys)


def log_delta_shifted(ctx: SubordinationContext, lam) -> float:
    """``log Delta(T - lam)``; depends on ``|lam|`` only.

    Three regimes: ``|lam| <= lambda1`` gives ``log Delta(T)``,
    ``|lam| >= lambda2`` gives ``log |lam|``, and in between

        2 log Delta = log(|lam|^2 / (|lam|^2 + s^2)) + int log(u^2 + s^2) dmu

    with ``s = s(|lam|, 0)``. The boundary circles belong to the outer regimes.
    """
    r = abs(complex(lam))
    if r <= ctx.lambda1:
        return log_fk_determinant(ctx.mu_abs)
    if r >= ctx.lambda2:
        return float(np.log(r))
    s = solve_s(ctx, r, 0.0)
    ratio = -np.log1p((s / r) ** 2)
    return 0.5 * (ratio + _log_det_shift(ctx, s))


def delta_shifted(ctx: SubordinationContext, lam) -> float:
    """Fuglede-Kadison determinant ``Delta(T - lam)``; see :func:`log_delta_shifted`."""
    ld = log_delta_shifted(ctx, lam)
    return 0.0 if ld == -np.inf else float(np.exp(ld))


# -- radial Brown measure -------------------------------------------------------


def _fejer_weights(n: int) -> np.ndarray:
    """Fejer's first rule on [-1, 1] at the nodes ``cos((j + 1/2) pi / n)``."""
    theta = (np.arange(n) + 0.5) * np.pi / n
    kk = np.arange(1, n // 2 + 1)
    s = np.cos(2.0 * np.outer(theta, kk)) @ (1.0 / (4.0 * kk * kk - 1.0))
    return (2.0 / n) * (1.0 - 2.0 * s)


@dataclass(frozen=True, eq=False)
class RadialBrownMeasure:
    """Rotation-invariant probability measure on C given by its radial CDF.

    Stored as a monotone table ``t_nodes -> r_nodes`` (ball mass to radius)
    with quadrature weights for integrals against the measure. Between
    nodes the CDF is a monotone cubic in ``(log r, logit t')``, where
    ``t' = (t - kernel_mass)/(1 - kernel_mass)``; power-law tails are
    straight lines in those coordinates. Beyond the table the CDF is linear
    in r up to a finite radius, or continues the end slope for an unbounded
    (or zero) radius.

    Attributes
    ----------
    kernel_mass : float
        Mass of the atom at the origin.
    inner_radius, outer_radius : float
        The support is contained in the closed annulus between these radii,
        plus the origin when ``kernel_mass > 0``.
    """

    kernel_mass: float
    inner_radius: float
    outer_radius: float
    t_nodes: np.ndarray = field(repr=False)
    r_nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        m0 = self.kernel_mass
        t = np.asarray(self.t_nodes, float)
        r = np.asarray(self.r_nodes, float)
        tp = (t - m0) / (1.0 - m0)
        ok = np.isfinite(r) & (r > 0) & (tp > 0) & (tp < 1)
        tp, r = tp[ok], r[ok]
        order = np.argsort(tp, kind="stable")
        tp, x = tp[order], np.log(r[order])
        # keep a strictly increasing table; flat stretches come from rounding
        keep = np.concatenate(([True], (np.diff(x) > 0) & (np.diff(tp) > 0)))
        tp, x = tp[keep], x[keep]
        if tp.size < 2:
            raise DomainError("radial table has fewer than two usable nodes")
        u = special.logit(tp)
        fwd = PchipInterpolator(x, u, extrapolate=False)
        slopes = fwd.derivative()(x[[0, -1]])
        secant = np.diff(u[[0, 1, -2, -1]])[[0, 2]] / np.diff(x[[0, 1, -2, -1]])[[0, 2]]
        slopes = np.where(slopes > 0, slopes, secant)
        object.__setattr__(self, "_fwd", fwd)
        object.__setattr__(self, "_inv", PchipInterpolator(u, x, extrapolate=False))
        object.__setattr__(self, "_ends", (x[0], x[-1], u[0], u[-1], tp[0], tp[-1]))
        object.__setattr__(self, "_slopes", (float(slopes[0]), float(slopes[1])))

    def _tp_of_r(self, r: np.ndarray) -> np.ndarray:
        x0, x1, u0, u1, tp0, tp1 = self._ends
        d0, d1 = self._slopes
        lo, hi = self.inner_radius, self.outer_radius
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.log(r)
            mid = special.expit(self._fwd(np.clip(x, x0, x1)))
            if lo > 0:
                left = tp0 * (r - lo) / (np.exp(x0) - lo)
            else:
                left = special.expit(u0 + d0 * (x - x0))
            if np.isfinite(hi):
                right = 1.0 - (1.0 - tp1) * (hi - r) / (hi - np.exp(x1))
            else:
                right = special.expit(u1 + d1 * (x - x1))
        out = np.where(x < x0, left, np.where(x > x1, right, mid))
        out = np.where(r <= lo, 0.0, out)
        out = np.where(r >= hi, 1.0, out)
        return np.clip(out, 0.0, 1.0)

    def cdf(self, r):
        """Mass of the closed disc of radius ``r`` (array-friendly)."""
        r = np.asarray(r, dtype=float)
        m0 = self.kernel_mass
        out = m0 + (1.0 - m0) * self._tp_of_r(np.maximum(r, 0.0))
        out = np.where(r <= 0, np.where(r < 0, 0.0, m0), out)
        return float(out) if out.ndim == 0 else out

    def quantile(self, q):
        """Smallest radius whose disc has mass ``>= q``.

        Returns 0 for ``q <= kernel_mass`` when there is an atom at the origin
        and ``inner_radius`` for ``q = 0`` otherwise.
        """
        q = np.asarray(q, dtype=float)
        if np.any((q < 0) | (q > 1)):
            raise DomainError("quantile level must lie in [0, 1]")
        m0 = self.kernel_mass
        x0, x1, u0, u1, tp0, tp1 = self._ends
        d0, d1 = self._slopes
        lo, hi = self.inner_radius, self.outer_radius
        tp = np.clip((q - m0) / (1.0 - m0), 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            u = special.logit(tp)
            mid = np.exp(self._inv(np.clip(u, u0, u1)))
            if lo > 0:
                left = lo + (np.exp(x0) - lo) * tp / tp0
            else:
                left = np.exp(x0 + (u - u0) / d0)
            if np.isfinite(hi):
                right = hi - (hi - np.exp(x1)) * (1.0 - tp) / (1.0 - tp1)
            else:
                right = np.exp(x1 + (u - u1) / d1)
            out = np.where(tp < tp0, left, np.where(tp > tp1, right, mid))
        out = np.where(tp <= 0, lo, out)
        out = np.where(tp >= 1, hi, out)
        if m0 > 0:
            out = np.where(q <= m0, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def expect_radial(self, g) -> float:
        """``int g(|w|) dmu_T(w)`` using the tabulated quantiles (Fejer rule)."""
        val = float(self.weights @ g(np.asarray(self.r_nodes)))
        if self.kernel_mass > 0:
            val += self.kernel_mass * float(g(np.zeros(1))[0])
        return val

    def moment(self, p: float) -> float:
        """``int |w|^p dmu_T(w)`` for ``p > 0``."""
        if p <= 0:
            raise DomainError("moment needs p > 0")
        return self.expect_radial(lambda r: r**p)


def _square_measure(mu: Measure) -> Measure:
    if isinstance(mu, NamedDensity):
        if mu.family != "abs_z_pow_n":
            raise DomainError(f"no closed form for the square of the {mu.family!r} family")
        return mu.squared()
    return pushforward(mu, "square")


def radial_cdf(ctx: SubordinationContext, kernel_mass: float | None = None,
               grid_size: int = GRID_SIZE) -> RadialBrownMeasure:
    """Brown measure of the R-diagonal T with ``mu_|T| = ctx.mu_abs``.

    The ball of radius ``S(t - 1)^(-1/2)`` (S the S-transform of
    ``mu_|T|^2``) has mass t, for t between the kernel mass and 1. The map is
    tabulated on a cosine-spaced t-grid and inverted by monotone
    interpolation.

    Parameters
    ----------
    ctx : SubordinationContext
    kernel_mass : float, optional
        Must equal the mass of the atom of ``mu_|T|`` at 0 when given.
    grid_size : int
        Number of t-nodes.
    """
    m0 = ctx.kernel_mass
    if kernel_mass is not None and abs(kernel_mass - m0) > 1e-12:
        raise DomainError(f"kernel_mass {kernel_mass!r} differs from the atom of mu_|T| at 0 ({m0!r})")
    x = np.cos((np.arange(grid_size)[::-1] + 0.5) * np.pi / grid_size)
    t = m0 + (1.0 - m0) * 0.5 * (1.0 + x)
    w = (1.0 - m0) * 0.5 * _fejer_weights(grid_size)[::-1]
    sq = _square_measure(ctx.mu_abs)
    r = s_transform(sq, t - 1.0) ** -0.5
    # the exact radii bound the table even where rounding pushes past them
    r = np.clip(r, ctx.lambda1, ctx.lambda2)
    return RadialBrownMeasure(m0, ctx.lambda1, ctx.lambda2, t, r, w)


def radial_density(rbm: RadialBrownMeasure, r: float) -> tuple[float, float]:
    """``(dF/dr, planar density)`` at radius r; both 0 outside the open annulus.

    Central differences with Richardson extrapolation on steps ``1e-3 r``
    and ``5e-4 r``, clipped to stay inside the annulus.
    """
    r = float(r)
    if not rbm.inner_radius < r < rbm.outer_radius:
        return 0.0, 0.0
    step = 1e-3 * r
    step = min(step, 0.5 * (r - rbm.inner_radius), 0.5 * (rbm.outer_radius - r))

    def diff(hh):
        return (rbm.cdf(r + hh) - rbm.cdf(r - hh)) / (2.0 * hh)

    pdf = max((4.0 * diff(step / 2) - diff(step)) / 3.0, 0.0)
    return pdf, pdf / (2.0 * np.pi * r)


def planar_pushforward(rbm: RadialBrownMeasure, kind: str, param: float | None = None) -> RadialBrownMeasure:
    """Image under ``w -> w^m`` (``"power"``), ``w -> 1/w`` (``"inverse"``) or ``w -> c w`` (``"scale"``)."""
    t, r, wts = rbm.t_nodes, rbm.r_nodes, rbm.weights
    lo, hi = rbm.inner_radius, rbm.outer_radius
    if kind == "power":
        if param is None or param <= 0:
            raise DomainError("power needs a positive exponent")
        return RadialBrownMeasure(rbm.kernel_mass, lo**param, hi**param, t, r**param, wts)
    if kind == "scale":
        if param is None or param <= 0:
            raise DomainError("scale needs a positive factor")
        return RadialBrownMeasure(rbm.kernel_mass, lo * param, hi * param, t, r * param, wts)
    if kind == "inverse":
        if rbm.kernel_mass > 0:
            raise SingularMomentError("inverse of a Brown measure with an atom at 0")
        new_lo = 1.0 / hi if hi > 0 else np.inf
        new_hi = 1.0 / lo if lo > 0 else np.inf
        return RadialBrownMeasure(0.0, new_lo, new_hi, (1.0 - t)[::-1], (1.0 / r)[::-1], wts[::-1])
    raise DomainError(f"unknown pushforward {kind!r}; expected power, inverse or scale")


def log_potential(rbm: RadialBrownMeasure, lam) -> float:
    """``int log|w - lam| dmu(w)`` for a rotation-invariant mu.

    Averaging over circles gives ``log max(r, |lam|)``.
    """
    a = abs(complex(lam))
    if a == 0 and rbm.kernel_mass > 0:
        return -np.inf
    with np.errstate(divide="ignore"):
        return rbm.expect_radial(lambda r: np.log(np.maximum(r, a)))


# -- negative moments and resolvent bounds ---------------------------------------


def _h_log_integrand(ctx: SubordinationContext, p: float):
    """``y -> e^{(1-p) y} h(e^y) = e^{-p y} s^2 D(s)`` at ``s = e^y``."""
    mu = ctx.mu_abs
    if isinstance(mu, AtomicMeasure):
        with np.errstate(divide="ignore"):
            lu = np.log(mu.nodes)
        wts = mu.weights

        def g(y):
            # s^2/(s^2 + u^2) is a logistic in y - log u; combine exponents to avoid overflow
            return float(wts @ np.exp(-p * y - np.logaddexp(0.0, 2.0 * (lu - y))))

    else:

        def g(y):
            return mu.expect_log(lambda v: np.exp(-p * y - np.logaddexp(0.0, 2.0 * (v - y))), split_at=y)

    return g


def _tail_rate(g, y0: float, direction: float) -> float:
    """Exponential decay rate of g(y) as ``y -> direction * inf`` from two samples."""
    y1 = y0 + 10.0 * direction
    a, b = g(y0), g(y1)
    if b <= 0 or a <= 0:
        return np.inf
    return (np.log(a) - np.log(b)) / 10.0


def neg_moment_via_h(ctx: SubordinationContext, p: float) -> float:
    """``int u^-p dmu(u) = (2/pi) sin(pi p/2) int_0^inf s^-p h(s) ds`` for ``0 < p < 2``.

    The right-hand side is integrated in ``y = log s``. Divergence is
    detected from the local exponential decay rate of the integrand at
    ``y = -/+ 60`` (relative to the bulk of the measure).

    Raises
    ------
    DivergentIntegral
        If the integrand does not decay at one of the ends.
    """
    if not 0 < p < 2:
        raise DomainError("neg_moment_via_h needs 0 < p < 2")
    mu = ctx.mu_abs
    if isinstance(mu, AtomicMeasure):
        pos = mu.nodes[mu.nodes > 0]
        c_lo = float(np.log(pos[0])) if pos.size else 0.0
        c_hi = float(np.log(pos[-1])) if pos.size else 0.0
        marks = np.log(pos) if pos.size <= 64 else np.quantile(np.log(pos), np.linspace(0, 1, 64))
    else:
        c_lo, c_hi = (float(np.log(mu.quantile(q))) for q in (1e-3, 1 - 1e-3))
        marks = np.log(mu.quantile(np.array([1e-3, 0.5, 1 - 1e-3])))
    g = _h_log_integrand(ctx, p)
    rate_lo = _tail_rate(g, c_lo - 60.0, -1.0)
    rate_hi = _tail_rate(g, c_hi + 60.0, 1.0)
    if rate_lo <= 1e-8 or rate_hi <= 1e-8:
        raise DivergentIntegral(f"int s^-{p:g} h(s) ds diverges for this measure")
    y_lo = c_lo - 60.0 - 40.0 / rate_lo
    y_hi = c_hi + 60.0 + 40.0 / rate_hi
    edges = np.unique(np.concatenate(([y_lo], np.clip(marks, y_lo, y_hi), [y_hi])))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            total += integrate.quad(g, a, b, epsabs=0.0, epsrel=1e-11, limit=500)[0]
    return float(2.0 / np.pi * np.sin(np.pi * p / 2.0) * total)


def resolvent_bound(n: int, p: float) -> float:
    """Uniform bound ``||(z^n - lam)^-1||_p <= ||z^-n||_p`` valid for every complex lam."""
    return cf.lp_norm_zn(n, p)
