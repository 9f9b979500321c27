"""psi-, chi-, S- and Cauchy transforms of measures on [0, inf).

Conventions::

    psi(u)  = int 1/(1 - u t) dmu(t) - 1          u < 0
    chi     = psi^{-1}                             on (m0 - 1, 0)
    S(w)    = (1 + w)/w * chi(w)
    G(lam)  = int 1/(lam - t) dmu(t)               lam off [0, inf)

where ``m0`` is the mass of the atom at 0. Inversion of psi works on the
substitution ``u = -exp(x)``: in that variable psi is a mixture of logistic
functions, ``psi(x) = -sum_i w_i sigma(x + log t_i)``, which is decreasing
and gives an explicit bracket for every root.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import closed_forms as cf
from .errors import DomainError, SingularMomentError
from .measures import AtomicMeasure, Measure, NamedDensity

__all__ = [
    "TransformPoint",
    "psi",
    "chi",
    "s_transform",
    "s_of_inverse",
    "cauchy_transform",
    "stieltjes_density",
    "r_bernoulli",
    "evaluate",
]

X_MIN, X_MAX = -700.0, 700.0
_CHUNK = 4_000_000  # max grid-points x atoms per vectorised block


@dataclass(frozen=True)
class TransformPoint:
    argument: complex | float
    value: complex | float
    domain_tag: str  # psi_neg_axis | chi_interval | s_interval | cauchy_offcut


def _sigmoid(y):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-y))


def _sigmoid_pair(z):
    """``(sigma(z), sigma(-z))``, each accurate in its own tail, from one exponential."""
    e = np.exp(-np.abs(z))
    big = 1.0 / (1.0 + e)
    small = e * big
    pos = z >= 0
    return np.where(pos, big, small), np.where(pos, small, big)


def _psi_x_atomic(mu: AtomicMeasure, x: np.ndarray, deriv: bool = False):
    pos = mu.nodes > 0
    logt = np.log(mu.nodes[pos])
    w = mu.weights[pos]
    x = np.atleast_1d(x)
    val = np.empty(x.shape)
    dval = np.empty(x.shape) if deriv else None
    step = max(1, _CHUNK // max(1, logt.size))
    for i in range(0, x.size, step):
        z = x[i : i + step, None] + logt[None, :]
        if deriv:
            sig, comp = _sigmoid_pair(z)
            dval[i : i + step] = -((sig * comp) @ w)
        else:
            sig = _sigmoid(z)
        val[i : i + step] = -(sig @ w)
    return (val, dval) if deriv else val


def _psi_x_closed(d: NamedDensity, x: np.ndarray):
    if d.family == "abs_x_sq":
        # psi = 2/(s+1) - 1 with s = sqrt(1 + 4 e^x), written without cancellation
        ex = np.exp(np.minimum(x, X_MAX))
        s = np.sqrt(1.0 + 4.0 * ex)
        return -4.0 * ex / (s + 1.0) ** 2, -4.0 * ex / (s * (s + 1.0) ** 2)
    # |z^n|^2: psi(x) = -sigma(x / (n + 1))
    k = d.n + 1.0
    sig = _sigmoid(x / k)
    return -sig, -sig * _sigmoid(-x / k) / k


def _psi_x_quad(d: NamedDensity, x: np.ndarray):
    """psi and its x-derivative by adaptive quadrature in ``y = log t``.

    Every component is divided by a coarse estimate of its own size so that
    the max-norm error control of ``quad_vec`` acts as a relative tolerance.
    Points whose root sits in the upper half of the measure integrate the
    complement ``1 + psi`` instead of ``psi``.
    """
    y_med = float(np.log(d.quantile(0.5)))
    comp = x + y_med > 0
    sgn = np.where(comp, -1.0, 1.0)
    span = float(np.max(np.abs(x))) + 60.0 * max(1.0, d.n + 1.0)
    y_lo = -span
    y_hi = float(np.log(4.0)) if d.family == "abs_x_sq" else span

    def parts(y):
        # y is a scalar or a column of nodes
        sig, comp = _sigmoid_pair(sgn * (x + y))
        return sig, sig * comp

    grid = np.arange(y_lo, y_hi, 0.05)
    pg = d.log_density(grid)
    scale_v = np.zeros(x.shape)
    scale_d = np.zeros(x.shape)
    step = max(1, _CHUNK // max(1, x.size))
    for i in range(0, grid.size, step):
        sig, dsig = parts(grid[i : i + step, None])
        scale_v += pg[i : i + step] @ sig
        scale_d += pg[i : i + step] @ dsig
    scale_v = np.maximum(scale_v * 0.05, 1e-300)
    scale_d = np.maximum(scale_d * 0.05, 1e-300)

    def integrand(y):
        sig, dsig = parts(y)
        p = d.log_density(y)
        return np.concatenate((sig * (p / scale_v), dsig * (p / scale_d)))

    breaks = np.unique(np.clip(-x, y_lo, y_hi))
    if breaks.size > 64:
        breaks = np.quantile(breaks, np.linspace(0, 1, 64))
    breaks = [b for b in breaks if y_lo < b < y_hi]
    out, _ = integrate.quad_vec(
        integrand, y_lo, y_hi, epsabs=1e-14, epsrel=1e-10, norm="max", limit=4000, points=breaks
    )
    k = x.size
    val = out[:k] * scale_v
    dval = -out[k:] * scale_d
    return np.where(comp, val - 1.0, -val), dval


def _psi_x_named(d: NamedDensity, x: np.ndarray, deriv: bool = False):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if d.family == "abs_z_pow_n":
        val, dval = _psi_x_quad(d, x)
    else:
        val, dval = _psi_x_closed(d, x)
    return (val, dval) if deriv else val


def _psi_x(mu: Measure, x, deriv=False):
    if isinstance(mu, NamedDensity):
        return _psi_x_named(mu, x, deriv)
    return _psi_x_atomic(mu, x, deriv)


def psi(mu: Measure, u):
    """``psi_mu(u) = int u t/(1 - u t) dmu(t)`` for ``u < 0`` (scalar or array)."""
    u = np.asarray(u, dtype=float)
    if np.any(u >= 0):
        raise DomainError("psi is evaluated on the negative half-line only")
    out = _psi_x(mu, np.log(-u.ravel())).reshape(u.shape)
    return float(out) if out.ndim == 0 else out


def _check_chi_domain(mu: Measure, w: np.ndarray) -> float:
    m0 = mu.kernel_mass
    if np.any((w <= m0 - 1.0) | (w >= 0.0)) or not np.all(np.isfinite(w)):
        raise DomainError(f"chi/S need w strictly inside ({m0 - 1.0:g}, 0)")
    return m0


def _initial_bracket(mu: Measure, w: np.ndarray, m0: float):
    if isinstance(mu, NamedDensity):
        return np.full(w.shape, X_MIN), np.full(w.shape, X_MAX)
    tpos = mu.nodes[mu.nodes > 0]
    q = -w / (1.0 - m0)  # in (0, 1)
    logit = np.log(q) - np.log1p(-q)
    lo = np.clip(logit - np.log(tpos[-1]), X_MIN, X_MAX)
    hi = np.clip(logit - np.log(tpos[0]), X_MIN, X_MAX)
    # widen by a hair so the root is strictly interior despite rounding
    return lo - 1e-9 * (1 + abs(lo)), hi + 1e-9 * (1 + abs(hi))


def _chi_x(mu: Measure, w: np.ndarray, max_iter: int = 200) -> np.ndarray:
    """Solve psi(-exp(x)) = w for x, elementwise (safeguarded Newton/bisection)."""
    m0 = _check_chi_domain(mu, w)
    lo, hi = _initial_bracket(mu, w, m0)
    x = 0.5 * (lo + hi)
    active = np.ones(w.shape, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        f, df = _psi_x(mu, x[idx], deriv=True)
        r = f - w[idx]
        # psi decreases in x: positive residual means the root lies to the right
        right = r > 0
        lo[idx] = np.where(right, x[idx], lo[idx])
        hi[idx] = np.where(right, hi[idx], x[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = x[idx] - r / df
        inside = np.isfinite(newton) & (newton > lo[idx]) & (newton < hi[idx])
        bisect = 0.5 * (lo[idx] + hi[idx])
        x_new = np.where(inside, newton, bisect)
        width = hi[idx] - lo[idx]
        hit = np.abs(r) <= 1e-15
        x_new = np.where(hit, x[idx], x_new)
        done = (
            hit
            | (np.abs(x_new - x[idx]) <= 2e-16 * np.maximum(1.0, np.abs(x[idx])))
            | (width <= 4e-16 * np.maximum(1.0, np.abs(x[idx])))
        )
        x[idx] = x_new
        active[idx[done]] = False
    return x


def chi(mu: Measure, w):
    """Inverse of :func:`psi` on ``(m0 - 1, 0)``; returns ``u < 0``."""
    w_arr = np.atleast_1d(np.asarray(w, dtype=float)).copy()
    u = -np.exp(_chi_x(mu, w_arr.ravel()).reshape(w_arr.shape))
    return float(u[0]) if np.ndim(w) == 0 else u


def s_transform(mu: Measure, w):
    """``S_mu(w) = (1 + w)/w * chi_mu(w)`` on ``(m0 - 1, 0)``."""
    w_arr = np.asarray(w, dtype=float)
    return (1.0 + w_arr) / w_arr * chi(mu, w)


def s_of_inverse(mu: Measure, w):
    """S-transform of the pushforward of ``mu`` under ``t -> 1/t``.

    Uses ``S_{1/a}(w) = 1 / S_a(-1 - w)``; needs no atom at 0 and both
    ``w`` and ``-1 - w`` in (-1, 0).
    """
    if mu.kernel_mass > 0:
        raise SingularMomentError("inverse of a measure with an atom at 0")
    w_arr = np.asarray(w, dtype=float)
    return 1.0 / s_transform(mu, -1.0 - w_arr)


def _free_poisson_cauchy(lam):
    return 0.5 * (1.0 - np.sqrt(1.0 - 4.0 / lam))


def cauchy_transform(mu: Measure, lam):
    """``G_mu(lam) = int dmu(t)/(lam - t)`` for ``lam`` off the cut [0, inf)."""
    lam = np.asarray(lam, dtype=complex)
    if np.any((lam.imag == 0) & (lam.real >= 0)):
        raise DomainError("Cauchy transform evaluated on the cut [0, inf)")
    if isinstance(mu, AtomicMeasure):
        flat = lam.ravel()
        out = np.empty(flat.shape, dtype=complex)
        step = max(1, _CHUNK // len(mu))
        for i in range(0, flat.size, step):
            out[i : i + step] = (1.0 / (flat[i : i + step, None] - mu.nodes[None, :])) @ mu.weights
        out = out.reshape(lam.shape)
    elif mu.family in ("abs_z_sq", "abs_zn_sq"):
        out = cf.g_abs_zn_sq(lam, mu.n)
    elif mu.family == "abs_x_sq":
        out = _free_poisson_cauchy(lam)
    else:
        flat = lam.ravel()

        def g(t):
            v = 1.0 / (flat - t)
            return np.concatenate((v.real, v.imag))

        res = mu.expect_vec(g)
        out = (res[: flat.size] + 1j * res[flat.size :]).reshape(lam.shape)
    return complex(out) if out.ndim == 0 else out


def stieltjes_density(mu: Measure, x, eps: float):
    """``-(1/pi) Im G_mu(x + i eps)``: the density smoothed by a Cauchy kernel of width eps."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    x = np.asarray(x, dtype=float)
    val = -np.imag(cauchy_transform(mu, x + 1j * eps)) / np.pi
    return float(val) if np.ndim(val) == 0 else val


def r_bernoulli(w, lam: float):
    """R-transform of ``(delta_{-lam} + delta_{lam})/2``: ``(sqrt(1 + 4 lam^2 w^2) - 1)/(2 w)``.

    Evaluated in the cancellation-free form ``2 lam^2 w / (sqrt(1 + 4 lam^2 w^2) + 1)``,
    which also gives the limit 0 at ``w = 0``.
    """
    w = np.asarray(w)
    lam2 = float(lam) ** 2
    out = 2.0 * lam2 * w / (np.sqrt(1.0 + 4.0 * lam2 * w * w) + 1.0)
    return out.item() if out.ndim == 0 else out


_TAGS = {
    "psi": "psi_neg_axis",
    "chi": "chi_interval",
    "s": "s_interval",
    "cauchy": "cauchy_offcut",
}


def evaluate(kind: str, mu: Measure, args) -> list[TransformPoint]:
    """Evaluate one transform at several arguments, tagged with its domain."""
    funcs = {"psi": psi, "chi": chi, "s": s_transform, "cauchy": cauchy_transform}
    if kind not in funcs:
        raise DomainError(f"unknown transform {kind!r}; expected one of {sorted(funcs)}")
    args = np.asarray(args, dtype=complex if kind == "cauchy" else float)
    vals = np.atleast_1d(funcs[kind](mu, args))
    return [TransformPoint(a.item(), v.item(), _TAGS[kind]) for a, v in zip(args, vals)]
