"""Probability measures on [0, inf): finite atomic measures and named densities.

Two representations are used everywhere else in the package:

* :class:`AtomicMeasure` -- finitely many weighted atoms (empirical spectra,
  discretised densities, toy examples);
* :class:`NamedDensity` -- one of a few closed-form families with exact
  density, CDF and quantile, integrated by adaptive quadrature after a change
  of variables to a bounded angle.

Functions at module level accept either representation where that makes
sense (moments, determinants, lambda bounds).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np
from scipy import integrate

from . import closed_forms as cf
from .errors import DomainError, NormalizationError, SingularMomentError

__all__ = [
    "AtomicMeasure",
    "NamedDensity",
    "SymmetricMeasure",
    "LambdaBounds",
    "Measure",
    "from_atoms",
    "quantile_discretize",
    "moment",
    "fk_determinant",
    "log_fk_determinant",
    "log_plus_integral",
    "pushforward",
    "symmetrize",
    "lp_norm",
    "lambda_bounds",
    "measure_from_json",
    "measure_to_json",
    "parse_measure",
]

MERGE_RTOL = 1e-14
NORMALIZATION_TOL = 1e-6
QUAD_EPSREL = 1e-10


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """``sum_i w_i delta_{t_i}`` with strictly increasing nodes ``t_i >= 0``.

    Build instances with :func:`from_atoms`; the constructor only checks the
    invariants.
    """

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size == 0:
            raise DomainError("nodes and weights must be equal-length, non-empty 1-d arrays")
        if np.any(np.diff(nodes) <= 0):
            raise DomainError("nodes must be strictly increasing")
        if nodes[0] < 0 or np.any(weights <= 0):
            raise DomainError("nodes must be >= 0 and weights > 0")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise NormalizationError(f"weights sum to {weights.sum()!r}, not 1")
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.nodes.size

    def __repr__(self):
        if len(self) <= 6:
            atoms = ", ".join(f"{t:g}:{w:g}" for t, w in zip(self.nodes, self.weights))
            return f"AtomicMeasure({{{atoms}}})"
        return f"AtomicMeasure(<{len(self)} atoms on [{self.nodes[0]:g}, {self.nodes[-1]:g}]>)"

    @property
    def kernel_mass(self) -> float:
        """Mass of the atom at 0 (0.0 if there is none)."""
        return float(self.weights[0]) if self.nodes[0] == 0.0 else 0.0

    @property
    def is_dirac(self) -> bool:
        return len(self) == 1

    def cdf(self, x):
        """``mu([0, x])``."""
        cw = np.concatenate(([0.0], np.cumsum(self.weights)))
        return cw[np.searchsorted(self.nodes, x, side="right")]

    def cdf_left(self, x):
        """``mu([0, x))``."""
        cw = np.concatenate(([0.0], np.cumsum(self.weights)))
        return cw[np.searchsorted(self.nodes, x, side="left")]

    def expect(self, g: Callable) -> float:
        return float(np.dot(self.weights, g(self.nodes)))

    def atoms(self):
        return list(zip(self.nodes.tolist(), self.weights.tolist()))


def from_atoms(nodes, weights) -> AtomicMeasure:
    """Build an :class:`AtomicMeasure`, sorting and merging duplicate nodes.

    Nodes closer than ``1e-14`` relative are merged by adding their weights.
    Zero weights are dropped. The weights must already sum to 1 within 1e-6;
    only the remaining rounding is normalised away.

    Raises
    ------
    DomainError
        On a negative node or weight, or malformed input.
    NormalizationError
        If the weights sum to something other than 1.
    """
    nodes = np.asarray(nodes, dtype=float).ravel()
    weights = np.asarray(weights, dtype=float).ravel()
    if nodes.size == 0 or nodes.shape != weights.shape:
        raise DomainError("from_atoms needs non-empty node and weight lists of equal length")
    if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(weights))):
        raise DomainError("nodes and weights must be finite")
    if np.any(nodes < 0):
        raise DomainError("negative node")
    if np.any(weights < 0):
        raise DomainError("negative weight")
    total = weights.sum()
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise NormalizationError(f"weights sum to {total!r}; refusing to renormalise")

    order = np.argsort(nodes, kind="stable")
    nodes, weights = nodes[order], weights[order]
    keep = weights > 0
    nodes, weights = nodes[keep], weights[keep]
    # start a new group wherever the gap exceeds the relative merge tolerance
    gap = np.diff(nodes) > MERGE_RTOL * np.maximum(nodes[1:], nodes[:-1])
    starts = np.concatenate(([0], np.flatnonzero(gap) + 1))
    merged_w = np.add.reduceat(weights, starts)
    merged_t = nodes[starts]
    return AtomicMeasure(merged_t, merged_w / merged_w.sum())


FAMILIES = ("abs_z_pow_n", "abs_x_sq", "abs_z_sq", "abs_zn_sq")


@dataclass(frozen=True)
class NamedDensity:
    """Closed-form absolutely continuous measure on (0, inf).

    Families
    --------
    ``abs_z_pow_n``
        distribution of |z^n| for z = x y^{-1};
    ``abs_zn_sq``
        distribution of |z^n|^2;
    ``abs_z_sq``
        distribution of |z|^2 (``abs_zn_sq`` with n = 1);
    ``abs_x_sq``
        distribution of |x|^2 for circular x (free Poisson law of rate 1,
        density ``sqrt((4-t)/t) / (2 pi)`` on (0, 4)); ``n`` is ignored.
    """

    family: str
    n: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")
        if self.family in ("abs_z_sq", "abs_x_sq"):
            object.__setattr__(self, "n", 1)

    kernel_mass = 0.0
    is_dirac = False

    @property
    def _zn_exponent(self) -> float:
        # t = v**e where v = t**(2/(n+1)) is the Cauchy-like variable
        if self.family == "abs_z_pow_n":
            return (self.n + 1) / 2.0
        return float(self.n + 1)

    def density(self, t):
        t = np.asarray(t, dtype=float)
        if self.family == "abs_x_sq":
            inside = (t > 0) & (t < 4)
            tt = np.where(inside, t, 1.0)
            return np.where(inside, np.sqrt((4.0 - tt) / tt) / (2.0 * np.pi), 0.0)
        pos = t > 0
        tt = np.where(pos, t, 1.0)
        if self.family == "abs_z_pow_n":
            val = cf.abs_zn_density(tt, self.n)
        else:
            val = cf.abs_zn_sq_density(tt, self.n)
        return np.where(pos, val, 0.0)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.family == "abs_x_sq":
            phi = np.arcsin(np.sqrt(np.clip(t, 0.0, 4.0) / 4.0))
            return (2.0 * phi + np.sin(2.0 * phi)) / np.pi
        if self.family == "abs_z_pow_n":
            return cf.abs_zn_cdf(t, self.n)
        return cf.abs_zn_sq_cdf(t, self.n)

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        if self.family == "abs_x_sq":
            return 4.0 * np.sin(_free_poisson_angle(q)) ** 2
        if self.family == "abs_z_pow_n":
            return cf.abs_zn_quantile(q, self.n)
        return cf.abs_zn_sq_quantile(q, self.n)

    def moment_range(self) -> tuple[float, float]:
        """Open interval of exponents k for which ``int t^k dmu`` is finite."""
        if self.family == "abs_x_sq":
            return (-0.5, np.inf)
        a = 1.0 / self._zn_exponent
        return (-a, a)

    @property
    def log_support_max(self) -> float:
        """Right end of the support of ``log t``."""
        return float(np.log(4.0)) if self.family == "abs_x_sq" else np.inf

    def expect_log(self, g: Callable, split_at: float = 0.0, epsrel: float = QUAD_EPSREL) -> float:
        """``int g(y) p(y) dy`` over ``y = log t``, split at ``y = split_at``.

        Suited to integrands with a transition of O(1) width in log t at an
        arbitrary location (pass that location as ``split_at``).
        """
        y_max = self.log_support_max
        y_med = float(np.log(self.quantile(0.5)))
        cuts = sorted({min(split_at, y_max), y_med})
        edges = [-np.inf, *cuts, y_max]
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi > lo:
                val, _ = integrate.quad(
                    lambda y: g(y) * self.log_density(y), lo, hi, epsabs=0.0, epsrel=epsrel, limit=500
                )
                total += val
        return total

    def log_density(self, y):
        """Density of ``log t`` at ``y``; smooth with O(1)-wide features in y."""
        y = np.asarray(y, dtype=float)
        if self.family == "abs_x_sq":
            inside = y < np.log(4.0)
            t = np.exp(np.where(inside, y, 0.0))
            return np.where(inside, np.sqrt(t * (4.0 - t)) / (2.0 * np.pi), 0.0)
        e = self._zn_exponent
        c = np.pi / (self.n + 1)
        with np.errstate(over="ignore"):
            return (self.n + 1) / (np.pi * e) * np.sin(c) / (2.0 * np.cosh(y / e) + 2.0 * np.cos(c))

    # -- quadrature ---------------------------------------------------------

    def _angle_map(self, theta):
        """Return (t(theta), weight(theta)) on theta in (0, pi/2)."""
        if self.family == "abs_x_sq":
            return 4.0 * np.sin(theta) ** 2, (4.0 / np.pi) * np.cos(theta) ** 2
        c = np.pi / (self.n + 1)
        with np.errstate(over="ignore"):
            t = np.tan(theta) ** self._zn_exponent
        w = (self.n + 1) / np.pi * np.sin(c) / (1.0 + np.sin(2.0 * theta) * np.cos(c))
        return t, w

    def _angle_of(self, t: float) -> float:
        if self.family == "abs_x_sq":
            return float(np.arcsin(np.sqrt(min(t, 4.0) / 4.0)))
        return float(np.arctan(t ** (1.0 / self._zn_exponent)))

    def expect(self, g: Callable, epsrel: float = QUAD_EPSREL, split_at: float | None = None) -> float:
        """``int g(t) dmu(t)`` by adaptive Gauss-Kronrod quadrature in the angle variable.

        ``split_at`` cuts the range at that value of t; use it where ``g``
        changes sign so that each piece can meet a relative tolerance.
        """

        def integrand(theta):
            t, w = self._angle_map(theta)
            return g(t) * w

        edges = [0.0, np.pi / 2]
        if split_at is not None:
            edges.insert(1, self._angle_of(split_at))
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(integrand, lo, hi, epsabs=1e-14, epsrel=epsrel, limit=500)
            total += val
        return total

    def expect_vec(self, g: Callable, epsrel: float = QUAD_EPSREL) -> np.ndarray:
        """Vector-valued version of :meth:`expect` (``g`` returns an array)."""

        def integrand(theta):
            t, w = self._angle_map(theta)
            return g(t) * w

        val, _ = integrate.quad_vec(
            integrand, 0.0, np.pi / 2, epsabs=1e-14, epsrel=epsrel, norm="max", limit=2000
        )
        return val

    def squared(self) -> "NamedDensity":
        """The pushforward under t -> t^2 (only for the |z^n| family)."""
        if self.family == "abs_z_pow_n":
            return NamedDensity("abs_zn_sq", self.n)
        raise DomainError(f"no named squared form for family {self.family!r}")


def _free_poisson_angle(q):
    # solve 2 phi + sin(2 phi) = pi q on [0, pi/2]; the left side is increasing
    q = np.asarray(q, dtype=float)
    if np.any((q < 0) | (q > 1)):
        raise DomainError("quantile level must lie in [0, 1]")
    lo = np.zeros_like(q)
    hi = np.full_like(q, np.pi / 2)
    target = np.pi * q
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        below = 2.0 * mid + np.sin(2.0 * mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


Measure = Union[AtomicMeasure, NamedDensity]


@dataclass(frozen=True)
class SymmetricMeasure:
    """Symmetrisation ``(mu(B) + mu(-B)) / 2`` of a measure on [0, inf)."""

    base: AtomicMeasure

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        neg = 0.5 * (1.0 - self.base.cdf_left(-x))
        pos = 0.5 + 0.5 * self.base.cdf(x)
        return np.where(x < 0, neg, pos)

    def cdf_left(self, x):
        """``mu~((-inf, x))``."""
        x = np.asarray(x, dtype=float)
        neg = 0.5 * (1.0 - self.base.cdf(-x))
        pos = 0.5 + 0.5 * self.base.cdf_left(x)
        return np.where(x <= 0, neg, pos)

    def atoms(self):
        """Signed atoms ``[(x, w), ...]`` in increasing order."""
        out = {}
        for t, w in self.base.atoms():
            out[-t] = out.get(-t, 0.0) + 0.5 * w
            out[t] = out.get(t, 0.0) + 0.5 * w
        return sorted(out.items())

    @property
    def total_mass(self) -> float:
        return float(sum(w for _, w in self.atoms()))


class LambdaBounds(NamedTuple):
    lambda1: float
    lambda2: float
    dirac: bool


def quantile_discretize(d: NamedDensity, m: int) -> AtomicMeasure:
    """``m`` equal-weight atoms at the quantiles ``(k - 1/2)/m``, k = 1..m."""
    m = int(m)
    if m < 1:
        raise DomainError("m must be >= 1")
    q = (np.arange(1, m + 1) - 0.5) / m
    return from_atoms(d.quantile(q), np.full(m, 1.0 / m))


def moment(mu: Measure, k: float) -> float:
    """``int t^k dmu``; ``inf`` for a named density outside its moment range.

    Raises
    ------
    SingularMomentError
        If ``k < 0`` and ``mu`` has an atom at 0.
    """
    if isinstance(mu, NamedDensity):
        lo, hi = mu.moment_range()
        if not lo < k < hi:
            return np.inf
        return mu.expect(lambda t: t**k)
    if k < 0 and mu.kernel_mass > 0:
        raise SingularMomentError("negative moment of a measure with an atom at 0")
    if k == 0:
        return 1.0
    return float(np.dot(mu.weights, mu.nodes**k))


def log_fk_determinant(mu: Measure) -> float:
    """``int log t dmu``; ``-inf`` when there is an atom at 0."""
    if isinstance(mu, NamedDensity):
        return mu.expect(np.log, split_at=1.0)
    if mu.kernel_mass > 0:
        return -np.inf
    return float(np.dot(mu.weights, np.log(mu.nodes)))


def fk_determinant(mu: Measure) -> float:
    """Fuglede-Kadison determinant ``exp(int log t dmu)``; exactly 0 with a kernel atom."""
    ld = log_fk_determinant(mu)
    return 0.0 if ld == -np.inf else float(np.exp(ld))


def log_plus_integral(mu: Measure) -> float:
    """``int log+(t) dmu``; finiteness is the membership criterion for the log-integrable class."""
    if isinstance(mu, NamedDensity):
        return mu.expect(lambda t: np.log(np.maximum(t, 1.0)))
    return float(np.dot(mu.weights, np.log(np.maximum(mu.nodes, 1.0))))


def lp_norm(mu: Measure, p: float) -> float:
    """``(int t^p dmu)^(1/p)`` for p > 0."""
    if p <= 0:
        raise DomainError("lp_norm needs p > 0")
    return moment(mu, p) ** (1.0 / p)


def lambda_bounds(mu: Measure) -> LambdaBounds:
    """Inner and outer radii ``(int u^-2)^(-1/2)`` and ``(int u^2)^(1/2)``.

    The inner radius is 0 when ``int u^-2`` diverges (in particular when there
    is an atom at 0). A Dirac measure gives equal radii and ``dirac=True``.
    """
    if isinstance(mu, NamedDensity):
        inv2 = moment(mu, -2.0)
        sq = moment(mu, 2.0)
        dirac = False
    else:
        dirac = mu.is_dirac
        inv2 = np.inf if mu.kernel_mass > 0 else moment(mu, -2.0)
        sq = moment(mu, 2.0)
    lam1 = 0.0 if np.isinf(inv2) else inv2**-0.5
    return LambdaBounds(float(lam1), float(np.sqrt(sq)), dirac)


def pushforward(mu: AtomicMeasure, kind: str, param: float | None = None) -> AtomicMeasure:
    """Image of ``mu`` under ``t -> t^2``, ``t^m``, ``1/t`` or ``r t``.

    ``kind`` is one of ``"square"``, ``"power"`` (``param = m``),
    ``"inverse"``, ``"scale"`` (``param = r > 0``).
    """
    t = mu.nodes
    if kind == "square":
        new = t * t
    elif kind == "power":
        if param is None or param <= 0:
            raise DomainError("power pushforward needs a positive exponent")
        new = t**param
    elif kind == "inverse":
        if mu.kernel_mass > 0:
            raise SingularMomentError("cannot invert a measure with an atom at 0")
        new = 1.0 / t
    elif kind == "scale":
        if param is None or param <= 0:
            raise DomainError("scale pushforward needs r > 0")
        new = param * t
    else:
        raise DomainError(f"unknown pushforward {kind!r}")
    return from_atoms(new, mu.weights)


def symmetrize(mu: AtomicMeasure) -> SymmetricMeasure:
    return SymmetricMeasure(mu)


# -- serialisation --------------------------------------------------------------


def measure_to_json(mu: Measure) -> dict:
    if isinstance(mu, NamedDensity):
        return {"type": "named", "family": mu.family, "n": mu.n}
    return {"type": "atoms", "atoms": [[float(t), float(w)] for t, w in mu.atoms()]}


def measure_from_json(obj: dict | str) -> Measure:
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("type")
    if kind == "named":
        return NamedDensity(obj["family"], int(obj.get("n", 1)))
    if kind == "atoms":
        atoms = np.asarray(obj["atoms"], dtype=float).reshape(-1, 2)
        return from_atoms(atoms[:, 0], atoms[:, 1])
    raise DomainError(f"unknown measure type {kind!r}")


def parse_measure(spec: str) -> Measure:
    """Parse ``named:<family>[:<n>]``, an inline JSON object, or a JSON file path."""
    if spec.startswith("named:"):
        parts = spec.split(":")
        n = int(parts[2]) if len(parts) > 2 else 1
        return NamedDensity(parts[1], n)
    if spec.lstrip().startswith("{"):
        return measure_from_json(spec)
    with open(spec) as fh:
        return measure_from_json(json.load(fh))
