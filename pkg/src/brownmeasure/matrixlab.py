"""Random-matrix models and finite-matrix ground truth.

For an N x N matrix the Brown measure is the eigenvalue counting measure and
the Fuglede-Kadison determinant with normalised trace is ``|det A|^(1/N)``.
This module samples Ginibre and spherical matrices, computes spectra and
determinants, and recovers the Brown measure from the regularised
log-determinant

    f_eps(lam) = (1/2N) sum_i log(sigma_i(A - lam)^2 + eps^2)

through a five-point Laplacian, mass = (1/2 pi) Lap f_eps * cell area.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy import stats

from .errors import BoxTooTight, DomainError, NegativeMassError, SimulationError
from .measures import AtomicMeasure, from_atoms
from .transforms import s_transform

__all__ = [
    "EmpiricalSpectrum",
    "BrownGrid",
    "DetReport",
    "trial_rng",
    "ginibre",
    "random_unitary",
    "spherical_matrix",
    "spherical_ensemble",
    "singular_values",
    "eigenvalues",
    "fk_det_matrix",
    "log_fk_det_matrix",
    "reg_logdet",
    "brown_laplacian",
    "tv_to_histogram",
    "ks_statistic",
    "det_identity_suite",
    "weil_check",
    "empirical_s_transform",
    "squared_singular_measure",
]

MAX_RESAMPLES = 3
NEGATIVE_MASS_TOL = 1e-6


def trial_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """Generator keyed by ``(seed, trial)``: trials are order-independent."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial)]))


def _check_matrix(a) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    return a


def _ginibre_from(rng: np.random.Generator, n: int) -> np.ndarray:
    scale = 1.0 / np.sqrt(2.0 * n)
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * scale


def ginibre(n: int, seed: int, trial: int = 0) -> np.ndarray:
    """N x N complex Ginibre matrix with ``E|a_ij|^2 = 1/N``."""
    if n < 1:
        raise DomainError("N must be >= 1")
    return _ginibre_from(trial_rng(seed, trial), n)


def random_unitary(n: int, seed: int, trial: int = 0) -> np.ndarray:
    """Haar unitary from the QR factorisation of a Ginibre matrix (phases fixed)."""
    q, r = np.linalg.qr(ginibre(n, seed, trial))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


@dataclass(frozen=True, eq=False)
class EmpiricalSpectrum:
    """Eigenvalues (complex) or singular values (sorted descending)."""

    kind: str
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in ("eigenvalues", "singular_values"):
            raise DomainError(f"unknown spectrum kind {self.kind!r}")
        v = np.asarray(self.values)
        if self.kind == "singular_values":
            v = np.asarray(v, dtype=float)
            if np.any(v < 0) or np.any(np.diff(v) > 0):
                raise DomainError("singular values must be nonnegative and sorted descending")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return int(self.values.size)


def singular_values(a) -> EmpiricalSpectrum:
    return EmpiricalSpectrum("singular_values", sla.svdvals(_check_matrix(a)))


def eigenvalues(a) -> EmpiricalSpectrum:
    return EmpiricalSpectrum("eigenvalues", sla.eigvals(_check_matrix(a)))


def spherical_matrix(n: int, seed: int, trial: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Independent Ginibre pair ``(X, Y)`` with Y numerically invertible.

    Y is redrawn from the same stream up to three times if its condition
    number is beyond ``1e14``.
    """
    rng = trial_rng(seed, trial)
    x = _ginibre_from(rng, n)
    for _ in range(MAX_RESAMPLES + 1):
        y = _ginibre_from(rng, n)
        sv = sla.svdvals(y)
        if sv[-1] > 1e-14 * sv[0]:
            return x, y
    raise SimulationError(f"Y singular after {MAX_RESAMPLES} resamples")


def spherical_ensemble(n: int, seed: int, trial: int = 0) -> EmpiricalSpectrum:
    """Eigenvalues of ``X Y^-1`` from the pencil ``X v = lam Y v`` (Y never inverted)."""
    x, y = spherical_matrix(n, seed, trial)
    ev = sla.eigvals(x, y)
    if not np.all(np.isfinite(ev)):
        raise SimulationError("generalised eigenproblem returned infinite eigenvalues")
    return EmpiricalSpectrum("eigenvalues", ev)


def log_fk_det_matrix(a) -> float:
    """``(1/N) log |det A|`` (``-inf`` for singular A)."""
    a = _check_matrix(a)
    sign, logdet = np.linalg.slogdet(a)
    return -np.inf if sign == 0 else float(logdet) / a.shape[0]


def fk_det_matrix(a) -> float:
    """Fuglede-Kadison determinant ``|det A|^(1/N)``."""
    ld = log_fk_det_matrix(a)
    return 0.0 if ld == -np.inf else float(np.exp(ld))


def reg_logdet(a, lam: complex, eps: float) -> float:
    """``(1/2N) sum log(sigma_i(A - lam)^2 + eps^2)``; decreases to ``log Delta(A - lam)`` as eps -> 0."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    a = _check_matrix(a)
    sv = sla.svdvals(a - lam * np.eye(a.shape[0]))
    return float(np.mean(np.log(sv * sv + eps * eps)) / 2.0)


def _reg_logdet_many(a: np.ndarray, lam: np.ndarray, eps: float, chunk: int) -> np.ndarray:
    # (1/2N) log det(B B* + eps^2) = (1/N) sum log diag(chol)
    n = a.shape[0]
    eye = np.eye(n)
    out = np.empty(lam.size)
    for i in range(0, lam.size, chunk):
        b = a[None] - lam[i : i + chunk, None, None] * eye
        m = b @ np.conj(np.swapaxes(b, 1, 2)) + (eps * eps) * eye
        c = np.linalg.cholesky(m)
        out[i : i + chunk] = np.log(np.diagonal(c, axis1=1, axis2=2).real).sum(axis=1) / n
    return out


@dataclass(frozen=True, eq=False)
class BrownGrid:
    """Cell masses of a regularised Brown measure on a rectangular grid.

    ``masses[j, i]`` belongs to the cell with centre ``(xs[i], ys[j])``.
    """

    box: tuple[float, float, float, float]
    resolution: tuple[int, int]
    masses: np.ndarray = field(repr=False)
    eps: float
    min_mass: float
    clipped: int
    clipped_mass: float = 0.0  # total (negative) mass removed by clipping

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @property
    def spacing(self) -> tuple[float, float]:
        x0, x1, y0, y1 = self.box
        nx, ny = self.resolution
        return (x1 - x0) / nx, (y1 - y0) / ny

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        x0, _, y0, _ = self.box
        hx, hy = self.spacing
        nx, ny = self.resolution
        return x0 + (np.arange(nx) + 0.5) * hx, y0 + (np.arange(ny) + 0.5) * hy

    def mass_near(self, z: complex, radius_cells: int = 1) -> float:
        """Mass in the (2k+1) x (2k+1) block of cells around the cell containing z."""
        x0, _, y0, _ = self.box
        hx, hy = self.spacing
        i = int(np.floor((z.real - x0) / hx))
        j = int(np.floor((z.imag - y0) / hy))
        k = radius_cells
        return float(self.masses[max(j - k, 0) : j + k + 1, max(i - k, 0) : i + k + 1].sum())


def _auto_box(ev: np.ndarray, pad: float) -> tuple[float, float, float, float]:
    r = max(float(np.max(np.abs(ev.real))), float(np.max(np.abs(ev.imag))), 1e-3)
    half = r * (1.0 + pad) + pad
    return (-half, half, -half, half)


def brown_laplacian(a, box=None, resolution=256, eps: float | None = None,
                    negative_tolerance: float = NEGATIVE_MASS_TOL) -> BrownGrid:
    """Brown measure of a matrix by the five-point Laplacian of ``f_eps``.

    Parameters
    ----------
    a : (N, N) array
    box : (x0, x1, y0, y1), optional
        Grid rectangle; by default a square around the eigenvalues with a
        25% margin.
    resolution : int or (nx, ny)
    eps : float, optional
        Regularisation; defaults to half the (x-) grid spacing.
    negative_tolerance : float
        Cell masses in ``[-negative_tolerance, 0)`` are clipped to 0 and
        counted in ``BrownGrid.clipped``.

    Raises
    ------
    BoxTooTight
        If an eigenvalue is within two cells of the box edge.
    NegativeMassError
        If a cell mass is below ``-negative_tolerance``.
    """
    a = _check_matrix(a).astype(complex)
    n = a.shape[0]
    ev = sla.eigvals(a)
    if box is None:
        box = _auto_box(ev, 0.25)
    x0, x1, y0, y1 = (float(v) for v in box)
    if not (x1 > x0 and y1 > y0):
        raise DomainError("box must have x1 > x0 and y1 > y0")
    nx, ny = (resolution, resolution) if np.ndim(resolution) == 0 else resolution
    nx, ny = int(nx), int(ny)
    hx, hy = (x1 - x0) / nx, (y1 - y0) / ny
    if eps is None:
        eps = hx / 2.0
    gap = np.minimum.reduce([(ev.real - x0) / hx, (x1 - ev.real) / hx, (ev.imag - y0) / hy, (y1 - ev.imag) / hy])
    if np.any(gap < 2.0):
        raise BoxTooTight(f"eigenvalue within {gap.min():.2f} cells of the box edge")
    # cell centres plus a one-cell halo for the stencil
    xs = x0 + (np.arange(-1, nx + 1) + 0.5) * hx
    ys = y0 + (np.arange(-1, ny + 1) + 0.5) * hy
    lam = (xs[None, :] + 1j * ys[:, None]).ravel()
    chunk = max(1, 2**25 // (16 * n * n))
    f = _reg_logdet_many(a, lam, eps, chunk).reshape(ny + 2, nx + 2)
    lap = (f[1:-1, 2:] + f[1:-1, :-2] - 2.0 * f[1:-1, 1:-1]) / hx**2
    lap += (f[2:, 1:-1] + f[:-2, 1:-1] - 2.0 * f[1:-1, 1:-1]) / hy**2
    masses = lap * (hx * hy) / (2.0 * np.pi)
    min_mass = float(masses.min())
    if min_mass < -negative_tolerance:
        raise NegativeMassError(
            f"cell mass {min_mass:.3g} below -{negative_tolerance:g}; refine the grid or raise eps"
        )
    neg = masses < 0
    clipped_mass = float(masses[neg].sum())
    masses = np.where(neg, 0.0, masses)
    return BrownGrid((x0, x1, y0, y1), (nx, ny), masses, float(eps), min_mass, int(neg.sum()), clipped_mass)


def tv_to_histogram(grid: BrownGrid, ev, block: int = 1) -> float:
    """Total variation between grid masses and the eigenvalue histogram.

    Both are aggregated over ``block x block`` super-cells first.
    """
    ev = np.asarray(ev)
    x0, x1, y0, y1 = grid.box
    nx, ny = grid.resolution
    bx = np.arange(0, nx, block)
    by = np.arange(0, ny, block)
    m = np.add.reduceat(np.add.reduceat(grid.masses, by, axis=0), bx, axis=1)
    ex = np.append(np.linspace(x0, x1, nx + 1)[bx], x1)
    ey = np.append(np.linspace(y0, y1, ny + 1)[by], y1)
    hist, _, _ = np.histogram2d(ev.imag, ev.real, bins=[ey, ex])
    return 0.5 * float(np.abs(m - hist / ev.size).sum())


def ks_statistic(samples, cdf) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF of ``samples`` and ``cdf``."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise DomainError("ks_statistic needs at least one sample")
    return float(stats.kstest(samples, cdf).statistic)


@dataclass
class DetReport:
    """Outcome of :func:`det_identity_suite`; ``violations`` lists failed checks."""

    multiplicativity_rel_err: float = 0.0
    block_rel_err: float = 0.0
    abs_slack_min: float = np.inf  # min of Delta(1+|S|) - Delta(1+S)
    square_slack_min: float = np.inf  # min of Delta(1+|S|^2) - Delta(1+|S^2|)
    instances: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _log_delta_one_plus_abs(sv: np.ndarray) -> float:
    return float(np.mean(np.log1p(sv)))


def det_identity_suite(seed: int, n: int, instances: int = 1, rel_tol: float = 1e-10) -> DetReport:
    """Check determinant identities and inequalities on random N x N matrices.

    Per instance (Ginibre S and T):

    * ``Delta(ST) = Delta(S) Delta(T)``;
    * ``Delta(1 + S) <= Delta(1 + |S|)``;
    * ``Delta(1 + |S^2|) <= Delta(1 + |S|^2)``;
    * a block upper-triangular ``[[A, B], [0, C]]`` with the projection on the
      first ``N/2`` coordinates satisfies
      ``Delta(T) = Delta(A)^(1/2) Delta(C)^(1/2)`` (determinants normalised in
      each corner).
    """
    if n < 2:
        raise DomainError("det_identity_suite needs N >= 2")
    rep = DetReport()
    eye = np.eye(n)
    k = n // 2
    for i in range(instances):
        rng = trial_rng(seed, i)
        s = _ginibre_from(rng, n)
        t = _ginibre_from(rng, n)
        lhs = log_fk_det_matrix(s @ t)
        rhs = log_fk_det_matrix(s) + log_fk_det_matrix(t)
        err = abs(np.expm1(lhs - rhs))
        rep.multiplicativity_rel_err = max(rep.multiplicativity_rel_err, err)
        if err > rel_tol:
            rep.violations.append((i, "multiplicativity", err))

        sv = sla.svdvals(s)
        slack = np.exp(_log_delta_one_plus_abs(sv)) - fk_det_matrix(eye + s)
        rep.abs_slack_min = min(rep.abs_slack_min, slack)
        if slack < -rel_tol:
            rep.violations.append((i, "abs", slack))

        sv2 = sla.svdvals(s @ s)
        slack2 = np.exp(np.mean(np.log1p(sv * sv))) - np.exp(_log_delta_one_plus_abs(sv2))
        rep.square_slack_min = min(rep.square_slack_min, slack2)
        if slack2 < -rel_tol:
            rep.violations.append((i, "square", slack2))

        blk = _ginibre_from(rng, n)
        blk[k:, :k] = 0.0
        a_part, c_part = blk[:k, :k], blk[k:, k:]
        tau = k / n
        lhs = log_fk_det_matrix(blk)
        rhs = tau * log_fk_det_matrix(a_part) + (1.0 - tau) * log_fk_det_matrix(c_part)
        err = abs(np.expm1(lhs - rhs))
        rep.block_rel_err = max(rep.block_rel_err, err)
        if err > rel_tol:
            rep.violations.append((i, "block", err))
        rep.instances += 1
    return rep


def weil_check(a, p: float, tol: float = 1e-9) -> tuple[float, float, bool]:
    """``((1/N) sum |lam_i|^p, (1/N) sum sigma_i^p, lhs <= rhs + tol)``."""
    if p <= 0:
        raise DomainError("p must be positive")
    a = _check_matrix(a)
    lhs = float(np.mean(np.abs(sla.eigvals(a)) ** p))
    rhs = float(np.mean(sla.svdvals(a) ** p))
    return lhs, rhs, lhs <= rhs + tol


def squared_singular_measure(spec: EmpiricalSpectrum) -> AtomicMeasure:
    """Equal-weight atomic measure on the squared singular values."""
    if spec.kind != "singular_values":
        raise DomainError("need a singular-value spectrum")
    v = spec.values
    return from_atoms(v * v, np.full(v.size, 1.0 / v.size))


def empirical_s_transform(spec: EmpiricalSpectrum, w):
    """S-transform of the empirical law of the squared singular values."""
    return s_transform(squared_singular_measure(spec), w)
