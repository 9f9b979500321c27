"""Acceptance criteria shared by ``brownmeasure verify`` and the test-suite.

Each ``criterion_*`` function runs one check at its stated tolerance and
returns a :class:`CriterionResult`. ``tier="full"`` uses the stated matrix
sizes; ``tier="quick"`` caps N at 128 and cuts trial counts so the whole
suite finishes in about a minute. Kolmogorov-Smirnov thresholds in the quick
tier are scaled by ``sqrt(N_stated / N)``, the size dependence of KS
fluctuations.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla
from scipy import integrate

from . import closed_forms as cf
from . import matrixlab as ml
from .measures import NamedDensity, from_atoms, pushforward, quantile_discretize
from .rdiag import (
    SubordinationContext,
    delta_shifted,
    h,
    log_delta_shifted,
    log_potential,
    neg_moment_via_h,
    radial_cdf,
)
from .transforms import chi, psi, s_of_inverse, s_transform

__all__ = ["CriterionResult", "CRITERIA", "run_all", "format_line"]


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float


def _timed(number: int, name: str, fn: Callable[[], tuple[bool, str]]) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    return CriterionResult(number, name, bool(ok), detail, time.perf_counter() - t0)


def format_line(res: CriterionResult) -> str:
    tag = "PASS" if res.passed else "FAIL"
    return f"[{tag}] {res.number:>2}. {res.name}: {res.detail} ({res.seconds:.1f}s)"


# -- 1 ------------------------------------------------------------------------


def criterion_1(tier: str = "full") -> CriterionResult:
    def run():
        t0 = time.perf_counter()
        mu = quantile_discretize(NamedDensity("abs_z_pow_n", 1), 10_000)
        rbm = radial_cdf(SubordinationContext(mu))
        r = np.logspace(-1, 1, 200)
        err = float(np.max(np.abs(rbm.cdf(r) - r * r / (1 + r * r))))
        dt = time.perf_counter() - t0
        return err <= 5e-3 and dt < 10.0, f"sup|F - r^2/(1+r^2)| = {err:.2e} (<= 5e-3), {dt:.1f}s (< 10s)"

    return _timed(1, "radial Brown pipeline", run)


# -- 2 ------------------------------------------------------------------------


def _moment_by_quad(n: int, p: float) -> float:
    # split at t = 1 and fold the tail onto (0, 1] with t = 1/x
    def f(t):
        return t**p * cf.abs_zn_density(t, n)

    head = integrate.quad(f, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    tail = integrate.quad(lambda x: f(1.0 / x) / (x * x), 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    return head + tail


def criterion_2(tier: str = "full") -> CriterionResult:
    def run():
        t0 = time.perf_counter()
        worst = 0.0
        for n in (1, 2, 3):
            for p in (0.1, 0.9 * 2.0 / (n + 1) * 0.5):
                exact = cf.lp_norm_zn(n, p)
                quad = _moment_by_quad(n, p) ** (1.0 / p)
                worst = max(worst, abs(quad / exact - 1.0))
        dt = time.perf_counter() - t0
        return worst <= 1e-6 and dt < 5.0, f"max rel err = {worst:.2e} (<= 1e-6), {dt:.1f}s (< 5s)"

    return _timed(2, "Lp norms of z^n", run)


# -- 3 ------------------------------------------------------------------------


def criterion_3(tier: str = "full") -> CriterionResult:
    def run():
        worst = 0.0
        for n in (1, 2, 3):
            ctx = SubordinationContext(quantile_discretize(NamedDensity("abs_z_pow_n", n), 100_000))
            for s in (0.1, 1.0, 10.0):
                worst = max(worst, abs(h(ctx, s) - cf.h_n(s, n)))
        return worst <= 1e-4, f"max |h - h_n| = {worst:.2e} (<= 1e-4)"

    return _timed(3, "subordination h on discretised |z^n|", run)


# -- 4 ------------------------------------------------------------------------


def criterion_4(tier: str = "full") -> CriterionResult:
    def run():
        val = neg_moment_via_h(SubordinationContext(NamedDensity("abs_z_pow_n", 1)), 0.5)
        err = abs(val - np.sqrt(2.0))
        return err <= 1e-6, f"|I - sqrt 2| = {err:.2e} (<= 1e-6)"

    return _timed(4, "negative moment through h", run)


# -- 5 ------------------------------------------------------------------------


def criterion_5(tier: str = "full") -> CriterionResult:
    def run():
        ctx = SubordinationContext(NamedDensity("abs_z_pow_n", 1))
        lam = np.exp(0.7j)  # |lam| = 1
        ld = log_delta_shifted(ctx, lam)
        e1 = abs(ld - 0.5 * np.log(2.0))
        e2 = abs(ld - log_potential(radial_cdf(ctx), lam))
        pair = SubordinationContext(from_atoms([1.0, 3.0], [0.5, 0.5]))
        e3 = abs(delta_shifted(pair, 10.0) - 10.0)
        ok = e1 <= 1e-3 and e2 <= 1e-3 and e3 <= 1e-12
        return ok, f"|logD - log2/2| = {e1:.1e}, |logD - potential| = {e2:.1e} (<= 1e-3); regime iii err = {e3:.1e} (<= 1e-12)"

    return _timed(5, "determinant cross-check", run)


# -- 6 ------------------------------------------------------------------------

TV_BLOCK = 64  # cells per side of the histogram bins used for the TV distance


def criterion_6(tier: str = "full", seed: int = 0) -> CriterionResult:
    def run():
        t0 = time.perf_counter()
        a = ml.ginibre(64, seed)
        grid = ml.brown_laplacian(a, (-1.6, 1.6, -1.6, 1.6), 256)
        ev = sla.eigvals(a)
        tvs = {b: ml.tv_to_histogram(grid, ev, b) for b in (16, 32, TV_BLOCK)}
        mass = grid.total_mass
        dt = time.perf_counter() - t0
        ok = 0.97 <= mass <= 1.03 and tvs[TV_BLOCK] <= 0.05 and dt < 120.0
        scan = ", ".join(f"{b}:{v:.3f}" for b, v in tvs.items())
        return ok, f"mass = {mass:.5f} in [0.97, 1.03]; TV({TV_BLOCK}-cell bins) = {tvs[TV_BLOCK]:.3f} (<= 0.05) [bins {scan}]; {dt:.0f}s (< 120s)"

    return _timed(6, "matrix Brown recovery", run)


# -- 7 ------------------------------------------------------------------------


def criterion_7(tier: str = "full", seed: int = 7) -> CriterionResult:
    n_eig, n_sv = (256, 512) if tier == "full" else (128, 128)
    trials = 20
    # KS fluctuations scale like N^-1/2; the quick tier rescales the stated thresholds
    scale = np.sqrt(256 / n_eig)

    def run():
        t0 = time.perf_counter()
        ks = []
        for k in range(trials):
            ev = ml.spherical_ensemble(n_eig, seed, k).values
            ks.append(ml.ks_statistic(np.abs(ev), lambda r: r * r / (1 + r * r)))
        x, y = ml.spherical_matrix(n_sv, seed, 10_000)
        z = sla.solve(y.T, x.T).T  # X Y^-1 without forming the inverse
        sv = sla.svdvals(z)
        ks_sv = ml.ks_statistic(sv, lambda t: 2.0 / np.pi * np.arctan(t))
        dt = time.perf_counter() - t0
        tol_r, tol_s = 0.03 * scale, 0.05 * np.sqrt(512 / n_sv)
        ok = np.mean(ks) <= tol_r and ks_sv <= tol_s and dt < 180.0
        return ok, (
            f"mean KS radial (N={n_eig}, {trials} trials) = {np.mean(ks):.4f} (<= {tol_r:.3g}); "
            f"KS singular values (N={n_sv}) = {ks_sv:.4f} (<= {tol_s:.3g}); {dt:.0f}s (< 180s)"
        )

    return _timed(7, "spherical ensemble Monte Carlo", run)


# -- 8 ------------------------------------------------------------------------


def criterion_8(tier: str = "full", seed: int = 8) -> CriterionResult:
    def run():
        rep = ml.det_identity_suite(seed, 32, instances=100 if tier == "full" else 25)
        return rep.ok, (
            f"{rep.instances} instances: mult err {rep.multiplicativity_rel_err:.1e}, "
            f"block err {rep.block_rel_err:.1e} (<= 1e-10); min slacks "
            f"{rep.abs_slack_min:.3f}, {rep.square_slack_min:.3f} (>= 0); violations {len(rep.violations)}"
        )

    return _timed(8, "determinant identity suite", run)


# -- 9 ------------------------------------------------------------------------


def criterion_9(tier: str = "full", seed: int = 9) -> CriterionResult:
    count = 100 if tier == "full" else 25

    def run():
        viol = 0
        for k in range(count):
            a = ml.ginibre(64, seed, k)
            for p in (0.5, 1.0, 2.0):
                viol += not ml.weil_check(a, p)[2]
        worst = 0.0
        for k in range(10):
            u = ml.random_unitary(64, seed + 1, k)
            d = ml.trial_rng(seed + 2, k).standard_normal(64) * np.exp(2j * np.pi * ml.trial_rng(seed + 3, k).random(64))
            nm = (u * d) @ u.conj().T
            for p in (0.5, 1.0, 2.0):
                lhs, rhs, _ = ml.weil_check(nm, p)
                worst = max(worst, abs(lhs - rhs) / rhs)
        return viol == 0 and worst <= 1e-10, f"{viol} violations in {count}x3; normal-matrix rel gap {worst:.1e} (<= 1e-10)"

    return _timed(9, "Weil inequality", run)


# -- 10 -----------------------------------------------------------------------


def criterion_10(tier: str = "full", seed: int = 10) -> CriterionResult:
    def run():
        rng = ml.trial_rng(seed)
        e_inv = 0.0
        e_s4 = 0.0
        for _ in range(100):
            mu = from_atoms(np.exp(rng.normal(0.0, 1.0, 10)), np.full(10, 0.1))
            u = -np.exp(rng.uniform(-5.0, 5.0, 20))
            e_inv = max(e_inv, float(np.max(np.abs(chi(mu, psi(mu, u)) / u - 1.0))))
            w = rng.uniform(-0.99, -0.01, 20)
            direct = s_transform(pushforward(mu, "inverse"), w)
            e_s4 = max(e_s4, float(np.max(np.abs(s_of_inverse(mu, w) / direct - 1.0))))
        ok = e_inv <= 1e-10 and e_s4 <= 1e-8
        return ok, f"chi(psi(u)) rel err {e_inv:.1e} (<= 1e-10); inverse-measure S two-path rel err {e_s4:.1e} (<= 1e-8)"

    return _timed(10, "transform inverses", run)


# -- 11 -----------------------------------------------------------------------


def criterion_11(tier: str = "full", seed: int = 11) -> CriterionResult:
    n = 512 if tier == "full" else 128

    def run():
        w = -0.5

        def s_of(m):
            return float(ml.empirical_s_transform(ml.singular_values(m), w))

        a, b = ml.ginibre(n, seed, 0), ml.ginibre(n, seed, 1)
        d_prod = abs(s_of(a @ b) - s_of(a) * s_of(b))
        x, y = ml.spherical_matrix(n, seed, 2)
        z = sla.solve(y.T, x.T).T
        d_pow = abs(s_of(z @ z) - s_of(z) ** 2)
        d_gin = abs(s_of(a) - 2.0)
        ok = max(d_prod, d_pow, d_gin) <= 0.15
        return ok, (
            f"N={n}: |S(AB) - S(A)S(B)| = {d_prod:.3f}, |S(Z^2) - S(Z)^2| = {d_pow:.3f}, "
            f"|S(A) - 2| = {d_gin:.3f} (each <= 0.15)"
        )

    return _timed(11, "S-transform multiplicativity", run)


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
}


def run_all(tier: str = "full", only=None, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    """Run the criteria in order; ``echo`` receives one formatted line per result."""
    out = []
    for num, fn in CRITERIA.items():
        if only and num not in only:
            continue
        res = fn(tier)
        out.append(res)
        if echo is not None:
            echo(format_line(res))
    return out
