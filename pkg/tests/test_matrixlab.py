import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg as sla

from brownmeasure import matrixlab as L
from brownmeasure import measures as M
from brownmeasure import rdiag as R
from brownmeasure.errors import BoxTooTight, DomainError, NegativeMassError


def cauchy_radial(r):
    return r**2 / (1 + r**2)


# -- sampling -------------------------------------------------------------------


def test_ginibre_deterministic():
    np.testing.assert_array_equal(L.ginibre(8, 5), L.ginibre(8, 5))
    assert not np.array_equal(L.ginibre(8, 5, 0), L.ginibre(8, 5, 1))
    assert L.ginibre(1, 0).shape == (1, 1)


def test_trial_streams_order_independent():
    a = [L.ginibre(4, 9, t) for t in range(3)]
    b = [L.ginibre(4, 9, t) for t in (2, 0, 1)]
    np.testing.assert_array_equal(a[2], b[0])
    np.testing.assert_array_equal(a[0], b[1])


def test_ginibre_normalization():
    vals = [np.sum(np.abs(L.ginibre(512, seed)) ** 2) / 512 for seed in range(20)]
    assert abs(np.mean(vals) - 1.0) < 0.05
    a = L.ginibre(512, 1)
    assert abs(np.var(a.real) * 2 * 512 - 1) < 0.02


def test_random_unitary():
    u = L.random_unitary(16, 3)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(16), atol=1e-12)


# -- spectra --------------------------------------------------------------------


def test_spectra_examples():
    np.testing.assert_allclose(L.singular_values(np.eye(5)).values, np.ones(5))
    d = np.diag([3.0, -1.0, 2j])
    np.testing.assert_allclose(L.singular_values(d).values, [3, 2, 1])
    np.testing.assert_allclose(np.sort_complex(L.eigenvalues(d).values), np.sort_complex([3, -1, 2j]))
    with pytest.raises(DomainError):
        L.EmpiricalSpectrum("singular_values", [1.0, 2.0])


def test_singular_values_unitary_invariance():
    a = L.ginibre(32, 4)
    u, v = L.random_unitary(32, 5), L.random_unitary(32, 6)
    np.testing.assert_allclose(L.singular_values(u @ a @ v).values, L.singular_values(a).values, atol=1e-10)


def test_spherical_argument_uniform():
    ev = L.spherical_ensemble(512, 21).values
    assert L.ks_statistic(np.mod(np.angle(ev), 2 * np.pi), lambda x: x / (2 * np.pi)) <= 0.05


def test_spherical_radial_law():
    ev = L.spherical_ensemble(256, 22).values
    assert L.ks_statistic(np.abs(ev), cauchy_radial) <= 0.05


@pytest.mark.slow
def test_spherical_scalar_ratio():
    r = np.abs([L.spherical_ensemble(1, 3, i).values[0] for i in range(10**5)])
    assert L.ks_statistic(r, cauchy_radial) <= 0.01


def test_spherical_singular_values():
    x, y = L.spherical_matrix(512, 23)
    z = sla.solve(y.T, x.T).T
    sv = L.singular_values(z).values
    assert L.ks_statistic(sv, lambda t: 2 / np.pi * np.arctan(t)) <= 0.05


# -- determinants -----------------------------------------------------------------


def test_fk_det_matrix_examples():
    assert L.fk_det_matrix(np.eye(4)) == pytest.approx(1.0)
    assert L.fk_det_matrix([[2.0]]) == pytest.approx(2.0)
    a = L.ginibre(5, 0)
    a[2] = 0
    assert L.fk_det_matrix(a) == 0.0


def test_fk_det_matrix_multiplicative():
    a, b = L.ginibre(32, 1), L.ginibre(32, 2)
    assert L.fk_det_matrix(a @ b) == pytest.approx(L.fk_det_matrix(a) * L.fk_det_matrix(b), rel=1e-10)


def test_reg_logdet_examples():
    z = np.zeros((3, 3))
    lam = 0.6 - 0.8j
    assert L.reg_logdet(z, lam, 1e-9) == pytest.approx(np.log(abs(lam)), abs=1e-12)
    a = L.ginibre(16, 3)
    vals = [L.reg_logdet(a, lam, e) for e in (1.0, 0.1, 0.01)]
    assert vals[0] > vals[1] > vals[2]
    exact = np.log(L.fk_det_matrix(a - lam * np.eye(16)))
    assert L.reg_logdet(a, lam, 1e-6) == pytest.approx(exact, abs=1e-8)


def test_det_suite_examples():
    rep = L.det_identity_suite(seed=3, n=32, instances=10)
    assert rep.ok and rep.instances == 10
    assert rep.multiplicativity_rel_err < 1e-10 and rep.block_rel_err < 1e-10
    assert rep.abs_slack_min >= 0 and rep.square_slack_min >= 0
    with pytest.raises(DomainError):
        L.det_identity_suite(seed=0, n=1)


def test_abs_inequality_unitary_and_positive():
    u = L.random_unitary(16, 8)
    assert L.fk_det_matrix(np.eye(16) + u) <= 2.0 + 1e-12
    g = L.ginibre(16, 9)
    p = g @ g.conj().T
    lhs = L.fk_det_matrix(np.eye(16) + p)
    rhs = np.exp(np.mean(np.log1p(L.singular_values(p).values)))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_weil_examples():
    u = L.random_unitary(12, 1)
    normal = u @ np.diag(L.ginibre(12, 2).diagonal()) @ u.conj().T
    for p in (0.5, 1.0, 2.0):
        lhs, rhs, ok = L.weil_check(normal, p)
        assert ok and abs(lhs - rhs) < 1e-10
    jordan = np.eye(6, k=1)
    lhs, rhs, ok = L.weil_check(jordan, 1.0)
    assert ok and lhs == pytest.approx(0.0, abs=1e-12) and rhs == pytest.approx(5 / 6)
    for p in (0.5, 1.0, 2.0):
        assert L.weil_check(L.ginibre(64, 4), p)[2]


# -- Brown measure on a grid ------------------------------------------------------


def test_brown_laplacian_scalar():
    a = np.array([[0.3 + 0.2j]])
    # an isolated eigenvalue makes the five-point stencil dip below zero nearby
    g = L.brown_laplacian(a, box=(-1, 1, -1, 1), resolution=128, negative_tolerance=1e-2)
    assert g.total_mass == pytest.approx(1.0, abs=0.01)
    assert g.mass_near(0.3 + 0.2j, radius_cells=2) > 0.95


def test_brown_laplacian_diag_four():
    h = 3.2 / 256
    box = (-1.6 - h / 2, 1.6 - h / 2, -1.6 - h / 2, 1.6 - h / 2)
    a = np.diag([1, -1, 1j, -1j])
    # the eps = h/2 stencil dips to about -5e-4 next to each eigenvalue
    g = L.brown_laplacian(a, box=box, resolution=256, negative_tolerance=1e-2)
    for lam in (1, -1, 1j, -1j):
        assert g.mass_near(lam) == pytest.approx(0.25, abs=0.02)
    assert g.clipped > 0 and g.clipped_mass < 0


def test_brown_laplacian_default_tolerance_raises():
    h = 3.2 / 256
    box = (-1.6 - h / 2, 1.6 - h / 2, -1.6 - h / 2, 1.6 - h / 2)
    with pytest.raises(NegativeMassError):
        L.brown_laplacian(np.diag([1, -1, 1j, -1j]), box=box, resolution=256)


def test_brown_laplacian_box_too_tight():
    with pytest.raises(BoxTooTight):
        L.brown_laplacian(np.diag([0.99, 0.0]), box=(-1, 1, -1, 1), resolution=64)


@pytest.mark.slow
def test_brown_laplacian_ginibre():
    a = L.ginibre(64, 2024)
    g = L.brown_laplacian(a, box=(-1.6, 1.6, -1.6, 1.6), resolution=256)
    assert 0.97 <= g.total_mass <= 1.03
    assert L.tv_to_histogram(g, L.eigenvalues(a).values, block=64) <= 0.05


def test_tv_to_histogram_point_masses():
    grid = L.BrownGrid((0, 4, 0, 4), (4, 4), np.zeros((4, 4)), 0.1, 0.0, 0)
    grid.masses[1, 2] = 1.0
    assert L.tv_to_histogram(grid, np.array([2.5 + 1.5j])) == 0.0
    assert L.tv_to_histogram(grid, np.array([0.5 + 0.5j])) == 1.0


# -- KS -----------------------------------------------------------------------------


def test_ks_examples():
    rng = np.random.default_rng(0)
    assert L.ks_statistic(rng.uniform(size=10**4), lambda x: np.clip(x, 0, 1)) <= 0.02
    assert L.ks_statistic([0.5], lambda x: np.clip(x, 0, 1)) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        L.ks_statistic([], lambda x: x)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=50), st.randoms(use_true_random=False))
def test_ks_order_invariant(xs, rnd):
    ys = list(xs)
    rnd.shuffle(ys)
    cdf = lambda x: 1 / (1 + np.exp(-x))
    assert L.ks_statistic(xs, cdf) == L.ks_statistic(ys, cdf)


# -- S-transform spot checks ---------------------------------------------------------


def test_empirical_s_all_ones():
    spec = L.EmpiricalSpectrum("singular_values", np.ones(7))
    assert L.empirical_s_transform(spec, -0.5) == pytest.approx(1.0)


def test_empirical_s_ginibre():
    spec = L.singular_values(L.ginibre(512, 31))
    assert L.empirical_s_transform(spec, -0.5) == pytest.approx(2.0, abs=0.1)


def test_empirical_s_product():
    a, b = L.ginibre(512, 32), L.ginibre(512, 33)
    prod = L.empirical_s_transform(L.singular_values(a @ b), -0.5)
    sa = L.empirical_s_transform(L.singular_values(a), -0.5)
    sb = L.empirical_s_transform(L.singular_values(b), -0.5)
    assert prod == pytest.approx(sa * sb, abs=0.15)


def test_empirical_h_lambda():
    x, y = L.spherical_matrix(512, 34)
    z = sla.solve(y.T, x.T).T
    sv = L.singular_values(z - np.eye(512)).values
    ctx = R.SubordinationContext(M.NamedDensity("abs_z_pow_n", 1))
    for t in (0.5, 1.0, 2.0):
        emp = np.mean(t / (t * t + sv * sv))
        assert emp == pytest.approx(R.h_lambda(ctx, 1.0, t), abs=0.05)
