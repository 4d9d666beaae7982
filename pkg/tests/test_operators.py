import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from prodhardy.grid import Axis, ScaleGrid
from prodhardy.operators import (AxisOperator, Potential, SpectralWindow, build_laplacian,
                                 build_schrodinger, feynman_kac_gap, fit_gaussian_bound,
                                 heat_derivative_kernel, heat_kernel, laplacian_matrices,
                                 on_cone_max, propagation_leakage, quadratic_sum,
                                 spectral_apply, wave_kernel)

from conftest import unit_axis


def test_three_cell_dirichlet_matrix():
    D, L0 = laplacian_matrices(3, 1.0)
    assert D.shape == (4, 3)
    np.testing.assert_array_equal(L0, [[2, -1, 0], [-1, 2, -1], [0, -1, 2]])
    lam = np.linalg.eigvalsh(L0)
    np.testing.assert_allclose(lam, [2 - np.sqrt(2), 2, 2 + np.sqrt(2)], atol=1e-14)


def test_dirichlet_eigenvalues_closed_form():
    L = build_laplacian(Axis(16, 0.25))
    k = np.arange(1, 17)
    want = (2 - 2 * np.cos(k * np.pi / 17)) / 0.25 ** 2
    np.testing.assert_allclose(L.eigenvalues, want, rtol=1e-12)
    assert L.eigenvalues[0] > 0 and L.lam_max <= 4 / 0.25 ** 2
    assert not L.has_zero_mode


@pytest.mark.parametrize("n", [4, 8, 32])
def test_periodic_zero_mode(n):
    L = build_laplacian(unit_axis(n, "periodic"))
    assert L.has_zero_mode
    assert L.eigenvalues[0] == pytest.approx(0.0, abs=1e-9)
    u = L.eigenvectors[:, 0]
    np.testing.assert_allclose(np.abs(u), 1 / np.sqrt(n), rtol=1e-10)


def test_operator_rejects_small_grid():
    with pytest.raises(ValueError, match="grid too small"):
        build_laplacian(Axis(2))


def test_summation_by_parts():
    L = build_schrodinger(unit_axis(32), Potential.random_bounded(unit_axis(32),
                                                                   np.random.default_rng(0), 5))
    g = np.random.default_rng(1).normal(size=32)
    D = L.gradient
    lhs = g @ L.matrix @ g
    rhs = np.sum((D @ g) ** 2) + np.sum(L.potential * g * g)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_schrodinger_zero_potential_equals_laplacian():
    a = unit_axis(16)
    np.testing.assert_array_equal(build_schrodinger(a, Potential.zero(a)).matrix,
                                  build_laplacian(a).matrix)


def test_schrodinger_constant_shift():
    a = unit_axis(32)
    L0, L = build_laplacian(a), build_schrodinger(a, Potential.constant(a, 3.5))
    np.testing.assert_allclose(L.eigenvalues, L0.eigenvalues + 3.5, rtol=1e-12)


def test_schrodinger_rejects_negative_potential():
    with pytest.raises(ValueError, match="potential must be non-negative"):
        build_schrodinger(unit_axis(8), -np.ones(8))
    with pytest.raises(ValueError):
        build_schrodinger(unit_axis(8), np.ones(4))


def test_harmonic_ground_state():
    a = Axis(64, 8 / 64, origin=-4.0)
    L = build_schrodinger(a, a.centers ** 2)
    assert L.eigenvalues[0] == pytest.approx(1.0, rel=0.1)
    fine = Axis(512, 8 / 512, origin=-4.0)
    ref = build_schrodinger(fine, fine.centers ** 2).eigenvalues[0]
    assert ref == pytest.approx(1.0, rel=1e-3)


def test_symbol_reports_bad_eigenvalue():
    L = build_laplacian(unit_axis(8, "periodic"))
    with np.errstate(divide="ignore"), pytest.raises(ValueError, match="not finite at eigenvalue"):
        spectral_apply(lambda lam: 1 / lam, L, np.ones(8))


def test_spectral_apply_examples(rng):
    L = build_schrodinger(unit_axis(16), rng.uniform(0, 10, 16))
    g = rng.normal(size=16)
    np.testing.assert_allclose(spectral_apply(lambda lam: np.ones_like(lam), L, g), g,
                               atol=1e-13)
    np.testing.assert_allclose(spectral_apply(lambda lam: np.exp(-0 * lam), L, g), g,
                               atol=1e-13)
    u = L.eigenvectors[:, 5]
    np.testing.assert_allclose(spectral_apply(lambda lam: lam, L, u), L.eigenvalues[5] * u,
                               atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.integers(0, 2 ** 31))
def test_functional_calculus_homomorphism(a, b, seed):
    rng = np.random.default_rng(seed)
    L = build_schrodinger(unit_axis(16), rng.uniform(0, 5, 16))
    g = rng.normal(size=16)
    s = 1 / L.lam_max

    def F(lam):
        return np.cos(a * np.sqrt(lam) * 0.1) + s * lam

    def G(lam):
        return np.exp(-b * s * lam)

    lhs = spectral_apply(lambda lam: F(lam) * G(lam), L, g)
    rhs = spectral_apply(F, L, spectral_apply(G, L, g))
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_spectral_norm_bound(seed):
    rng = np.random.default_rng(seed)
    L = build_laplacian(unit_axis(16))
    vals = rng.normal(size=16)
    M = L.function(lambda lam: np.interp(lam, L.eigenvalues, vals))
    assert np.linalg.norm(M, 2) <= np.abs(vals).max() * (1 + 1e-12)


# ------------------------------------------------------------------ heat kernel

def test_heat_kernel_requires_positive_time():
    with pytest.raises(ValueError):
        heat_kernel(build_laplacian(unit_axis(8)), 0.0)


def test_heat_semigroup_and_symmetry():
    L = build_laplacian(unit_axis(32))
    h = L.h
    K1, K2, K3 = heat_kernel(L, 1e-3), heat_kernel(L, 2e-3), heat_kernel(L, 3e-3)
    np.testing.assert_allclose(h * K1 @ K2, K3, atol=1e-8)
    np.testing.assert_array_equal(K1, K1.T)


def test_heat_substochastic_and_positive(rng):
    a = unit_axis(32)
    L = build_schrodinger(a, Potential.random_bounded(a, rng, 50))
    for t in (1e-4, 1e-2, 1.0):
        K = heat_kernel(L, t)
        assert K.min() >= -1e-10
        assert (K.sum(axis=1) * L.h).max() <= 1 + 1e-8


def test_periodic_heat_conserves_mass():
    L = build_laplacian(unit_axis(16, "periodic"))
    np.testing.assert_allclose(heat_kernel(L, 0.01).sum(axis=1) * L.h, 1.0, atol=1e-12)


def test_feynman_kac_domination(rng):
    a = unit_axis(32)
    L0 = build_laplacian(a)
    L = build_schrodinger(a, Potential.random_bounded(a, rng, 100))
    for t in (1e-3, 1e-1):
        assert feynman_kac_gap(L, L0, t) <= 1e-8
        assert heat_kernel(L, t).min() >= 0


def test_gaussian_fit_free_laplacian():
    L = build_laplacian(unit_axis(64))
    ts = ScaleGrid(L.h ** 2, 1.0, 4)
    fit = fit_gaussian_bound(L, ts)
    assert fit.max_violation <= 0
    assert fit.c <= 8


def test_gaussian_fit_potential_does_not_increase_constant(rng):
    a = unit_axis(32)
    ts = np.geomspace(a.h ** 2, 1.0, 12)
    LV = build_schrodinger(a, Potential.random_bounded(a, rng, 50))
    for c in (8.0, 16.0):
        f0 = fit_gaussian_bound(build_laplacian(a), ts, c_grid=[c])
        fV = fit_gaussian_bound(LV, ts, c_grid=[c])
        assert fV.max_violation <= 0
        assert fV.C <= f0.C * (1 + 1e-9)


def test_gaussian_fit_derivative_kernel():
    L = build_laplacian(unit_axis(64))
    fit = fit_gaussian_bound(L, np.geomspace(4 * L.h ** 2, 1.0, 12), k=1)
    assert fit.k == 1 and fit.max_violation <= 0


def test_gaussian_fit_infeasible_reports_worst_triple():
    L = build_laplacian(unit_axis(32))
    with pytest.raises(ValueError, match="Gaussian bound violated.*worst"):
        fit_gaussian_bound(L, [1e-3, 1e-2], C_max=1e-3)


def test_gaussian_fit_stable_under_refinement():
    fits = []
    for n in (64, 128):
        L = build_laplacian(unit_axis(n))
        fits.append(fit_gaussian_bound(L, np.geomspace(1 / 64 ** 2, 1 / 16, 10)))
    assert abs(fits[1].C / fits[0].C - 1) <= 0.25


def test_heat_derivative_kernel_matches_finite_difference():
    L = build_laplacian(unit_axis(16))
    t, dt = 0.01, 1e-6
    fd = -(heat_kernel(L, t + dt) - heat_kernel(L, t - dt)) / (2 * dt)
    np.testing.assert_allclose(heat_derivative_kernel(L, t, 1), fd, rtol=1e-5, atol=1e-6)


# ------------------------------------------------------------------ wave, window

def test_wave_kernel_small_time_and_norm():
    L = build_laplacian(unit_axis(32))
    K = wave_kernel(L, 1e-9)
    np.testing.assert_allclose(L.h * K, np.eye(32), atol=1e-12)
    for t in (0.1, 0.5, 3.0):
        assert np.linalg.norm(L.h * wave_kernel(L, t), 2) <= 1 + 1e-12


def test_window_normalization_and_evenness():
    w = SpectralWindow()
    xi = np.linspace(-1, 1, 40001)
    assert trapezoid(w.phi(xi), xi) == pytest.approx(2 * np.pi, rel=1e-6)
    assert w.phi(np.array([1.0, 1.5])).tolist() == [0.0, 0.0]
    s = np.array([0.3, 2.0, 11.0])
    np.testing.assert_allclose(w.Phi(s), w.Phi(-s), atol=1e-13)
    assert w.Phi(np.array(0.0)) == pytest.approx(2 * np.pi, rel=1e-10)


def test_window_derivative_matches_finite_difference():
    w = SpectralWindow()
    s, ds = np.array([0.7, 3.0]), 1e-5
    fd = (w.Phi(s + ds) - w.Phi(s - ds)) / (2 * ds)
    np.testing.assert_allclose(w.Phi(s, 1), fd, atol=1e-7)


def test_propagation_leakage_small_and_monotone():
    L = build_laplacian(Axis(128, 1 / 128))
    t = 8 * L.h
    leak = [propagation_leakage(L, t, b * L.h) for b in (0, 1, 2, 4, 8)]
    assert all(x >= y for x, y in zip(leak, leak[1:]))
    assert leak[3] <= 1e-6 * on_cone_max(L, t)


def test_propagation_leakage_huge_buffer_is_zero():
    L = build_laplacian(unit_axis(16))
    assert propagation_leakage(L, 0.1, buffer=10.0) == 0.0


# ------------------------------------------------------------------ quadratic estimate

def test_quadratic_estimate_constant():
    L = build_laplacian(Axis(128, 1 / 128))
    rng = np.random.default_rng(4)
    g = L.eigenvectors[:, 4:100] @ rng.normal(size=96)
    scales = ScaleGrid(1e-5, 1e3, 32)
    q = quadratic_sum(L, g, scales)
    assert q / (L.h * g @ g) == pytest.approx(1 / 8, rel=0.02)


# ------------------------------------------------------------------ serialization

def test_text_roundtrip(rng):
    a = Axis(8, 0.125, origin=-0.5)
    L = build_schrodinger(a, rng.uniform(0, 3, 8))
    back = AxisOperator.from_text(L.to_text())
    np.testing.assert_array_equal(back.eigenvalues, L.eigenvalues)
    np.testing.assert_array_equal(back.eigenvectors, L.eigenvectors)
    np.testing.assert_array_equal(back.potential, L.potential)
    np.testing.assert_allclose(back.matrix, L.matrix, atol=1e-12)
    assert back.axis == a
