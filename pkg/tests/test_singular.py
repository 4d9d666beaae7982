import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfc

from prodhardy.atomic import atom_family
from prodhardy.grid import GridFunction
from prodhardy.linalg import matrix_norm2
from prodhardy.operators import Potential, build_laplacian, build_schrodinger, heat_kernel
from prodhardy.product import ProductOperatorPair
from prodhardy.singular import (GAMMAS, ProductKernelOperator, atom_image_l1,
                                batched_top_singular, check_linearity, condition1_check,
                                condition2_check, condition3_check, double_riesz, fit_decay,
                                heat_composed, kernel_slice_opnorm, operator_from_symbol,
                                region_weights, riesz_axis, riesz_quadrature, riesz_tail_report)

from conftest import free_pair, unit_axis


@pytest.fixture(scope="module")
def pair128():
    return free_pair(128)


# ------------------------------------------------------------------ slices

def test_heat_slice_opnorm_formula():
    pair = free_pair(16, 8)
    t1, t2 = 0.01, 0.02
    T = heat_composed(ProductKernelOperator.identity(pair), pair, t1, t2)
    p1 = heat_kernel(pair.L1, t1)
    mu_min = pair.L2.eigenvalues[0]
    for x1, y1 in [(3, 3), (2, 9)]:
        want = p1[x1, y1] * np.exp(-t2 * mu_min)
        assert kernel_slice_opnorm(T, x1, y1) == pytest.approx(want, rel=1e-6)


def test_slice_opnorm_matches_probe_path():
    pair = free_pair(8)
    T = heat_composed(ProductKernelOperator.identity(pair), pair, 0.01, 0.03)
    generic = ProductKernelOperator("generic", T.action, T.adjoint, T.in_h, T.out_positions)
    for x1, y1 in [(0, 0), (3, 5)]:
        assert kernel_slice_opnorm(generic, x1, y1, pair.shape, tol=1e-12) == pytest.approx(
            kernel_slice_opnorm(T, x1, y1, tol=1e-12), rel=1e-8)


def test_zero_operator_slice_and_conditions():
    pair = free_pair(16)
    Z = ProductKernelOperator.zero(pair)
    assert kernel_slice_opnorm(Z, 2, 3) == 0.0
    t = [4 * pair.L1.h]
    assert all(v == 0 for v in condition1_check(Z, pair, t).integrals().values())
    assert all(v == 0 for v in condition2_check(Z, pair, t).integrals().values())
    c3 = condition3_check(Z, pair, [(t[0], t[0])], [(2, 2)])
    assert all(v == 0 for v in c3.integrals().values())


def test_slice_opnorm_below_frobenius(rng):
    A1, A2 = rng.normal(size=(6, 6)), rng.normal(size=(5, 5))
    T = ProductKernelOperator.tensor("rand", A1, A2, (0.5, 0.25))
    for x1, y1 in [(0, 1), (4, 4)]:
        S = A1[x1, y1] / 0.5 * A2 / 0.25
        assert kernel_slice_opnorm(T, x1, y1) <= 0.25 * np.linalg.norm(S) * (1 + 1e-9)


def test_batched_top_singular(rng):
    S = rng.normal(size=(5, 4, 3))
    S[2] = 0
    got = batched_top_singular(S, tol=1e-12, max_iter=5000)
    want = [np.linalg.norm(s, 2) for s in S]
    np.testing.assert_allclose(got, want, rtol=1e-6)


def test_region_weights_partial_cells():
    pos = np.array([0.0, 1.0, 2.0, 3.0])
    np.testing.assert_allclose(region_weights(pos, 0.0, 1.5, 1.0), [0, 0, 1, 1])
    np.testing.assert_allclose(region_weights(pos, 0.0, 1.25, 1.0), [0, 0.25, 1, 1])


def test_tensor_kernel_and_swap(rng):
    A1, A2 = rng.normal(size=(4, 4)), rng.normal(size=(3, 3))
    T = ProductKernelOperator.tensor("t", A1, A2, (0.5, 2.0))
    K = T.kernel()
    f = rng.normal(size=(4, 3))
    np.testing.assert_allclose(np.einsum("abcd,bd->ac", K, f) * 0.5 * 2.0, T(f))
    S = T.swapped()
    np.testing.assert_allclose(S(f.T), T(f).T)
    with pytest.raises(ValueError):
        operator_from_symbol("x", lambda l, m: l + m, free_pair(4)).kernel()


def test_linearity_check(rng):
    pair = free_pair(8)
    assert check_linearity(double_riesz(pair), pair.shape, rng) <= 1e-10
    bad = ProductKernelOperator("square", lambda f: f ** 2)
    with pytest.raises(ValueError, match="not linear"):
        check_linearity(bad, (4, 4), rng)


# ------------------------------------------------------------------ conditions

def test_condition1_identity_erfc(pair128):
    I = ProductKernelOperator.identity(pair128)
    t = 8 * pair128.L1.h
    rep = condition1_check(I, pair128, [t], (2, 3, 4), y_samples=[64])
    for (g, _), v in rep.integrals().items():
        assert v == pytest.approx(erfc(g / 2), rel=0.03)


def test_condition3_identity_erfc_squared(pair128):
    I = ProductKernelOperator.identity(pair128)
    t = 8 * pair128.L1.h
    rep = condition3_check(I, pair128, [(t, t)], [(2, 2), (3, 3), (2, 4)],
                           y_samples=[(64, 64)])
    for (g1, g2), v in rep.integrals().items():
        assert v == pytest.approx(erfc(g1 / 2) * erfc(g2 / 2), rel=0.03)


def test_condition_monotone_in_gamma_and_positive_decay():
    pair = free_pair(64)
    t = [4 * pair.L1.h, 8 * pair.L1.h]
    for T in (ProductKernelOperator.identity(pair), double_riesz(pair)):
        rep = condition1_check(T, pair, t, GAMMAS)
        for tt in t:
            vals = [rep.integrals((tt, 0.0))[(g, 0.0)] for g in GAMMAS]
            assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))
        assert rep.fit_delta > 0


def test_condition_axis_symmetry():
    pair = free_pair(32)
    T = double_riesz(pair)
    t = [4 * pair.L1.h]
    c1 = condition1_check(T, pair, t)
    c2 = condition2_check(T, pair, t)
    for (g, _), v in c1.integrals().items():
        assert c2.integrals()[(0.0, g)] == pytest.approx(v, rel=1e-8, abs=1e-14)


def test_condition3_factorizes_for_tensor():
    pair = free_pair(32)
    T = double_riesz(pair)
    t = 4 * pair.L1.h
    y = (16, 16)
    rep = condition3_check(T, pair, [(t, t)], [(2, 3)], y_samples=[y])
    R1, R2 = T.factors
    pos1, pos2 = T.out_positions
    h = pair.L1.h
    E = pair.L1.function(lambda lam: np.exp(-t * t * lam))
    u = -E[:, 16] / h
    u[16] += 1 / h
    k1, k2 = R1 @ u, R2 @ u
    x = pair.L1.axis.centers[16]
    i1 = h * region_weights(pos1, x, 2 * t, h) @ np.abs(k1)
    i2 = h * region_weights(pos2, x, 3 * t, h) @ np.abs(k2)
    assert rep.integrals()[(2, 3)] == pytest.approx(i1 * i2, rel=1e-8)


def test_condition_report_table_columns():
    pair = free_pair(16)
    rep = condition1_check(ProductKernelOperator.identity(pair), pair, [2 * pair.L1.h], (2, 3))
    rows = rep.table()
    assert len(rows) == 2 and all(len(r) == len(rep.COLUMNS) for r in rows)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 100), st.floats(0.1, 5))
def test_fit_decay_recovers_power_law(C, delta):
    g = np.array(GAMMAS, dtype=float)
    fc, fd, res = fit_decay(g, C * g ** -delta)
    assert fc == pytest.approx(C, rel=1e-8)
    assert fd == pytest.approx(delta, rel=1e-8, abs=1e-10)
    assert res < 1e-8


def test_fit_decay_degenerate():
    assert np.isnan(fit_decay([2, 3], [1.0, 0.0])[1])
    # the roundoff floor drops the tiny point
    _, d, _ = fit_decay([2, 4, 8], [1.0, 0.5, 1e-20])
    assert d == pytest.approx(1.0)


# ------------------------------------------------------------------ Riesz

def test_riesz_free_norm_is_one():
    L = build_laplacian(unit_axis(64))
    assert np.linalg.norm(riesz_axis(L), 2) == pytest.approx(1.0, abs=1e-10)


def test_riesz_constant_potential_norm():
    a = unit_axis(32)
    L0 = build_laplacian(a)
    v0 = 50.0
    R = riesz_axis(build_schrodinger(a, Potential.constant(a, v0)))
    want = np.sqrt(L0.lam_max / (L0.lam_max + v0))
    assert np.linalg.norm(R, 2) == pytest.approx(want, abs=1e-10)
    assert matrix_norm2(R, tol=1e-13, max_iter=200000) == pytest.approx(want, abs=1e-8)


def test_riesz_quadrature_matches_spectral(rng):
    a = unit_axis(32)
    L = build_schrodinger(a, Potential.random_bounded(a, rng, 20))
    R = riesz_axis(L)
    Q = riesz_quadrature(L, 200)
    assert np.abs(Q - R).max() <= 1e-3 * np.abs(R).max()


def test_riesz_periodic_needs_projection():
    L = build_laplacian(unit_axis(16, "periodic"))
    with pytest.raises(ValueError, match="singular"):
        riesz_axis(L)
    R = riesz_axis(L, project_zero=True)
    np.testing.assert_allclose(R @ np.ones(16), 0, atol=1e-12)
    assert np.linalg.norm(R, 2) == pytest.approx(1.0, abs=1e-10)


def test_riesz_tail_decays():
    L = build_laplacian(unit_axis(128))
    rep = riesz_tail_report(L, [4 * L.h, 8 * L.h], (2, 3, 4, 6, 8, 12, 16))
    assert rep.fit_delta >= 0.4


def test_double_riesz_norm_and_factorization(rng):
    pair = free_pair(16, 8)
    T = double_riesz(pair)
    R1, R2 = T.factors
    assert np.linalg.norm(R1, 2) * np.linalg.norm(R2, 2) == pytest.approx(1.0, abs=1e-8)
    K = T.kernel()
    np.testing.assert_allclose(K[3, 4, 2, 5], R1[3, 4] * R2[2, 5] / (pair.L1.h * pair.L2.h),
                               rtol=1e-12)
    a1, a2 = pair.axes
    pv = ProductOperatorPair(build_schrodinger(a1, rng.uniform(0, 30, 16)),
                             build_schrodinger(a2, rng.uniform(0, 30, 8)))
    R1, R2 = double_riesz(pv).factors
    assert np.linalg.norm(R1, 2) * np.linalg.norm(R2, 2) <= 1 + 1e-10


def test_symbol_operator_norm_below_sup(rng):
    pair = free_pair(8)
    s = 1 / pair.L1.lam_max
    for k in range(5):
        def F(l, m, k=k):
            return np.cos((k + 1) * s * l) * np.exp(-s * m)
        T = operator_from_symbol("F", F, pair)
        sup = np.abs(pair.symbol_table(F)).max()
        assert T.norm(pair.shape, tol=1e-10, max_iter=5000) <= sup + 1e-6


# ------------------------------------------------------------------ atoms

def test_atom_image_identity_and_zero():
    pair = free_pair(32)
    atoms = atom_family(pair, np.random.default_rng(4), 5, 1)
    I, Z = ProductKernelOperator.identity(pair), ProductKernelOperator.zero(pair)
    for a in atoms:
        assert atom_image_l1(Z, a) == 0.0
        assert atom_image_l1(I, a) <= 1 + 1e-9
        assert atom_image_l1(double_riesz(pair), a) < 2.0
    g = GridFunction(*pair.axes, np.ones(pair.shape))
    assert atom_image_l1(I, g.values) == pytest.approx(1.0)
