import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prodhardy.grid import GridFunction, OpenSet, ScaleGrid
from prodhardy.square import (TentFunction, area_integral, box_sum, cone_halfwidth,
                              default_scales, hardy_norm, tent_a_functional, tent_norm,
                              tent_over)

from conftest import free_pair, unit_axis


@pytest.fixture(scope="module")
def pair32():
    return free_pair(32)


def eigen_combo(pair, rng, modes=(2, 8)):
    lo, hi = modes
    c = np.zeros(pair.shape)
    c[lo:hi, lo:hi] = rng.normal(size=(hi - lo, hi - lo))
    return GridFunction(*pair.axes, pair.from_coefficients(c))


def test_cone_halfwidth_is_strict():
    h = 0.1
    np.testing.assert_array_equal(cone_halfwidth([0.05, 0.1, 0.1001, 0.3, 0.35], h),
                                  [0, 0, 1, 2, 3])


def test_box_sum_matches_loop(rng):
    a = rng.normal(size=(7, 5))
    got = box_sum(a, 2, axis=0)
    want = np.array([a[max(k - 2, 0):k + 3].sum(axis=0) for k in range(7)])
    np.testing.assert_allclose(got, want)
    per_col = box_sum(a, np.array([0, 1, 2, 3, 4]), axis=0)
    np.testing.assert_allclose(per_col[:, 0], a[:, 0])


def test_area_integral_zero(pair32):
    f = GridFunction.zeros(*pair32.axes)
    np.testing.assert_array_equal(area_integral(f, pair32).values, 0.0)
    assert hardy_norm(f, pair32) == 0.0


def test_area_integral_l2_ratio(rng):
    # 64 cells keep the low modes clear of the clipped boundary cones
    pair = free_pair(64)
    for _ in range(5):
        f = eigen_combo(pair, rng)
        r = area_integral(f, pair).norm(2) / f.norm(2)
        assert r == pytest.approx(0.25, rel=0.05)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_area_integral_sublinear(seed):
    pair = free_pair(16)
    rng = np.random.default_rng(seed)
    f1 = GridFunction(*pair.axes, rng.normal(size=pair.shape))
    f2 = GridFunction(*pair.axes, rng.normal(size=pair.shape))
    s = area_integral(f1.like(f1.values + f2.values), pair).values
    assert np.all(s <= area_integral(f1, pair).values + area_integral(f2, pair).values + 1e-12)


def test_hardy_norm_homogeneous(pair32, rng):
    f = GridFunction(*pair32.axes, rng.normal(size=pair32.shape))
    base = hardy_norm(f, pair32)
    for alpha in (-2.0, 0.5, 3.0):
        assert hardy_norm(f.like(alpha * f.values), pair32) == pytest.approx(abs(alpha) * base,
                                                                           rel=1e-12)


def test_area_integral_reflection_symmetry(pair32, rng):
    f = GridFunction(*pair32.axes, rng.normal(size=pair32.shape))
    S = area_integral(f, pair32).values
    for flip in ((slice(None, None, -1), slice(None)), (slice(None), slice(None, None, -1))):
        Sr = area_integral(f.like(f.values[flip]), pair32).values
        np.testing.assert_allclose(Sr, S[flip], atol=1e-10)


def test_area_integral_matches_tent_functional(rng):
    pair = free_pair(16)
    f = GridFunction(*pair.axes, rng.normal(size=pair.shape))
    s1, s2 = default_scales(pair.L1.axis), default_scales(pair.L2.axis)
    F = TentFunction.from_q(f, pair, s1, s2)
    np.testing.assert_allclose(area_integral(f, pair).values, tent_a_functional(F).values,
                               rtol=1e-10, atol=1e-14)


# ------------------------------------------------------------------ tents

def scales16():
    a = unit_axis(16)
    return a, ScaleGrid.for_axis(a, 4)


def tent_zero():
    a, s = scales16()
    return TentFunction(a, a, s, s, np.zeros((16, 16, len(s), len(s))))


def test_tent_function_validates_shape():
    a, s = scales16()
    with pytest.raises(ValueError):
        TentFunction(a, a, s, s, np.zeros((16, 16, 2, 2)))


def test_tent_zero():
    F = tent_zero()
    np.testing.assert_array_equal(tent_a_functional(F).values, 0.0)
    assert tent_norm(F, 1) == 0.0 and F.l2_norm() == 0.0


def test_single_cell_support():
    F = tent_zero()
    a = F.axis1
    v = F.values.copy()
    y, i, j = (5, 9), 6, 3
    v[y[0], y[1], i, j] = 1.0
    A = tent_a_functional(F.like(v)).values
    t1, t2 = F.scales1.values[i], F.scales2.values[j]
    x = a.centers
    inside = ((np.abs(x - x[y[0]]) < t1 - 1e-12)[:, None]
              & (np.abs(x - x[y[1]]) < t2 - 1e-12)[None, :])
    np.testing.assert_array_equal(A > 0, inside)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_tent_functional_sublinear_and_aperture_monotone(seed):
    rng = np.random.default_rng(seed)
    F = tent_zero()
    F1, F2 = F.like(rng.normal(size=F.values.shape)), F.like(rng.normal(size=F.values.shape))
    A12 = tent_a_functional(F1.like(F1.values + F2.values)).values
    assert np.all(A12 <= tent_a_functional(F1).values + tent_a_functional(F2).values + 1e-12)
    assert np.all(tent_a_functional(F1, 2.0).values >= tent_a_functional(F1, 1.0).values - 1e-12)


def test_tent_norm_two_is_fubini():
    # interior support so the cone shadow is never clipped
    a = unit_axis(128)
    s = ScaleGrid(0.05, 0.1, 4)
    rng = np.random.default_rng(2)
    v = np.zeros((128, 128, len(s), len(s)))
    v[50:78, 50:78] = rng.normal(size=(28, 28, len(s), len(s)))
    F = TentFunction(a, a, s, s, v)
    m = cone_halfwidth(s.values, a.h)
    shadow = (2 * m + 1) * a.h / s.values        # discrete |{x: |x-y|<t}| / t per axis
    want = np.einsum("abij,ij->", v ** 2, F.measure_weights() * np.outer(shadow, shadow))
    assert tent_norm(F, 2) ** 2 == pytest.approx(want, rel=1e-12)
    assert tent_norm(F, 2) ** 2 / F.l2_norm() ** 2 == pytest.approx(4.0, rel=0.02)


def test_tent_over_full_grid():
    a, s = scales16()
    T = tent_over(OpenSet(a, a, np.ones((16, 16), dtype=bool)), s, s)
    assert T.all()


def test_tent_over_excludes_large_scales():
    a, s = scales16()
    mask = np.zeros((16, 16), dtype=bool)
    mask[4:8, 4:12] = True
    T = tent_over(OpenSet(a, a, mask), s, s)
    too_wide = s.values > 4 * a.h
    assert not T[:, :, too_wide, :].any()
    assert not T[~mask].any()


def test_tent_over_empty_raises():
    a, s = scales16()
    with pytest.raises(ValueError, match="empty open set"):
        tent_over(OpenSet(a, a, np.zeros((16, 16), dtype=bool)), s, s)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_tent_over_monotone(seed):
    rng = np.random.default_rng(seed)
    a, s = scales16()
    small = rng.random((16, 16)) < 0.6
    small[0, 0] = True
    big = small | (rng.random((16, 16)) < 0.3)
    T1 = tent_over(OpenSet(a, a, small), s, s)
    T2 = tent_over(OpenSet(a, a, big), s, s)
    assert not (T1 & ~T2).any()
    assert not (tent_over(OpenSet(a, a, small), s, s, aperture=2.0) & ~T1).any()
