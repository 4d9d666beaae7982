import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from prodhardy.grid import (Axis, DyadicInterval, DyadicRectangle, GridFunction, OpenSet,
                            ScaleGrid, all_dyadic_rectangles, enlarge, journe_gamma,
                            journe_lift, journe_sum, lp_norm, maximal_dyadic_subrectangles,
                            maximal_in_direction, random_open_set, strong_maximal)

from conftest import unit_axis


def make_set(mask, h=1.0):
    mask = np.asarray(mask, dtype=bool)
    return OpenSet(Axis(mask.shape[0], h), Axis(mask.shape[1], h), mask)


masks = arrays(bool, st.sampled_from([(4, 4), (4, 8), (8, 8)]))


# ------------------------------------------------------------------ axis, norms

def test_axis_rejects_bad_sizes():
    with pytest.raises(ValueError, match="power of two"):
        Axis(6)
    with pytest.raises(ValueError, match="grid too small"):
        Axis(2)
    with pytest.raises(ValueError):
        Axis(8, h=0.0)
    with pytest.raises(ValueError):
        Axis(8, boundary="neumann")


def test_axis_length_and_centers():
    a = Axis(8, 0.25, origin=-1.0)
    assert a.length == 2.0
    np.testing.assert_allclose(a.centers[[0, -1]], [-0.875, 0.875])


def test_lp_norm_examples():
    a = Axis(4, 1.0)
    assert lp_norm(GridFunction.zeros(a, a), 1) == 0.0
    assert lp_norm(GridFunction(a, a, np.ones((4, 4))), 2) == pytest.approx(4.0)
    b = Axis(4, 0.5)
    f = np.zeros((4, 4))
    f[1, 2] = 1.0
    assert lp_norm(GridFunction(b, b, f), 1) == pytest.approx(0.25)
    assert lp_norm(GridFunction(b, b, -3 * f), np.inf) == 3.0


def test_lp_norm_rejects_nonfinite():
    a = Axis(4)
    v = np.ones((4, 4))
    v[0, 0] = np.nan
    with pytest.raises(ValueError, match="non-finite sample"):
        lp_norm(GridFunction(a, a, v), 2)


def test_grid_function_shape_check():
    with pytest.raises(ValueError):
        GridFunction(Axis(4), Axis(8), np.zeros((4, 4)))


def test_scale_grid_geometric():
    s = ScaleGrid.for_axis(unit_axis(16), 8)
    r = s.values[1:] / s.values[:-1]
    np.testing.assert_allclose(r, 2 ** (1 / 8))
    assert s.values[0] <= 1 / 32 and s.values[-1] >= 1.0
    np.testing.assert_allclose(s.weights, np.log(2) / 8)


# ------------------------------------------------------------------ dyadic geometry

def test_dyadic_interval_cells_and_parent():
    I = DyadicInterval(2, 3)
    assert I.cell_range(16) == (12, 16)
    assert I.parent() == DyadicInterval(1, 1)
    assert DyadicInterval(0, 0).parent() is None
    assert DyadicInterval(1, 1).contains(I)


def test_maximal_single_rectangle():
    R = DyadicRectangle.of(1, 0, 2, 1)
    om = make_set(R.mask((8, 8)))
    assert maximal_dyadic_subrectangles(om) == [R]
    # direction-maximal families also keep the thinner slices of R
    m1 = maximal_in_direction(om, 1)
    assert R in m1 and all(S.i1 == R.i1 and R.contains(S) for S in m1)
    m2 = maximal_in_direction(om, 2)
    assert R in m2 and all(S.i2 == R.i2 and R.contains(S) for S in m2)


def test_maximal_full_grid():
    om = make_set(np.ones((8, 8)))
    assert maximal_dyadic_subrectangles(om) == [DyadicRectangle.of(0, 0, 0, 0)]


def test_maximal_l_shape_keeps_three_cells():
    mask = np.ones((4, 4), dtype=bool)
    mask[2:, 2:] = False       # three quadrants of the 2x2 dyadic square
    rects = maximal_dyadic_subrectangles(make_set(mask))
    quads = {DyadicRectangle.of(1, 0, 1, 0), DyadicRectangle.of(1, 0, 1, 1),
             DyadicRectangle.of(1, 1, 1, 0)}
    # quadrants merge into half strips and none touches the missing quadrant
    for R in rects:
        assert not (R.mask((4, 4)) & ~mask).any()
    assert DyadicRectangle.of(1, 0, 0, 0) in rects     # top half strip
    assert DyadicRectangle.of(0, 0, 1, 0) in rects     # left half strip
    assert not quads & set(rects)


def test_maximal_strip_direction_one():
    mask = np.zeros((8, 8), dtype=bool)
    mask[:, 2:4] = True
    strip = DyadicRectangle.of(0, 0, 2, 1)
    m1 = maximal_in_direction(make_set(mask), 1)
    assert strip in m1
    assert all(S.i1 == strip.i1 for S in m1)
    assert maximal_dyadic_subrectangles(make_set(mask)) == [strip]


def test_empty_open_set_errors():
    om = make_set(np.zeros((4, 4)))
    with pytest.raises(ValueError, match="empty open set"):
        maximal_dyadic_subrectangles(om)
    with pytest.raises(ValueError, match="empty open set"):
        maximal_in_direction(om, 1)


def brute_maximal(mask):
    inside = [R for R in all_dyadic_rectangles(mask.shape) if mask[R.slices(mask.shape)].all()]
    return {R for R in inside
            if not any(S != R and S.contains(R) for S in inside)}


@settings(max_examples=60, deadline=None)
@given(masks)
def test_maximal_matches_enumeration(mask):
    if not mask.any():
        return
    om = make_set(mask)
    got = maximal_dyadic_subrectangles(om)
    assert len(got) == len(set(got))
    assert set(got) == brute_maximal(mask)
    for R in got:
        assert R in om
        if R.i1.parent() is not None:
            assert DyadicRectangle(R.i1.parent(), R.i2) not in om
        if R.i2.parent() is not None:
            assert DyadicRectangle(R.i1, R.i2.parent()) not in om


@settings(max_examples=60, deadline=None)
@given(masks)
def test_maximal_union_equals_dyadic_cover(mask):
    if not mask.any():
        return
    cover = np.zeros(mask.shape, dtype=bool)
    for R in all_dyadic_rectangles(mask.shape):
        if mask[R.slices(mask.shape)].all():
            cover |= R.mask(mask.shape)
    got = np.zeros(mask.shape, dtype=bool)
    for R in maximal_dyadic_subrectangles(make_set(mask)):
        got |= R.mask(mask.shape)
    np.testing.assert_array_equal(got, cover)


@settings(max_examples=40, deadline=None)
@given(masks, st.sampled_from([1, 2]))
def test_maximal_in_direction_matches_definition(mask, direction):
    if not mask.any():
        return
    om = make_set(mask)
    got = set(maximal_in_direction(om, direction))
    want = set()
    for R in all_dyadic_rectangles(mask.shape):
        if R not in om:
            continue
        par = R.i1.parent() if direction == 1 else R.i2.parent()
        if par is None:
            want.add(R)
            continue
        S = DyadicRectangle(par, R.i2) if direction == 1 else DyadicRectangle(R.i1, par)
        if S not in om:
            want.add(R)
    assert got == want


# ------------------------------------------------------------------ maximal function

def test_strong_maximal_constant_and_zero():
    np.testing.assert_allclose(strong_maximal(np.full((8, 4), 2.5)), 2.5)
    np.testing.assert_array_equal(strong_maximal(np.zeros((4, 4))), 0.0)
    with pytest.raises(ValueError):
        strong_maximal(-np.ones((4, 4)))


def test_strong_maximal_point_mass_brute_force():
    g = np.zeros((8, 8))
    g[3, 5] = 1.0
    M = strong_maximal(g)
    want = np.zeros_like(g)
    for R in all_dyadic_rectangles(g.shape):
        m = R.mask(g.shape)
        want = np.maximum(want, np.where(m, g[m].mean(), 0.0))
    np.testing.assert_allclose(M, want)
    assert M.min() >= 1.0 / 64


@settings(max_examples=40, deadline=None)
@given(arrays(float, (8, 8), elements=st.floats(0, 10)),
       arrays(float, (8, 8), elements=st.floats(0, 10)))
def test_strong_maximal_sublinear_and_monotone(g1, g2):
    M1, M2, M12 = strong_maximal(g1), strong_maximal(g2), strong_maximal(g1 + g2)
    assert np.all(M12 <= M1 + M2 + 1e-12)
    assert np.all(strong_maximal(np.maximum(g1, g2)) >= M1 - 1e-12)


@settings(max_examples=40, deadline=None)
@given(masks)
def test_enlarge_contains_set(mask):
    if not mask.any():
        return
    om = make_set(mask)
    assert om.issubset(enlarge(om, 0.5))


def test_enlarge_full_grid_and_measure_bound(rng):
    full = make_set(np.ones((8, 8)))
    assert enlarge(full).mask.all()
    a = unit_axis(64)
    worst = 0.0
    for _ in range(100):
        om = random_open_set(a, a, rng)
        worst = max(worst, enlarge(om, 0.5).measure / om.measure)
    assert worst <= 16


# ------------------------------------------------------------------ Journe

def test_journe_gamma_single_rectangle_is_one():
    R = DyadicRectangle.of(2, 1, 2, 2)
    om = make_set(R.mask((8, 8)))
    assert journe_gamma(R, om, 1) == 1.0
    assert journe_gamma(R, om, 2) == 1.0


def test_journe_gamma_wide_strip():
    mask = np.zeros((16, 16), dtype=bool)
    mask[:, 4:8] = True                      # full axis1 extent, J of level 2
    R = DyadicRectangle.of(3, 2, 2, 1)       # 2 x 4 cells inside the strip
    om = make_set(mask)
    assert journe_gamma(R, om, 1) == 16 / 2


def test_journe_gamma_requires_containment():
    om = make_set(np.eye(4))
    with pytest.raises(ValueError):
        journe_gamma(DyadicRectangle.of(0, 0, 0, 0), om, 1)


@settings(max_examples=40, deadline=None)
@given(masks)
def test_journe_gamma_at_least_one(mask):
    if not mask.any():
        return
    om = make_set(mask)
    big = enlarge(om)
    for R in maximal_dyadic_subrectangles(om):
        assert journe_gamma(R, om, 1, big) >= 1
        assert journe_gamma(R, om, 2, big) >= 1


def test_journe_lift_widens_interval():
    mask = np.zeros((16, 16), dtype=bool)
    mask[:, 4:8] = True
    om = make_set(mask)
    for R in maximal_dyadic_subrectangles(om):
        lJ, lQ = journe_lift(R, om)
        assert lJ.i2 == R.i2 and lJ.i1.contains(R.i1)
        assert lQ.i1 == lJ.i1 and lQ.i2.contains(R.i2)


def test_journe_sum_single_rectangle():
    R = DyadicRectangle.of(1, 1, 2, 0)
    om = make_set(R.mask((8, 8)), h=0.125)
    s1, s2 = journe_sum(om, 1.0)
    # R itself contributes |R| with gamma = 1; its slices add a bounded amount
    assert om.measure <= s1 <= 4 * om.measure
    assert om.measure <= s2 <= 4 * om.measure


def test_journe_sum_monotone_in_delta(rng):
    a = unit_axis(32)
    for _ in range(10):
        om = random_open_set(a, a, rng)
        lo = journe_sum(om, 0.5)
        hi = journe_sum(om, 2.0)
        assert hi[0] <= lo[0] + 1e-15 and hi[1] <= lo[1] + 1e-15


def test_journe_sum_bounded_by_measure(rng):
    a = unit_axis(64)
    c = max(max(journe_sum(om, 1.0)) / om.measure
            for om in (random_open_set(a, a, rng) for _ in range(30)))
    assert c < 4


def test_journe_sum_rejects_nonpositive_delta():
    with pytest.raises(ValueError):
        journe_sum(make_set(np.ones((4, 4))), 0.0)


# ------------------------------------------------------------------ serialization

@settings(max_examples=60, deadline=None)
@given(masks)
def test_open_set_rle_roundtrip(mask):
    om = make_set(mask)
    back = OpenSet.from_rle(om.axis1, om.axis2, om.to_rle())
    np.testing.assert_array_equal(back.mask, mask)


def test_rectangle_tuple_form():
    R = DyadicRectangle.of(1, 1, 3, 5)
    assert R.as_tuple() == (1, 1, 3, 5)
    assert R.area(Axis(8, 0.5), Axis(8, 0.5)) == pytest.approx(2.0 * 0.5)


def test_all_rectangles_count():
    # (2^(K+1) - 1) intervals per axis
    assert len(all_dyadic_rectangles((4, 8))) == 7 * 15
    assert len(set(all_dyadic_rectangles((4, 4)))) == 49
