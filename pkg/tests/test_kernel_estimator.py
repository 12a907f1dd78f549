import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plumesurvey.flight_sim import Sample, SampleSet
from plumesurvey.kernel_estimator import (
    EstimateGrid,
    KernelSpec,
    estimate_at,
    estimate_grid,
    format_estimate_grid,
    plume_bounding_box,
)
from plumesurvey.plume_field import ConcentrationField, PlumeSource, center_values, parse_grid
from plumesurvey.region_grid import Region


def samples_from(points, values):
    points = np.asarray(points, dtype=float)
    return SampleSet(np.zeros(len(points), int), np.arange(len(points), dtype=float),
                     points[:, 0], points[:, 1], values)


def brute_grid(samples, region, sigma, radius):
    # quadratic scan, pure python
    rows, cols = region.shape
    out = np.zeros((rows, cols))
    mask = np.zeros((rows, cols), dtype=bool)
    pts = list(zip(samples.x.tolist(), samples.y.tolist(), samples.value.tolist()))
    for r in range(rows):
        for c in range(cols):
            cx, cy = region.x0 + c + 0.5, region.y0 + r + 0.5
            num = den = 0.0
            for x, y, v in pts:
                d = math.hypot(cx - x, cy - y)
                if d <= radius:
                    w = math.exp(-d * d / (2 * sigma * sigma))
                    num += w * v
                    den += w
            if den > 0:
                out[r, c] = num / den
                mask[r, c] = True
    return out, mask


def test_kernel_defaults():
    k = KernelSpec(2.0)
    assert k.radius == 6.0
    with pytest.raises(ValueError):
        KernelSpec(0.0)
    with pytest.raises(ValueError):
        KernelSpec(1.0, -1.0)


def test_single_sample_at_query():
    s = [Sample(0, (3.0, 4.0), 0.0, 7.5)]
    assert estimate_at(s, (3.0, 4.0), KernelSpec(1.0)) == (7.5, 1)


def test_equidistant_pair_is_plain_mean():
    s = samples_from([[0, 0], [2, 0]], [4.0, 10.0])
    value, n = estimate_at(s, (1.0, 0.0), KernelSpec(1.0))
    assert value == pytest.approx(7.0)
    assert n == 2


def test_three_samples_hand_weighted_average():
    # distances 1, 2, 4 with sigma 2; oracle from 30-digit mpmath
    s = samples_from([[1, 0], [0, 2], [-4, 0]], [10.0, 20.0, 30.0])
    value, n = estimate_at(s, (0.0, 0.0), KernelSpec(2.0))
    assert n == 3
    assert value == pytest.approx(15.4002788145377057, rel=1e-14)


def test_out_of_range_is_no_data():
    s = samples_from([[10, 10]], [5.0])
    assert estimate_at(s, (0.0, 0.0), KernelSpec(1.0)) == (0.0, 0)
    assert estimate_at(SampleSet(), (0.0, 0.0), KernelSpec(1.0)) == (0.0, 0)


def test_empty_samples_grid():
    g = estimate_grid(SampleSet(), Region(0, 0, 20, 10), KernelSpec(2.0))
    assert not g.coverage.any()
    assert np.all(g.values == 0)


def test_samples_at_every_center_reproduce_field():
    region = Region(70, 20, 20, 30)
    f = ConcentrationField(PlumeSource((79.7, 18.3)))
    gx, gy = region.box_centers()
    vals = center_values(f, region)
    s = samples_from(np.column_stack([gx.ravel(), gy.ravel()]), vals.ravel())
    g = estimate_grid(s, region, KernelSpec(0.1))
    np.testing.assert_allclose(g.values, vals, rtol=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_index_matches_quadratic_scan(seed):
    rng = np.random.default_rng(seed)
    region = Region(0, 0, 20, 10)
    n = rng.integers(1, 80)
    s = samples_from(rng.uniform([-2, -2], [22, 12], size=(n, 2)), rng.uniform(0, 5, n))
    sigma = rng.uniform(0.3, 3)
    fast = estimate_grid(s, region, KernelSpec(sigma))
    slow, mask = brute_grid(s, region, sigma, 3 * sigma)
    np.testing.assert_array_equal(fast.coverage, mask)
    np.testing.assert_allclose(fast.values, slow, rtol=1e-12, atol=0)


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_convex_combination_bound(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 10, size=(30, 2))
    vals = rng.uniform(0, 100, 30)
    s = samples_from(pts, vals)
    k = KernelSpec(rng.uniform(0.2, 3))
    for q in rng.uniform(0, 10, size=(10, 2)):
        value, n = estimate_at(s, q, k)
        if n:
            near = np.hypot(*(pts - q).T) <= k.radius
            assert vals[near].min() - 1e-9 <= value <= vals[near].max() + 1e-9


def test_normalisation_constant_cancels():
    rng = np.random.default_rng(1)
    pts = rng.uniform(0, 10, size=(40, 2))
    vals = rng.uniform(0, 3, 40)
    sigma = 1.5
    q = np.array([5.0, 5.0])
    d = np.hypot(*(pts - q).T)
    near = d <= 3 * sigma
    w = np.exp(-d[near] ** 2 / (2 * sigma**2))
    with_prefactor = w / math.sqrt(2 * math.pi * sigma**2)
    expected = np.dot(with_prefactor, vals[near]) / with_prefactor.sum()
    value, _ = estimate_at(samples_from(pts, vals), q, KernelSpec(sigma))
    assert value == pytest.approx(expected, rel=1e-13)


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_adding_a_sample_never_shrinks_coverage(seed):
    rng = np.random.default_rng(seed)
    region = Region(0, 0, 20, 10)
    pts = rng.uniform(0, 20, size=(5, 2))
    k = KernelSpec(1.0)
    before = estimate_grid(samples_from(pts, np.ones(5)), region, k).coverage
    more = np.vstack([pts, rng.uniform(0, 20, size=(1, 2))])
    after = estimate_grid(samples_from(more, np.ones(6)), region, k).coverage
    assert np.all(after[before])


@given(st.integers(0, 10_000), st.floats(0.3, 2.0), st.floats(1.0, 3.0))
@settings(max_examples=25, deadline=None)
def test_wider_kernel_grows_above_threshold_set_for_equal_values(seed, s1, factor):
    rng = np.random.default_rng(seed)
    region = Region(0, 0, 20, 10)
    s = samples_from(rng.uniform(0, 20, size=(6, 2)), np.full(6, 2.0))
    narrow = estimate_grid(s, region, KernelSpec(s1)).values >= 1.0
    wide = estimate_grid(s, region, KernelSpec(s1 * factor)).values >= 1.0
    assert wide.sum() >= narrow.sum()
    assert np.all(wide[narrow])


def make_grid(values):
    values = np.asarray(values, float)
    return EstimateGrid(Region(0, 0, values.shape[1], values.shape[0]), values, values > 0)


def test_bounding_box_single_box():
    v = np.zeros((10, 10))
    v[3, 7] = 5.0
    assert plume_bounding_box(make_grid(v), 1.0, 0) == Region(7, 3, 1, 1)


def test_bounding_box_none():
    assert plume_bounding_box(make_grid(np.zeros((4, 4))), 1.0, 2) is None


def test_bounding_box_l_shape_with_margin_and_clip():
    v = np.zeros((20, 30))
    v[5:12, 4] = 3.0      # vertical arm
    v[11, 4:15] = 3.0     # horizontal arm
    rows, cols = np.nonzero(v >= 1.0)
    margin = 2.5
    x0 = max(0, math.floor(cols.min() - margin))
    x1 = min(30, math.ceil(cols.max() + 1 + margin))
    y0 = max(0, math.floor(rows.min() - margin))
    y1 = min(20, math.ceil(rows.max() + 1 + margin))
    assert plume_bounding_box(make_grid(v), 1.0, margin) == Region(x0, y0, x1 - x0, y1 - y0)
    clipped = plume_bounding_box(make_grid(v), 1.0, 50)
    assert clipped == Region(0, 0, 30, 20)
    with pytest.raises(ValueError):
        plume_bounding_box(make_grid(v), 1.0, -1)


def test_argmax_ties_lowest_index():
    v = np.zeros((3, 4))
    v[2, 1] = v[1, 3] = 9.0
    assert make_grid(v).argmax_center() == (3.5, 1.5)


def test_estimate_grid_export():
    s = samples_from([[1, 1], [4, 2]], [2.0, 4.0])
    g = estimate_grid(s, Region(0, 0, 6, 3), KernelSpec(0.5))
    values, mask = format_estimate_grid(g)
    np.testing.assert_array_equal(parse_grid(values), g.values)
    np.testing.assert_array_equal(parse_grid(mask), g.coverage.astype(float))
    assert set(mask.splitlines()[2].split(",")) <= {"0", "1"}
