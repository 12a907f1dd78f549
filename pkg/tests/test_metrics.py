import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from plumesurvey.kernel_estimator import EstimateGrid
from plumesurvey.metrics import ErrorReport, LabelGrid, all_safe, classify, score
from plumesurvey.plume_field import DangerThreshold
from plumesurvey.region_grid import Region


def grid(values):
    values = np.asarray(values, dtype=float)
    r = Region(0, 0, values.shape[1], values.shape[0])
    return EstimateGrid(r, values, np.ones_like(values, dtype=bool))


def test_threshold_is_inclusive():
    labels = classify(grid([[0.5, 1.0, 1.5]]), DangerThreshold(1.0))
    assert labels.labels.tolist() == [[False, True, True]]


def test_all_zero_grid_is_safe():
    assert classify(grid(np.zeros((4, 5))), DangerThreshold(0.1)).n_unsafe == 0


def test_identical_grids_score_zero():
    r = Region(0, 0, 10, 10)
    y = np.zeros((10, 10), dtype=bool)
    y[2:4, 3:8] = True
    rep = score(LabelGrid(r, y), LabelGrid(r, y.copy()))
    assert (rep.fn, rep.fp, rep.total) == (0.0, 0.0, 0.0)
    assert rep.plume_acquired


def test_all_safe_estimate_misses_everything():
    r = Region(0, 0, 10, 10)
    y = np.zeros((10, 10), dtype=bool)
    y[0, :4] = True
    rep = score(LabelGrid(r, y), all_safe(r))
    assert (rep.fn, rep.fp, rep.total) == (100.0, 0.0, 100.0)
    assert not rep.plume_acquired


def test_counting_example_10_positive_90_negative():
    r = Region(0, 0, 10, 10)
    y = np.zeros(100, dtype=bool)
    y[:10] = True
    y_hat = y.copy()
    y_hat[:2] = False       # 2 of 10 positives missed
    y_hat[10:19] = True     # 9 of 90 negatives flagged
    rep = score(LabelGrid(r, y.reshape(10, 10)), LabelGrid(r, y_hat.reshape(10, 10)))
    assert rep.fn == pytest.approx(20.0)
    assert rep.fp == pytest.approx(10.0)
    assert rep.total == pytest.approx(30.0)
    assert (rep.omega_p, rep.omega_n) == (10, 90)


def test_errors():
    r = Region(0, 0, 3, 3)
    with pytest.raises(ValueError):
        score(all_safe(r), all_safe(r))
    y = np.ones((3, 3), dtype=bool)
    with pytest.raises(ValueError):
        score(LabelGrid(r, y), all_safe(Region(0, 0, 3, 4)))
    with pytest.raises(ValueError):
        LabelGrid(r, np.ones((2, 2)))


def test_csv_row_round_trip():
    rep = ErrorReport(12.5, 0.25, 12.75, 8, 392, True)
    assert ErrorReport.CSV_HEADER == "FN,FP,total,acquired,omega_p,omega_n"
    assert rep.to_csv_row() == "12.5,0.25,12.75,1,8,392"
    assert ErrorReport.from_csv_row(rep.to_csv_row()) == rep


label_arrays = st.integers(1, 12).flatmap(
    lambda h: st.integers(1, 12).flatmap(
        lambda w: st.tuples(arrays(bool, (h, w)), arrays(bool, (h, w)))
    )
)


@given(label_arrays, st.data())
@settings(max_examples=100)
def test_single_flip_moves_one_term_by_one_quantum(pair, data):
    y, y_hat = pair
    if not y.any():
        return
    r = Region(0, 0, y.shape[1], y.shape[0])
    before = score(LabelGrid(r, y), LabelGrid(r, y_hat))
    i = data.draw(st.integers(0, y.size - 1))
    flipped = y_hat.copy().ravel()
    flipped[i] = ~flipped[i]
    after = score(LabelGrid(r, y), LabelGrid(r, flipped.reshape(y.shape)))
    if y.ravel()[i]:
        assert abs(after.fn - before.fn) == pytest.approx(100 / before.omega_p)
        assert after.fp == before.fp
    else:
        assert abs(after.fp - before.fp) == pytest.approx(100 / before.omega_n)
        assert after.fn == before.fn


@given(label_arrays, st.randoms(use_true_random=False))
@settings(max_examples=100)
def test_invariant_under_box_reordering_and_bounded(pair, rnd):
    y, y_hat = pair
    if not y.any():
        return
    r = Region(0, 0, y.shape[1], y.shape[0])
    rep = score(LabelGrid(r, y), LabelGrid(r, y_hat))
    perm = list(range(y.size))
    rnd.shuffle(perm)
    ys, yhs = y.ravel()[perm].reshape(y.shape), y_hat.ravel()[perm].reshape(y.shape)
    rep2 = score(LabelGrid(r, ys), LabelGrid(r, yhs))
    assert rep2 == rep
    assert 0 <= rep.fn <= 100 and 0 <= rep.fp <= 100
    assert rep.total == rep.fn + rep.fp
    assert (rep.total == 0) == bool(np.array_equal(y, y_hat))
