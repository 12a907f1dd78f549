"""Safe/unsafe classification and false-negative / false-positive scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .region_grid import Region


@dataclass(frozen=True)
class LabelGrid:
    """Binary label per 1 m box, shape ``region.shape``; True means unsafe."""

    region: Region
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=bool)
        if labels.shape != self.region.shape:
            raise ValueError(f"labels shape {labels.shape} does not match region {self.region.shape}")
        object.__setattr__(self, "labels", labels)

    @property
    def n_unsafe(self) -> int:
        return int(self.labels.sum())


@dataclass(frozen=True)
class ErrorReport:
    fn: float
    fp: float
    total: float
    omega_p: int
    omega_n: int
    plume_acquired: bool

    CSV_HEADER = "FN,FP,total,acquired,omega_p,omega_n"

    def to_csv_row(self) -> str:
        return f"{self.fn!r},{self.fp!r},{self.total!r},{int(self.plume_acquired)},{self.omega_p},{self.omega_n}"

    @classmethod
    def from_csv_row(cls, row: str) -> "ErrorReport":
        fn, fp, total, acq, op, on = row.strip().split(",")
        return cls(float(fn), float(fp), float(total), int(op), int(on), bool(int(acq)))


def classify(grid, threshold) -> LabelGrid:
    """Label a box unsafe when its estimate is at or above the threshold."""
    c_d = getattr(threshold, "c_d", threshold)
    return LabelGrid(grid.region, np.asarray(grid.values) >= c_d)


def all_safe(region: Region) -> LabelGrid:
    return LabelGrid(region, np.zeros(region.shape, dtype=bool))


def score(truth: LabelGrid, estimate: LabelGrid) -> ErrorReport:
    """Percent of true-unsafe boxes missed (FN) and true-safe boxes flagged (FP).

    FN is normalised by the number of truly unsafe boxes and FP by the
    number of truly safe ones, so the total lies in [0, 200].
    """
    if truth.region != estimate.region or truth.labels.shape != estimate.labels.shape:
        raise ValueError("truth and estimate grids cover different regions")
    y = truth.labels
    y_hat = estimate.labels
    omega_p = int(y.sum())
    omega_n = int(y.size - omega_p)
    if omega_p == 0:
        raise ValueError("ground truth contains no unsafe boxes; FN is undefined")
    missed = int((y & ~y_hat).sum())
    false_alarms = int((~y & y_hat).sum())
    # 100 * count is an exact integer, so each percentage is the correctly rounded ratio
    fn = 100.0 * missed / omega_p
    fp = 100.0 * false_alarms / omega_n if omega_n else 0.0
    return ErrorReport(
        fn=fn,
        fp=fp,
        total=fn + fp,
        omega_p=omega_p,
        omega_n=omega_n,
        plume_acquired=bool((y & y_hat).any()),
    )
