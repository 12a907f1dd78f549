"""Gaussian-kernel extrapolation of sparse samples onto the 1 m box grid."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .region_grid import Region

NO_DATA = 0.0


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian weight width ``sigma`` and cutoff ``radius`` (defaults to 3 sigma)."""

    sigma: float
    radius: float | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.radius is None:
            object.__setattr__(self, "radius", 3.0 * self.sigma)
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def weight(self, d):
        # The 1/sqrt(2 pi sigma^2) prefactor cancels in the normalised average.
        return np.exp(-np.square(d) / (2.0 * self.sigma**2))


@dataclass(frozen=True)
class EstimateGrid:
    region: Region
    values: np.ndarray
    coverage: np.ndarray

    @property
    def n_covered(self) -> int:
        return int(self.coverage.sum())

    def argmax_center(self) -> tuple[float, float]:
        """Center of the highest-valued box; ties go to the lowest box index."""
        idx = int(np.argmax(self.values.ravel()))
        row, col = divmod(idx, self.region.shape[1])
        return (self.region.x0 + col + 0.5, self.region.y0 + row + 0.5)


def _xy(samples):
    if hasattr(samples, "positions"):
        return samples.positions, np.asarray(samples.value, dtype=float)
    samples = list(samples)
    if not samples:
        return np.empty((0, 2)), np.empty(0)
    return (np.array([s.position for s in samples], dtype=float),
            np.array([s.value for s in samples], dtype=float))


def estimate_at(samples, x, kernel: KernelSpec) -> tuple[float, int]:
    """Weighted average of every sample within ``kernel.radius`` of ``x``.

    Returns ``(estimate, n_contributing)``; ``(0.0, 0)`` when nothing is in range.
    """
    pos, val = _xy(samples)
    if len(val) == 0:
        return NO_DATA, 0
    d = np.hypot(pos[:, 0] - x[0], pos[:, 1] - x[1])
    near = d <= kernel.radius
    n = int(near.sum())
    if n == 0:
        return NO_DATA, 0
    w = kernel.weight(d[near])
    return float(np.dot(w, val[near]) / w.sum()), n


def estimate_points(samples, points: np.ndarray, kernel: KernelSpec):
    """Kernel estimates at many query points using a k-d tree on both sides.

    Returns ``(values, counts)`` arrays aligned with ``points``.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    pos, val = _xy(samples)
    out = np.full(len(points), NO_DATA)
    counts = np.zeros(len(points), dtype=np.int64)
    if len(val) == 0 or len(points) == 0:
        return out, counts
    pairs = cKDTree(points).sparse_distance_matrix(
        cKDTree(pos), kernel.radius, output_type="ndarray"
    )
    q, k = pairs["i"].astype(np.int64), pairs["j"].astype(np.int64)
    # Same distance expression as estimate_at, so both routes agree to rounding.
    d = np.hypot(points[q, 0] - pos[k, 0], points[q, 1] - pos[k, 1])
    keep = d <= kernel.radius
    q, k, d = q[keep], k[keep], d[keep]
    w = kernel.weight(d)
    wsum = np.bincount(q, weights=w, minlength=len(points))
    wval = np.bincount(q, weights=w * val[k], minlength=len(points))
    counts = np.bincount(q, minlength=len(points))
    has = counts > 0
    out[has] = wval[has] / wsum[has]
    return out, counts


def estimate_grid(samples, region: Region, kernel: KernelSpec) -> EstimateGrid:
    """Kernel estimate at every box center; uncovered boxes hold the no-data value."""
    gx, gy = region.box_centers()
    values, counts = estimate_points(samples, np.column_stack([gx.ravel(), gy.ravel()]), kernel)
    shape = region.shape
    return EstimateGrid(region, values.reshape(shape), (counts > 0).reshape(shape))


def combine(primary: EstimateGrid, fallback: EstimateGrid) -> EstimateGrid:
    """Take ``primary`` wherever it has coverage, ``fallback`` elsewhere."""
    if primary.region != fallback.region:
        raise ValueError("grids cover different regions")
    values = np.where(primary.coverage, primary.values, fallback.values)
    return EstimateGrid(primary.region, values, primary.coverage | fallback.coverage)


def plume_bounding_box(grid: EstimateGrid, threshold, margin: float) -> Region | None:
    """Rectangle around every box whose estimate reaches the threshold.

    The rectangle is grown by ``margin`` on each side, snapped outward to
    whole meters and clipped to the grid's region. Returns None when no
    box reaches the threshold.
    """
    if margin < 0:
        raise ValueError("margin must be non-negative")
    c_d = getattr(threshold, "c_d", threshold)
    rows, cols = np.nonzero(grid.values >= c_d)
    if len(rows) == 0:
        return None
    r = grid.region
    n_rows, n_cols = r.shape
    c0 = max(0, math.floor(cols.min() - margin))
    c1 = min(n_cols, math.ceil(cols.max() + 1 + margin))
    r0 = max(0, math.floor(rows.min() - margin))
    r1 = min(n_rows, math.ceil(rows.max() + 1 + margin))
    return Region(r.x0 + c0, r.y0 + r0, c1 - c0, r1 - r0)


def format_estimate_grid(grid: EstimateGrid) -> tuple[str, str]:
    """Concentration matrix and its 0/1 coverage mask, both in the field-dump format."""
    from .plume_field import format_grid

    return format_grid(grid.values), format_grid(grid.coverage, fmt=lambda v: str(int(v)))
