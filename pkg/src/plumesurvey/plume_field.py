"""Synthetic ground-truth plume: reflected Gaussian plume with power-law spread."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .region_grid import Region

# Downwind distances below this are treated as this value so that the
# dispersion widths never underflow to zero.
_MIN_DOWNWIND = 1e-9


@dataclass(frozen=True)
class PlumeSource:
    """Continuous point release.

    Parameters
    ----------
    position : (x, y) of the source in meters.
    emission_rate : Q, g/s.
    effective_height : H, m.
    wind_speed : u, m/s.
    wind_direction : degrees counter-clockwise from +x; the plume travels
        towards this direction.
    stability_coeffs : (a_y, b_y, a_z, b_z) with sigma = a * x'**b.
    """

    position: tuple[float, float]
    emission_rate: float = 100.0
    effective_height: float = 0.0
    wind_speed: float = 2.0
    wind_direction: float = 90.0
    stability_coeffs: tuple[float, float, float, float] = (0.22, 0.9, 0.22, 0.9)

    def __post_init__(self):
        if not self.emission_rate > 0:
            raise ValueError("emission_rate must be positive")
        if not self.wind_speed > 0:
            raise ValueError("wind_speed must be positive")
        if not self.effective_height >= 0:
            raise ValueError("effective_height must be non-negative")
        if len(self.stability_coeffs) != 4 or not all(c > 0 for c in self.stability_coeffs):
            raise ValueError("stability coefficients must be four positive numbers")
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))


@dataclass(frozen=True)
class DangerThreshold:
    c_d: float

    def __post_init__(self):
        if not self.c_d > 0:
            raise ValueError("danger threshold must be positive")


@dataclass(frozen=True)
class ConcentrationField:
    source: PlumeSource
    sensor_altitude: float | None = None

    @property
    def z(self) -> float:
        return self.source.effective_height if self.sensor_altitude is None else self.sensor_altitude

    def to_plume_frame(self, x, y):
        """Rotate world coordinates into (downwind, crosswind) about the source."""
        theta = math.radians(self.source.wind_direction)
        dx = np.asarray(x, dtype=float) - self.source.position[0]
        dy = np.asarray(y, dtype=float) - self.source.position[1]
        c, s = math.cos(theta), math.sin(theta)
        return c * dx + s * dy, -s * dx + c * dy

    def __call__(self, x, y):
        return concentration_at(self, x, y)


def concentration_at(field: ConcentrationField, x, y=None):
    """Concentration at one point or an array of points.

    Accepts either ``concentration_at(field, (x, y))`` or
    ``concentration_at(field, xs, ys)``; arrays broadcast. Returns a float
    for scalar input.
    """
    if y is None:
        x, y = x
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    src = field.source
    a_y, b_y, a_z, b_z = src.stability_coeffs
    xd, yc = field.to_plume_frame(x, y)
    downwind = xd > 0
    xp = np.maximum(xd, _MIN_DOWNWIND)
    sig_y = a_y * xp**b_y
    sig_z = a_z * xp**b_z
    z, h = field.z, src.effective_height
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        vertical = np.exp(-((z - h) ** 2) / (2 * sig_z**2)) + np.exp(-((z + h) ** 2) / (2 * sig_z**2))
        c = (
            src.emission_rate
            / (2 * math.pi * src.wind_speed * sig_y * sig_z)
            * np.exp(-(yc**2) / (2 * sig_y**2))
            * vertical
        )
    c = np.where(downwind, np.nan_to_num(c, nan=0.0, posinf=np.finfo(float).max), 0.0)
    return float(c) if scalar else c


def box_maxima(field: ConcentrationField, region: Region, subsample_n: int = 5) -> np.ndarray:
    """Max concentration over an ``n x n`` cell-centred sub-grid of each 1 m box.

    For odd ``n`` the sub-grid contains the box center.
    """
    if subsample_n < 1:
        raise ValueError("subsample_n must be at least 1")
    rows, cols = region.shape
    offsets = (np.arange(subsample_n) + 0.5) / subsample_n
    xs = region.x0 + (np.arange(cols)[:, None] + offsets[None, :]).ravel()
    ys = region.y0 + (np.arange(rows)[:, None] + offsets[None, :]).ravel()
    gx, gy = np.meshgrid(xs, ys)
    c = concentration_at(field, gx, gy)
    return c.reshape(rows, subsample_n, cols, subsample_n).max(axis=(1, 3))


def ground_truth_labels(field, region: Region, threshold: DangerThreshold, subsample_n: int = 5):
    """True safe/unsafe labels: a box is unsafe iff its sampled maximum reaches C_d."""
    from .metrics import LabelGrid

    return LabelGrid(region, box_maxima(field, region, subsample_n) >= threshold.c_d)


def center_values(field: ConcentrationField, region: Region) -> np.ndarray:
    gx, gy = region.box_centers()
    return concentration_at(field, gx, gy)


def format_grid(values: np.ndarray, box_size: float = 1.0, fmt=None) -> str:
    """Plain-text matrix dump: header line, shape line, then one CSV row per grid row.

    Row 0 is the lowest row of boxes (smallest y).
    """
    values = np.asarray(values)
    rows, cols = values.shape
    lines = ["rows,cols,box_size_m", f"{rows},{cols},{box_size:g}"]
    fmt = fmt or (lambda v: repr(float(v)))
    lines += [",".join(fmt(v) for v in row) for row in values]
    return "\n".join(lines) + "\n"


def parse_grid(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "rows,cols,box_size_m":
        raise ValueError("missing grid header")
    rows, cols, _ = lines[1].split(",")
    values = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:]])
    if values.shape != (int(rows), int(cols)):
        raise ValueError(f"grid body has shape {values.shape}, header says {rows}x{cols}")
    return values


def draw_source(rng: np.random.Generator, bounds: Region | tuple, **plume_kwargs) -> PlumeSource:
    """Source placed uniformly at random inside ``bounds`` (x0, y0, x1, y1 or Region)."""
    if isinstance(bounds, Region):
        bounds = (bounds.x0, bounds.y0, bounds.x1, bounds.y1)
    x0, y0, x1, y1 = bounds
    return PlumeSource(position=(rng.uniform(x0, x1), rng.uniform(y0, y1)), **plume_kwargs)
