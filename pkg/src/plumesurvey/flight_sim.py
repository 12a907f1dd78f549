"""Constant-speed drone flight with distance-triggered point sampling."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, NamedTuple

import numpy as np

_ON_GRID_TOL = 1e-9


class Sample(NamedTuple):
    drone_id: int
    position: tuple[float, float]
    time: float
    value: float


class SampleSet:
    """Column store of samples from any number of drones."""

    CSV_HEADER = "drone_id,time_s,x_m,y_m,value"

    def __init__(self, drone_id=(), time=(), x=(), y=(), value=()):
        self.drone_id = np.asarray(drone_id, dtype=np.int64)
        self.time = np.asarray(time, dtype=float)
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.value = np.asarray(value, dtype=float)
        n = len(self.drone_id)
        if not all(len(a) == n for a in (self.time, self.x, self.y, self.value)):
            raise ValueError("sample columns must have equal length")

    def __len__(self) -> int:
        return len(self.drone_id)

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield Sample(int(self.drone_id[i]), (float(self.x[i]), float(self.y[i])),
                         float(self.time[i]), float(self.value[i]))

    def __eq__(self, other):
        if not isinstance(other, SampleSet):
            return NotImplemented
        return all(np.array_equal(getattr(self, c), getattr(other, c))
                   for c in ("drone_id", "time", "x", "y", "value"))

    @property
    def positions(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    @classmethod
    def from_samples(cls, samples) -> "SampleSet":
        samples = list(samples)
        if not samples:
            return cls()
        return cls(
            [s.drone_id for s in samples],
            [s.time for s in samples],
            [s.position[0] for s in samples],
            [s.position[1] for s in samples],
            [s.value for s in samples],
        )

    @classmethod
    def merge(cls, *sets: "SampleSet") -> "SampleSet":
        """Concatenate and order by (time, drone_id); ties keep input order."""
        sets = [s for s in sets if s is not None]
        cols = {c: np.concatenate([getattr(s, c) for s in sets]) if sets else np.empty(0)
                for c in ("drone_id", "time", "x", "y", "value")}
        order = np.lexsort((cols["drone_id"], cols["time"]))
        return cls(**{c: v[order] for c, v in cols.items()})

    def shifted(self, dt: float) -> "SampleSet":
        return SampleSet(self.drone_id, self.time + dt, self.x, self.y, self.value)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(self.CSV_HEADER + "\n")
        for d, t, x, y, v in zip(self.drone_id.tolist(), self.time.tolist(), self.x.tolist(),
                                 self.y.tolist(), self.value.tolist()):
            buf.write(f"{d},{t!r},{x!r},{y!r},{v!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SampleSet":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != cls.CSV_HEADER:
            raise ValueError("missing sample CSV header")
        rows = [ln.split(",") for ln in lines[1:]]
        if not rows:
            return cls()
        d, t, x, y, v = zip(*rows)
        return cls([int(i) for i in d], [float(i) for i in t], [float(i) for i in x],
                   [float(i) for i in y], [float(i) for i in v])


@dataclass
class SensorModel:
    """Point sensor with optional additive Gaussian noise, clamped at zero."""

    noise_std: float = 0.0
    rng_seed: int | tuple | None = None
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not self.noise_std >= 0:
            raise ValueError("noise_std must be non-negative")
        self.rng = np.random.default_rng(self.rng_seed)

    def measure(self, conc_field, x, y) -> np.ndarray:
        c = np.asarray(conc_field(np.asarray(x, float), np.asarray(y, float)), dtype=float)
        if self.noise_std > 0:
            c = np.maximum(c + self.rng.normal(0.0, self.noise_std, size=c.shape), 0.0)
        return c


@dataclass(frozen=True)
class DroneState:
    id: int
    position: tuple[float, float]
    heading: float
    elapsed: float
    battery_remaining: float
    truncated: bool = False

    def __post_init__(self):
        if self.battery_remaining < 0:
            raise ValueError("battery_remaining must be non-negative")
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))

    @classmethod
    def launch(cls, drone_id: int, position, battery_s: float, heading: float = 0.0) -> "DroneState":
        return cls(drone_id, position, heading, 0.0, battery_s)

    @property
    def battery_s(self) -> float:
        return self.elapsed + self.battery_remaining

    def advance(self, dt: float, **changes) -> "DroneState":
        """Spend ``dt`` seconds of battery; ``dt`` is capped at what is left."""
        dt = min(dt, self.battery_remaining)
        return replace(self, elapsed=self.elapsed + dt,
                       battery_remaining=self.battery_remaining - dt, **changes)


def hover(drone: DroneState, duration: float) -> DroneState:
    """Wait in place; hovering drains the battery like flight."""
    return drone.advance(max(duration, 0.0))


def _dedupe(points: np.ndarray) -> np.ndarray:
    keep = np.ones(len(points), dtype=bool)
    keep[1:] = np.any(np.diff(points, axis=0) != 0, axis=1)
    return points[keep]


def fly_polyline(drone: DroneState, waypoints, v: float, sample_interval: float, conc_field,
                 sensor: SensorModel, max_time: float | None = None):
    """Fly through ``waypoints`` at speed ``v`` and sample along the way.

    Samples fall at every multiple of ``sample_interval`` of arc length
    from the start and at each interior waypoint. The flight stops early
    when the battery (or ``max_time``) runs out; the stop point is then
    sampled too and the returned state has ``truncated=True``.

    Returns
    -------
    (SampleSet, DroneState)
    """
    if not sample_interval > 0:
        raise ValueError("sample_interval must be positive")
    if not v > 0:
        raise ValueError("speed must be positive")
    pts = np.asarray(waypoints, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        pts = np.array([drone.position])
    if not np.all(np.isfinite(pts)):
        raise ValueError("waypoints must be finite")
    if not np.allclose(pts[0], drone.position, atol=1e-9):
        raise ValueError("first waypoint must equal the drone's current position")
    pts = _dedupe(pts)

    seg = np.hypot(*np.diff(pts, axis=0).T) if len(pts) > 1 else np.empty(0)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    length = float(cum[-1])

    budget = drone.battery_remaining
    if max_time is not None:
        budget = min(budget, max(max_time, 0.0))
    reach = budget * v
    truncated = reach < length
    s_end = reach if truncated else length

    n_grid = int(math.floor(s_end / sample_interval + _ON_GRID_TOL))
    stations = [np.arange(n_grid + 1) * sample_interval]
    interior = cum[1:-1]
    interior = interior[interior <= s_end]
    off_grid = np.abs(interior / sample_interval - np.round(interior / sample_interval)) * sample_interval > _ON_GRID_TOL
    stations.append(interior[off_grid])
    if truncated:
        r = s_end / sample_interval
        if abs(r - round(r)) * sample_interval > _ON_GRID_TOL:
            stations.append(np.array([s_end]))
    s = np.unique(np.concatenate(stations))
    s = s[s <= s_end + _ON_GRID_TOL]

    if len(pts) > 1:
        xs = np.interp(s, cum, pts[:, 0])
        ys = np.interp(s, cum, pts[:, 1])
        end = (float(np.interp(s_end, cum, pts[:, 0])), float(np.interp(s_end, cum, pts[:, 1])))
        k = min(int(np.searchsorted(cum, s_end, side="left")), len(seg)) - 1
        k = max(k, 0)
        d = pts[k + 1] - pts[k]
        heading = math.degrees(math.atan2(d[1], d[0])) % 360.0
    else:
        xs, ys = np.full(len(s), pts[0, 0]), np.full(len(s), pts[0, 1])
        end, heading = drone.position, drone.heading

    values = sensor.measure(conc_field, xs, ys)
    samples = SampleSet(np.full(len(s), drone.id), drone.elapsed + s / v, xs, ys, values)
    if truncated and s_end >= drone.battery_remaining * v:
        new = replace(drone, position=end, heading=heading, elapsed=drone.elapsed + drone.battery_remaining,
                      battery_remaining=0.0, truncated=True)
    else:
        new = drone.advance(s_end / v, position=end, heading=heading, truncated=truncated)
    return samples, new


def bounce_heading(heading: float, rng: np.random.Generator) -> float:
    """Turn around: add +180 or -180 degrees (sign drawn uniformly), result in [0, 360)."""
    sign = 1.0 if rng.random() < 0.5 else -1.0
    return (heading + sign * 180.0) % 360.0
