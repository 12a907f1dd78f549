"""Experiment configuration and Monte Carlo sweeps over source placements.

Configuration is flat ``key = value`` text with ``#`` comments. Every
sweep value is paired with the same replicate sources, so rows with the
same replicate index are directly comparable across the sweep.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .mission import STRATEGIES, MissionConfig, run_mission
from .plume_field import ConcentrationField, PlumeSource
from .region_grid import Region
from .vrp_router import Infeasible


class ConfigError(ValueError):
    """Bad configuration text; the message names the line and key."""


@dataclass(frozen=True)
class PlumeParams:
    emission_rate: float = 100.0
    wind_speed: float = 2.0
    wind_direction: float = 90.0
    effective_height: float = 0.0
    stability_coeffs: tuple[float, float, float, float] = (0.22, 0.9, 0.22, 0.9)
    sensor_altitude: float | None = None

    def field_at(self, position) -> ConcentrationField:
        src = PlumeSource(position, self.emission_rate, self.effective_height, self.wind_speed,
                          self.wind_direction, self.stability_coeffs)
        return ConcentrationField(src, self.sensor_altitude)


def default_source_bounds(region: Region) -> tuple[float, float, float, float]:
    """Source box: middle 80% of the width, 5% to 40% of the height from the lower edge."""
    return (region.x0 + 0.1 * region.width, region.y0 + 0.05 * region.height,
            region.x0 + 0.9 * region.width, region.y0 + 0.4 * region.height)


@dataclass(frozen=True)
class ExperimentSpec:
    base: MissionConfig = field(default_factory=MissionConfig)
    plume: PlumeParams = field(default_factory=PlumeParams)
    sweep_key: str | None = None
    sweep_values: tuple = ()
    replicates: int = 1
    source_bounds: tuple[float, float, float, float] | None = None
    out: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.sweep_key is not None and not self.sweep_values:
            raise ValueError("sweep_values must be non-empty when sweep_key is set")
        if self.source_bounds is None:
            object.__setattr__(self, "source_bounds", default_source_bounds(self.base.region))

    @property
    def sweep(self) -> list:
        return list(self.sweep_values) if self.sweep_key else [None]

    def config_for(self, value) -> MissionConfig:
        if self.sweep_key is None:
            return self.base
        return replace(self.base, **{self.sweep_key: value})


# key -> (kind, target). kind drives parsing; target says where the value lands.
_KEYS = {
    "region_w": ("pos", "region"),
    "region_h": ("pos", "region"),
    "region_x0": ("float", "region"),
    "region_y0": ("float", "region"),
    "depot_x": ("float", "depot"),
    "depot_y": ("float", "depot"),
    "n_drones": ("posint", "base"),
    "speed": ("pos", "base"),
    "battery_s": ("pos", "base"),
    "p1_lane_m": ("pos", "base"),
    "p2_lane_m": ("pos", "base"),
    "p2_duration_s": ("nonneg", "base"),
    "sigma_m": ("nonneg", "base"),
    "p2_sigma_m": ("nonneg", "base"),
    "radius_factor": ("pos", "base"),
    "c_d": ("pos", "base"),
    "margin_m": ("nonneg", "base"),
    "strategy": ("strategy", "base"),
    "phase1_fraction": ("fraction", "base"),
    "sample_interval_m": ("pos", "base"),
    "noise_std": ("nonneg", "base"),
    "subsample_n": ("posint", "base"),
    "seed": ("nonnegint", "base"),
    "q_gps": ("pos", "plume"),
    "wind_speed": ("pos", "plume"),
    "wind_dir_deg": ("float", "plume"),
    "source_h": ("nonneg", "plume"),
    "sensor_z": ("float", "plume"),
    "disp_ay": ("pos", "plume"),
    "disp_by": ("pos", "plume"),
    "disp_az": ("pos", "plume"),
    "disp_bz": ("pos", "plume"),
    "src_x0": ("float", "bounds"),
    "src_y0": ("float", "bounds"),
    "src_x1": ("float", "bounds"),
    "src_y1": ("float", "bounds"),
    "replicates": ("posint", "spec"),
    "sweep_key": ("sweep_key", "spec"),
    "sweep_values": ("list", "spec"),
    "out": ("str", "spec"),
    "workers": ("posint", "spec"),
}

SWEEPABLE = {
    "p1_lane_m": "pos", "p2_lane_m": "pos", "p2_duration_s": "nonneg", "n_drones": "posint",
    "strategy": "strategy", "speed": "pos", "battery_s": "pos", "sigma_m": "nonneg",
    "p2_sigma_m": "nonneg", "c_d": "pos", "phase1_fraction": "fraction", "noise_std": "nonneg",
    "margin_m": "nonneg",
}
_ALIASES = {"lane_distance": "p1_lane_m"}
_PLUME_FIELD = {"q_gps": "emission_rate", "wind_speed": "wind_speed", "wind_dir_deg": "wind_direction",
                "source_h": "effective_height", "sensor_z": "sensor_altitude"}


def _convert(kind: str, key: str, raw: str):
    try:
        if kind in ("posint", "nonnegint"):
            value = int(raw)
        elif kind in ("pos", "nonneg", "float", "fraction"):
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError
        elif kind == "strategy":
            if raw not in STRATEGIES:
                raise ConfigError(f"{key}: unknown strategy {raw!r}; expected one of {', '.join(STRATEGIES)}")
            return raw
        elif kind == "sweep_key":
            raw = _ALIASES.get(raw, raw)
            if raw not in SWEEPABLE:
                raise ConfigError(f"{key}: cannot sweep {raw!r}; sweepable keys are {', '.join(sorted(SWEEPABLE))}")
            return raw
        else:
            return raw
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{key}: cannot parse {raw!r} as a number") from None
    if kind in ("pos", "posint") and not value > 0:
        raise ConfigError(f"{key}: must be positive, got {raw}")
    if kind in ("nonneg", "nonnegint") and value < 0:
        raise ConfigError(f"{key}: must be non-negative, got {raw}")
    if kind == "fraction" and not 0 < value <= 1:
        raise ConfigError(f"{key}: must be in (0, 1], got {raw}")
    return value


def parse_config(text: str) -> ExperimentSpec:
    """Parse and validate flat ``key = value`` text into an ExperimentSpec."""
    raw: dict[str, tuple[int, str, str]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        written, value = (part.strip() for part in line.split("=", 1))
        key = _ALIASES.get(written, written)
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {written!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {written!r}")
        raw[key] = (lineno, value, written)

    vals = {}
    for key, (lineno, value, written) in raw.items():
        try:
            vals[key] = _convert(_KEYS[key][0], written, value)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None

    def where(key):
        return f"line {raw[key][0]}: " if key in raw else ""

    if "sweep_values" in vals:
        if "sweep_key" not in vals:
            raise ConfigError(f"{where('sweep_values')}sweep_values given without sweep_key")
        kind = SWEEPABLE[vals["sweep_key"]]
        items = [v.strip() for v in vals["sweep_values"].split(",") if v.strip()]
        if not items:
            raise ConfigError(f"{where('sweep_values')}sweep_values: empty list")
        try:
            vals["sweep_values"] = tuple(_convert(kind, vals["sweep_key"], v) for v in items)
        except ConfigError as exc:
            raise ConfigError(f"{where('sweep_values')}sweep_values: {exc}") from None
    elif "sweep_key" in vals:
        raise ConfigError(f"{where('sweep_key')}sweep_key given without sweep_values")

    try:
        region = Region(vals.get("region_x0", 0.0), vals.get("region_y0", 0.0),
                        vals.get("region_w", 200.0), vals.get("region_h", 100.0))
    except ValueError as exc:
        raise ConfigError(f"{where('region_w') or where('region_h')}region_w/region_h: {exc}") from None

    depot = None
    if "depot_x" in vals or "depot_y" in vals:
        dx, dy = MissionConfig(region=region).depot_point
        depot = (vals.get("depot_x", dx), vals.get("depot_y", dy))
        if not region.contains(depot):
            raise ConfigError(f"{where('depot_x') or where('depot_y')}depot_x/depot_y: depot lies outside the region")

    base_kwargs = {k: v for k, v in vals.items() if _KEYS[k][1] == "base"}
    try:
        base = MissionConfig(region=region, depot=depot, **base_kwargs)
    except ValueError as exc:
        bad = next((k for k in base_kwargs if k in str(exc)), None)
        raise ConfigError(f"{where(bad) if bad else ''}{bad or 'config'}: {exc}") from None

    coeffs = tuple(vals.get(k, d) for k, d in (("disp_ay", 0.22), ("disp_by", 0.9), ("disp_az", 0.22), ("disp_bz", 0.9)))
    plume = PlumeParams(stability_coeffs=coeffs,
                        **{_PLUME_FIELD[k]: v for k, v in vals.items() if k in _PLUME_FIELD})

    bounds = None
    if any(k in vals for k in ("src_x0", "src_y0", "src_x1", "src_y1")):
        d = default_source_bounds(region)
        bounds = tuple(vals.get(k, dv) for k, dv in zip(("src_x0", "src_y0", "src_x1", "src_y1"), d))
        if not (bounds[0] <= bounds[2] and bounds[1] <= bounds[3]
                and region.contains(bounds[:2]) and region.contains(bounds[2:])):
            raise ConfigError(f"{where('src_x0')}src_x0..src_y1: source box must be ordered and inside the region")

    try:
        spec = ExperimentSpec(base=base, plume=plume, sweep_key=vals.get("sweep_key"),
                              sweep_values=vals.get("sweep_values", ()),
                              replicates=vals.get("replicates", 1), source_bounds=bounds,
                              out=vals.get("out"), workers=vals.get("workers", 1))
        for value in spec.sweep:
            spec.config_for(value)
    except ValueError as exc:
        raise ConfigError(f"{where('sweep_values')}{exc}") from None
    return spec


def serialize_config(spec: ExperimentSpec) -> str:
    """Write every key explicitly; ``parse_config`` of the result equals ``spec``."""
    b, p = spec.base, spec.plume
    lines = [
        f"region_x0 = {b.region.x0!r}",
        f"region_y0 = {b.region.y0!r}",
        f"region_w = {b.region.width!r}",
        f"region_h = {b.region.height!r}",
    ]
    if b.depot is not None:
        lines += [f"depot_x = {b.depot[0]!r}", f"depot_y = {b.depot[1]!r}"]
    for f in fields(MissionConfig):
        if f.name in ("region", "depot", "exact_node_cap"):
            continue
        value = getattr(b, f.name)
        if value is not None:
            lines.append(f"{f.name} = {value!r}" if not isinstance(value, str) else f"{f.name} = {value}")
    for key, attr in _PLUME_FIELD.items():
        value = getattr(p, attr)
        if value is not None:
            lines.append(f"{key} = {value!r}")
    for key, value in zip(("disp_ay", "disp_by", "disp_az", "disp_bz"), p.stability_coeffs):
        lines.append(f"{key} = {value!r}")
    for key, value in zip(("src_x0", "src_y0", "src_x1", "src_y1"), spec.source_bounds):
        lines.append(f"{key} = {value!r}")
    lines.append(f"replicates = {spec.replicates}")
    if spec.sweep_key:
        lines.append(f"sweep_key = {spec.sweep_key}")
        lines.append("sweep_values = " + ", ".join(str(v) if isinstance(v, str) else repr(v) for v in spec.sweep_values))
    if spec.out:
        lines.append(f"out = {spec.out}")
    lines.append(f"workers = {spec.workers}")
    return "\n".join(lines) + "\n"


def replicate_source(spec: ExperimentSpec, replicate: int) -> PlumeSource:
    """Source for one replicate; depends only on the master seed and replicate index."""
    rng = np.random.default_rng((spec.base.seed, 0, replicate))
    x0, y0, x1, y1 = spec.source_bounds
    return spec.plume.field_at((rng.uniform(x0, x1), rng.uniform(y0, y1))).source


def replicate_seed(master_seed: int, replicate: int) -> int:
    return int(np.random.SeedSequence((master_seed, 1, replicate)).generate_state(1)[0])


def replicate_field(spec: ExperimentSpec, replicate: int) -> ConcentrationField:
    return spec.plume.field_at(replicate_source(spec, replicate).position)


METRIC_COLUMNS = ["mission_time_s", "phase1_s", "phase2_s", "FN", "FP", "total", "acquired"]
STD_COLUMNS = [c + "_std" for c in METRIC_COLUMNS]
# Data rows leave the *_std cells empty; aggregate rows hold means in the metric columns.
COLUMNS = ["row_type", "sweep_key", "sweep_value", "replicate", "seed", "source_x", "source_y",
           *METRIC_COLUMNS, "infeasible", *STD_COLUMNS]


def _run_one(args):
    spec, value, replicate = args
    conc = replicate_field(spec, replicate)
    seed = replicate_seed(spec.base.seed, replicate)
    row = {
        "row_type": "data",
        "sweep_key": spec.sweep_key or "",
        "sweep_value": value,
        "replicate": replicate,
        "seed": seed,
        "source_x": conc.source.position[0],
        "source_y": conc.source.position[1],
    }
    try:
        result = run_mission(replace(spec.config_for(value), seed=seed), conc)
    except Infeasible:
        row.update({c: None for c in METRIC_COLUMNS}, infeasible=1)
        return row
    r = result.report
    row.update(mission_time_s=result.mission_time, phase1_s=result.phase1_time, phase2_s=result.phase2_time,
               FN=r.fn, FP=r.fp, total=r.total, acquired=int(r.plume_acquired), infeasible=0)
    return row


def aggregate(rows: list[dict], sweep_key: str | None) -> list[dict]:
    """One aggregate row per sweep value: metric means plus sample standard deviations.

    Infeasible rows are left out of the statistics and counted in the
    ``infeasible`` column. With a single feasible row the std is 0.
    """
    out = []
    values = []
    for row in rows:
        if row["sweep_value"] not in values:
            values.append(row["sweep_value"])
    for value in values:
        group = [r for r in rows if r["sweep_value"] == value]
        ok = [r for r in group if not r["infeasible"]]
        agg = {c: None for c in COLUMNS}
        agg.update(row_type="aggregate", sweep_key=sweep_key or "", sweep_value=value,
                   infeasible=len(group) - len(ok))
        for c in METRIC_COLUMNS:
            xs = np.array([r[c] for r in ok], dtype=float)
            if len(xs) == 0:
                continue
            agg[c] = float(np.mean(xs))
            agg[c + "_std"] = float(np.std(xs, ddof=1)) if len(xs) > 1 else 0.0
        out.append(agg)
    return out


def run_experiment(spec: ExperimentSpec) -> list[dict]:
    """Every sweep value x replicate as a data row, then one aggregate row per sweep value.

    Rows come back in (sweep value, replicate) order whatever the worker
    count. Writes the CSV to ``spec.out`` when set.
    """
    jobs = [(spec, value, r) for value in spec.sweep for r in range(spec.replicates)]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            rows = list(pool.map(_run_one, jobs))
    else:
        rows = [_run_one(job) for job in jobs]
    table = rows + aggregate(rows, spec.sweep_key)
    if spec.out:
        write_table(table, spec.out)
    return table


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_table(table: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in table:
        writer.writerow([_fmt(row.get(c)) for c in COLUMNS])
    return buf.getvalue()


def write_table(table: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_table(table))


def read_table(text: str) -> list[dict]:
    """Parse a result CSV back into rows of strings (empty cells become None)."""
    reader = csv.DictReader(io.StringIO(text))
    return [{k: (v if v != "" else None) for k, v in row.items()} for row in reader]


def reaggregate(table: list[dict]) -> dict:
    """Recompute (mean, std) per sweep value and metric from data rows, with the statistics module."""
    groups: dict = {}
    for row in table:
        if row["row_type"] != "data" or int(row["infeasible"]):
            continue
        groups.setdefault(row["sweep_value"], []).append(row)
    out = {}
    for value, rows in groups.items():
        for c in METRIC_COLUMNS:
            xs = [float(r[c]) for r in rows]
            out[(value, c)] = (statistics.fmean(xs), statistics.stdev(xs) if len(xs) > 1 else 0.0)
    return out
