"""Single- and two-phase survey missions.

Phase 1 flies a VRP lane plan over the whole region at coarse spacing and
builds a kernel estimate. Two-phase missions then zoom into the estimated
plume box, either by random straight-line search that turns around when
it leaves the plume or the box (``two_phase_random``) or by a second,
finer lane plan over the box (``two_phase_coverage``). The final map is
estimated from all samples and scored against the ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .flight_sim import DroneState, SampleSet, SensorModel, bounce_heading, fly_polyline, hover
from .kernel_estimator import (
    EstimateGrid,
    KernelSpec,
    combine,
    estimate_grid,
    plume_bounding_box,
)
from .metrics import ErrorReport, LabelGrid, all_safe, classify, score
from .plume_field import ConcentrationField, DangerThreshold, ground_truth_labels
from .region_grid import Region, box_of, build_lane_graph
from .vrp_router import EXACT_NODE_CAP, Infeasible, RoutePlan, VrpInstance, solve, solve_heuristic

STRATEGIES = ("single_phase", "two_phase_random", "two_phase_coverage")

# Consecutive turn-arounds tolerated before a drone gives up on its line
# and draws a fresh heading from its own interval.
MAX_FAILED_BOUNCES = 3


@dataclass(frozen=True)
class MissionConfig:
    region: Region = field(default_factory=lambda: Region(0.0, 0.0, 200.0, 100.0))
    depot: tuple[float, float] | None = None
    n_drones: int = 1
    speed: float = 10.0
    battery_s: float = 1800.0
    p1_lane_m: float = 10.0
    p2_lane_m: float = 2.0
    p2_duration_s: float = 300.0
    sigma_m: float | None = None
    p2_sigma_m: float | None = None
    radius_factor: float = 3.0
    c_d: float = 0.2
    margin_m: float | None = None
    strategy: str = "single_phase"
    seed: int = 0
    phase1_fraction: float = 0.6
    sample_interval_m: float = 1.0
    noise_std: float = 0.0
    subsample_n: int = 5
    exact_node_cap: int = EXACT_NODE_CAP

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.n_drones < 1:
            raise ValueError("n_drones must be at least 1")
        for name in ("speed", "battery_s", "p1_lane_m", "p2_lane_m", "radius_factor", "c_d",
                     "sample_interval_m"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("sigma_m", "p2_sigma_m", "margin_m"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.p2_duration_s < 0:
            raise ValueError("p2_duration_s must be non-negative")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        if not 0 < self.phase1_fraction <= 1:
            raise ValueError("phase1_fraction must be in (0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.two_phase and self.phase1_budget_s + self.p2_duration_s > self.battery_s * (1 + 1e-12):
            raise ValueError("phase-1 budget plus p2_duration_s exceeds battery_s")

    @property
    def two_phase(self) -> bool:
        return self.strategy != "single_phase"

    @property
    def depot_point(self) -> tuple[float, float]:
        if self.depot is not None:
            return (float(self.depot[0]), float(self.depot[1]))
        return (self.region.x0 + self.region.width / 2, self.region.y0)

    @property
    def phase1_budget_s(self) -> float:
        return self.battery_s * self.phase1_fraction if self.two_phase else self.battery_s

    @property
    def threshold(self) -> DangerThreshold:
        return DangerThreshold(self.c_d)

    @property
    def margin(self) -> float:
        return 2.0 * self.p1_lane_m if self.margin_m is None else self.margin_m

    def kernel(self, phase: int) -> KernelSpec:
        if phase == 1:
            sigma = self.sigma_m or self.p1_lane_m
        else:
            sigma = self.p2_sigma_m or self.p2_lane_m
        return KernelSpec(sigma, self.radius_factor * sigma)


@dataclass(frozen=True)
class HeadingInterval:
    drone: int
    lo: float
    hi: float

    def __contains__(self, heading: float) -> bool:
        return self.lo <= heading < self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def draw(self, rng: np.random.Generator) -> float:
        return float(self.lo + rng.random() * (self.hi - self.lo))


def heading_interval(k: int, n: int) -> HeadingInterval:
    """Half-open heading sector [360(k-1)/N, 360k/N) for drone ``k`` of ``n`` (1-based)."""
    if n < 1 or not 1 <= k <= n:
        raise ValueError(f"drone index {k} out of range 1..{n}")
    return HeadingInterval(k, 360.0 * (k - 1) / n, 360.0 * k / n)


def _sensor(config: MissionConfig, phase: int, drone: int) -> SensorModel:
    return SensorModel(config.noise_std, rng_seed=(config.seed, phase, drone))


class Phase1Result(NamedTuple):
    samples: SampleSet
    grid: EstimateGrid
    box: Region | None
    elapsed: float
    plan: RoutePlan
    drones: list


class Phase2Result(NamedTuple):
    samples: SampleSet
    elapsed: float
    drones: list
    plan: RoutePlan | None = None
    truncated: bool = False


def fly_plan(plan: RoutePlan, graph, drones: list[DroneState], config: MissionConfig, conc_field,
             phase: int, max_time: float | None = None):
    """Fly each route of ``plan`` from the matching drone state; returns merged samples and new states."""
    sets, states = [], []
    for route, drone in zip(plan.routes, drones):
        waypoints = [graph.position(n) for n in route]
        waypoints[0] = np.asarray(drone.position)
        s, d = fly_polyline(drone, waypoints, config.speed, config.sample_interval_m, conc_field,
                            _sensor(config, phase, drone.id), max_time=max_time)
        sets.append(s)
        states.append(d)
    return SampleSet.merge(*sets), states


def run_phase1(config: MissionConfig, conc_field: ConcentrationField) -> Phase1Result:
    """Coarse lane coverage of the whole region, then kernel estimate and plume box."""
    graph = build_lane_graph(config.region, config.p1_lane_m, config.depot_point)
    instance = VrpInstance(graph, config.n_drones, config.speed, config.phase1_budget_s)
    plan = solve(instance, config.exact_node_cap)
    drones = [DroneState.launch(k, config.depot_point, config.battery_s) for k in range(1, config.n_drones + 1)]
    samples, drones = fly_plan(plan, graph, drones, config, conc_field, phase=1)
    grid = estimate_grid(samples, config.region, config.kernel(1))
    box = plume_bounding_box(grid, config.threshold, config.margin)
    return Phase1Result(samples, grid, box, plan.makespan, plan, drones)


def _sync(drones: list[DroneState], t: float) -> list[DroneState]:
    """Hold every drone until mission time ``t``."""
    return [hover(d, t - d.elapsed) for d in drones]


def _ray_exit(p, u, boundary: Region) -> float:
    """Distance from ``p`` along unit direction ``u`` to the edge of ``boundary``."""
    t = math.inf
    for pc, uc, lo, hi in ((p[0], u[0], boundary.x0, boundary.x1), (p[1], u[1], boundary.y0, boundary.y1)):
        if uc > 1e-15:
            t = min(t, (hi - pc) / uc)
        elif uc < -1e-15:
            t = min(t, (lo - pc) / uc)
    return max(t, 0.0)


def _random_search(drone: DroneState, k: int, config: MissionConfig, start, boundary: Region,
                   conc_field, t0: float, duration: float):
    """Straight-line search for one drone; returns (SampleSet, final state)."""
    rng = np.random.default_rng((config.seed, 2, k))
    sensor = _sensor(config, 2, k)
    interval = heading_interval(k, config.n_drones)
    v, c_d = config.speed, config.c_d
    heading = interval.draw(rng)

    budget = min(duration, drone.battery_remaining)
    reach = budget * v
    travelled = 0.0
    p = (float(start[0]), float(start[1]))
    xs, ys, ts = [p[0]], [p[1]], [t0]
    value = float(sensor.measure(conc_field, p[0], p[1]))
    vals = [value]
    armed = value >= c_d
    consecutive = 0
    stuck = 0
    while reach - travelled > 1e-9:
        rad = math.radians(heading)
        u = (math.cos(rad), math.sin(rad))
        step = min(config.sample_interval_m, reach - travelled)
        wall = _ray_exit(p, u, boundary)
        move = min(step, wall)
        if move <= 1e-12:
            # Pinned against the boundary: turn without spending time.
            stuck += 1
            if stuck > 4 * MAX_FAILED_BOUNCES:
                cx, cy = boundary.x0 + boundary.width / 2, boundary.y0 + boundary.height / 2
                heading = math.degrees(math.atan2(cy - p[1], cx - p[0])) % 360.0
            elif stuck % (MAX_FAILED_BOUNCES + 1) == 0:
                heading = interval.draw(rng)
            else:
                heading = bounce_heading(heading, rng)
            continue
        stuck = 0
        p = boundary.clip((p[0] + move * u[0], p[1] + move * u[1]))
        travelled += move
        value = float(sensor.measure(conc_field, p[0], p[1]))
        xs.append(p[0])
        ys.append(p[1])
        ts.append(t0 + travelled / v)
        vals.append(value)
        if value >= c_d:
            armed = True
        hit_wall = wall <= step
        if hit_wall or (armed and value < c_d):
            consecutive += 1
            if consecutive > MAX_FAILED_BOUNCES:
                heading = interval.draw(rng)
                consecutive = 0
                armed = False
            else:
                heading = bounce_heading(heading, rng)
        else:
            consecutive = 0

    samples = SampleSet(np.full(len(xs), k), ts, xs, ys, vals)
    dt = travelled / v
    state = drone.advance(dt, position=p, heading=heading, truncated=drone.battery_remaining < duration)
    return samples, state


def run_phase2_random(config: MissionConfig, start, boundary: Region, samples_in: SampleSet,
                      conc_field, drones: list[DroneState] | None = None, t0: float = 0.0) -> Phase2Result:
    """Random straight-line exploitation from ``start`` inside ``boundary``.

    Each drone draws its initial heading from its own sector, flies at
    constant speed and samples every ``sample_interval_m``. It turns
    around (+/-180 degrees) when it reaches the boundary, or when a sample
    falls below the threshold after it has been inside the plume. After
    more than ``MAX_FAILED_BOUNCES`` consecutive turn-arounds it draws a
    fresh heading and searches straight again.
    """
    if not boundary.contains(start, tol=1e-9):
        raise ValueError("phase-2 start must lie inside the boundary")
    if drones is None:
        drones = [DroneState(k, start, 0.0, t0, max(config.battery_s - t0, 0.0))
                  for k in range(1, config.n_drones + 1)]
    sets, states = [], []
    for drone in drones:
        drone = replace(drone, position=tuple(start))
        s, d = _random_search(drone, drone.id, config, start, boundary, conc_field, t0, config.p2_duration_s)
        sets.append(s)
        states.append(d)
    elapsed = max(d.elapsed for d in states) - t0 if states else 0.0
    return Phase2Result(SampleSet.merge(samples_in, *sets), elapsed, states)


def run_phase2_coverage(config: MissionConfig, sub: Region, start, samples_in: SampleSet, conc_field,
                        drones: list[DroneState] | None = None, t0: float = 0.0) -> Phase2Result:
    """Second lane plan over ``sub`` at phase-2 spacing, launched from ``start``.

    The plan uses the remaining battery as its limit. If no plan fits, the
    heuristic plan is flown anyway and cut off when the drones run out,
    which the result reports as ``truncated``. Flight also stops at
    ``p2_duration_s``.
    """
    r = config.region
    if not (r.x0 <= sub.x0 and sub.x1 <= r.x1 and r.y0 <= sub.y0 and sub.y1 <= r.y1):
        raise ValueError("phase-2 sub-region must lie inside the mission region")
    if drones is None:
        drones = [DroneState(k, start, 0.0, t0, max(config.battery_s - t0, 0.0))
                  for k in range(1, config.n_drones + 1)]
    drones = [replace(d, position=(float(start[0]), float(start[1]))) for d in drones]
    remaining = min(d.battery_remaining for d in drones)
    if remaining <= 0:
        return Phase2Result(SampleSet.merge(samples_in), 0.0, drones, None, True)

    lane = min(config.p2_lane_m, sub.width)
    graph = build_lane_graph(sub, lane, start)
    truncated = False
    try:
        plan = solve(VrpInstance(graph, config.n_drones, config.speed, remaining), config.exact_node_cap)
    except Infeasible:
        plan = solve_heuristic(VrpInstance(graph, config.n_drones, config.speed, math.inf))
        truncated = True
    samples, states = fly_plan(plan, graph, drones, config, conc_field, phase=2, max_time=config.p2_duration_s)
    truncated = truncated or any(d.truncated for d in states)
    elapsed = max(d.elapsed for d in states) - t0
    return Phase2Result(SampleSet.merge(samples_in, samples), elapsed, states, plan, truncated)


@dataclass
class MissionResult:
    config: MissionConfig
    samples: SampleSet
    phase1_samples: SampleSet
    phase2_samples: SampleSet
    grid: EstimateGrid
    labels: LabelGrid
    truth: LabelGrid
    report: ErrorReport
    phase1_time: float
    phase2_time: float
    box: Region | None
    drone_logs: dict = field(default_factory=dict)
    plans: dict = field(default_factory=dict)
    revisits: int = 0

    @property
    def mission_time(self) -> float:
        return self.phase1_time + self.phase2_time


def count_revisits(samples: SampleSet, region: Region) -> int:
    """Times a drone re-enters a box it has already left; reported, never prevented."""
    total = 0
    for k in np.unique(samples.drone_id):
        sel = samples.drone_id == k
        seen, last = set(), None
        for x, y in zip(samples.x[sel], samples.y[sel]):
            if not region.contains((x, y)):
                continue
            b = box_of(region, (x, y))
            if b != last:
                if b in seen:
                    total += 1
                seen.add(b)
                last = b
    return total


def run_mission(config: MissionConfig, conc_field: ConcentrationField, truth: LabelGrid | None = None) -> MissionResult:
    """Fly the configured strategy and score the final map against the true labels."""
    if truth is None:
        truth = ground_truth_labels(conc_field, config.region, config.threshold, config.subsample_n)
    p1 = run_phase1(config, conc_field)
    logs = {"phase1": p1.drones}
    plans = {"phase1": p1.plan}
    empty = SampleSet()

    if not config.two_phase:
        labels = classify(p1.grid, config.threshold)
        return MissionResult(config, p1.samples, p1.samples, empty, p1.grid, labels, truth,
                             score(truth, labels), p1.elapsed, 0.0, p1.box, logs, plans)

    if p1.box is None:
        labels = all_safe(config.region)
        return MissionResult(config, p1.samples, p1.samples, empty, p1.grid, labels, truth,
                             score(truth, labels), p1.elapsed, 0.0, None, logs, plans)

    start = p1.grid.argmax_center()
    drones = _sync(p1.drones, p1.elapsed)
    if config.strategy == "two_phase_random":
        p2 = run_phase2_random(config, start, p1.box, SampleSet(), conc_field, drones, t0=p1.elapsed)
    else:
        p2 = run_phase2_coverage(config, p1.box, start, SampleSet(), conc_field, drones, t0=p1.elapsed)
        plans["phase2"] = p2.plan
    logs["phase2"] = p2.drones

    merged = SampleSet.merge(p1.samples, p2.samples)
    fine = estimate_grid(merged, config.region, config.kernel(2))
    coarse = estimate_grid(merged, config.region, config.kernel(1))
    grid = combine(fine, coarse)
    labels = classify(grid, config.threshold)
    return MissionResult(config, merged, p1.samples, p2.samples, grid, labels, truth, score(truth, labels),
                         p1.elapsed, p2.elapsed, p1.box, logs, plans,
                         revisits=count_revisits(p2.samples, config.region))


SUMMARY_HEADER = "strategy,seed,phase1_s,phase2_s,mission_s,FN,FP,total,acquired"


def summary_row(result: MissionResult) -> str:
    r = result.report
    return (f"{result.config.strategy},{result.config.seed},{result.phase1_time!r},{result.phase2_time!r},"
            f"{result.mission_time!r},{r.fn!r},{r.fp!r},{r.total!r},{int(r.plume_acquired)}")


def mission_log(result: MissionResult) -> dict[str, str]:
    """CSV texts keyed by file stem: per-phase samples plus a one-row summary."""
    return {
        "phase1_samples": result.phase1_samples.to_csv(),
        "phase2_samples": result.phase2_samples.to_csv(),
        "summary": SUMMARY_HEADER + "\n" + summary_row(result) + "\n",
    }


def write_mission_log(result: MissionResult, prefix) -> list[str]:
    paths = []
    for stem, text in mission_log(result).items():
        path = f"{prefix}_{stem}.csv"
        with open(path, "w", newline="") as fh:
            fh.write(text)
        paths.append(path)
    return paths
