"""Min-max multi-drone lane routing.

Every route is an open path that starts at the depot and visits whole
lanes: both endpoints of a lane appear back to back, in either order.
The objective is the makespan, the longest per-drone flight time.
Internally the solvers work in meters and convert to seconds at the end,
so scaling the speed scales every time exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .region_grid import LaneGraph

EXACT_NODE_CAP = 13
_EPS = 1e-9


class Infeasible(Exception):
    """No plan keeps every drone within its battery."""


class InstanceTooLarge(Exception):
    """The exact solver refuses graphs above its node cap."""


@dataclass(frozen=True)
class VrpInstance:
    graph: LaneGraph
    n_drones: int
    speed: float
    battery_s: float

    def __post_init__(self):
        if self.n_drones < 1:
            raise ValueError("n_drones must be at least 1")
        if not self.speed > 0:
            raise ValueError("speed must be positive")
        if not self.battery_s > 0:
            raise ValueError("battery_s must be positive")


@dataclass(frozen=True)
class RoutePlan:
    routes: tuple[tuple[int, ...], ...]
    flight_times: tuple[float, ...]

    @property
    def makespan(self) -> float:
        return max(self.flight_times) if self.flight_times else 0.0

    def edges(self, k: int) -> list[tuple[int, int]]:
        """Visited (i, j) pairs of drone ``k``; these are the x_ij^k = 1 entries."""
        r = self.routes[k]
        return list(zip(r[:-1], r[1:]))


def route_length(route, graph: LaneGraph) -> float:
    return float(sum(graph.d(i, j) for i, j in zip(route[:-1], route[1:])))


def route_time(route, graph: LaneGraph, v: float) -> float:
    """Flight time of an open route: summed leg lengths over speed."""
    if not route or route[0] != graph.depot:
        raise ValueError("route must start at the depot")
    for node in route:
        graph._check(node)
    return route_length(route, graph) / v


def _plan_from_lanes(lane_routes, graph: LaneGraph, v: float, n_drones: int) -> RoutePlan:
    routes = []
    for seq in lane_routes:
        nodes = [graph.depot]
        for entry, exit_ in seq:
            nodes += [entry + 1, exit_ + 1]
        routes.append(tuple(nodes))
    while len(routes) < n_drones:
        routes.append((graph.depot,))
    return RoutePlan(
        routes=tuple(routes),
        flight_times=tuple(route_length(r, graph) / v for r in routes),
    )


def _lane_ends(graph: LaneGraph, lane: int, orientation: int) -> tuple[int, int]:
    """(entry, exit) as zero-based node indices; orientation 0 enters at the lower end."""
    a, b = 2 * lane + 1, 2 * lane + 2
    return (a, b) if orientation == 0 else (b, a)


def nearest_neighbor_order(lanes, graph: LaneGraph) -> list[tuple[int, int]]:
    """Greedy lane order from the depot: always enter the closest free lane end."""
    D = graph.distances
    free = sorted(lanes)
    pos, seq = 0, []
    while free:
        best = None
        for lane in free:
            for o in (0, 1):
                entry, exit_ = _lane_ends(graph, lane, o)
                key = (D[pos, entry], lane, o)
                if best is None or key < best[0]:
                    best = (key, entry, exit_, lane)
        _, entry, exit_, lane = best
        seq.append((entry, exit_))
        free.remove(lane)
        pos = exit_
    return seq


def two_opt(seq, D: np.ndarray, start: int = 0) -> list[tuple[int, int]]:
    """2-opt over whole lanes on an open path from ``start``.

    Reversing lanes i..j also flips each of them, so lane pairs stay
    contiguous; i == j is a plain orientation flip.
    """
    seq = list(seq)
    n = len(seq)
    improved = True
    while improved:
        improved = False
        for i in range(n):
            prev = start if i == 0 else seq[i - 1][1]
            for j in range(i, n):
                a_entry = seq[i][0]
                b_exit = seq[j][1]
                delta = D[prev, b_exit] - D[prev, a_entry]
                if j + 1 < n:
                    nxt = seq[j + 1][0]
                    delta += D[a_entry, nxt] - D[b_exit, nxt]
                if delta < -_EPS:
                    seq[i : j + 1] = [(x, e) for e, x in reversed(seq[i : j + 1])]
                    improved = True
    return seq


def _contiguous_blocks(n_lanes: int, bounds) -> list[list[int]]:
    edges = [0, *bounds, n_lanes]
    return [list(range(a, b)) for a, b in zip(edges[:-1], edges[1:])]


def _lpt_blocks(lengths, n_drones: int) -> list[list[int]]:
    loads = [0.0] * n_drones
    assigned: list[list[int]] = [[] for _ in range(n_drones)]
    for lane in sorted(range(len(lengths)), key=lambda i: -lengths[i]):
        k = min(range(n_drones), key=lambda i: loads[i])
        assigned[k].append(lane)
        loads[k] += lengths[lane]
    return assigned


def solve_heuristic(instance: VrpInstance) -> RoutePlan:
    """Best of two lane assignments, each ordered by nearest neighbour plus 2-opt.

    Candidates are longest-first balancing of lane lengths and contiguous
    blocks of neighbouring lanes, whose boundaries are then hill-climbed
    one lane at a time while the makespan drops.
    """
    g, v, N = instance.graph, instance.speed, instance.n_drones
    n_lanes = g.n_lanes
    lengths = [g.lane_length(i) for i in range(n_lanes)]
    if any(length / v > instance.battery_s for length in lengths):
        raise Infeasible("a single lane is longer than the battery allows")

    def build(blocks):
        lane_routes = [two_opt(nearest_neighbor_order(lanes, g), g.distances) for lanes in blocks]
        return _plan_from_lanes(lane_routes, g, v, N)

    best = build(_lpt_blocks(lengths, N))

    k = min(N, n_lanes)
    if k > 1:
        bounds = [round(i * n_lanes / k) for i in range(1, k)]
        plan = build(_contiguous_blocks(n_lanes, bounds))
        improved = True
        while improved:
            improved = False
            for i in range(len(bounds)):
                lo = bounds[i - 1] + 1 if i else 1
                hi = bounds[i + 1] - 1 if i + 1 < len(bounds) else n_lanes - 1
                for step in (-1, 1):
                    b = bounds[i] + step
                    if not lo <= b <= hi:
                        continue
                    trial = bounds[:i] + [b] + bounds[i + 1:]
                    cand = build(_contiguous_blocks(n_lanes, trial))
                    if cand.makespan < plan.makespan - _EPS:
                        bounds, plan, improved = trial, cand, True
        if plan.makespan < best.makespan - _EPS:
            best = plan

    if any(t > instance.battery_s for t in best.flight_times):
        raise Infeasible("heuristic plan exceeds the battery on at least one drone")
    return best


def solve_exact(instance: VrpInstance, node_cap: int = EXACT_NODE_CAP) -> RoutePlan:
    """Provably min-makespan plan by depth-first branch and bound.

    Drones are filled one after another. Because drones are identical,
    each new route must contain the lowest-numbered lane still free,
    which removes relabelled duplicates. A node is pruned when
    max(current makespan, (remaining lane length + current route length)
    / drones left) cannot beat the incumbent; transitions are ignored in
    that bound so it never overestimates.
    """
    g, v, T_b, N = instance.graph, instance.speed, instance.battery_s, instance.n_drones
    if g.n_nodes > node_cap:
        raise InstanceTooLarge(f"{g.n_nodes} nodes exceeds exact cap {node_cap}")
    D = g.distances
    n_lanes = g.n_lanes
    lane_len = [g.lane_length(i) for i in range(n_lanes)]

    best_len = math.inf
    best_routes = None
    try:
        seed = solve_heuristic(instance)
        best_len = max(route_length(r, g) for r in seed.routes)
        best_routes = seed
    except Infeasible:
        pass

    def fits(length: float) -> bool:
        return length / v <= T_b

    def dfs(k, pos, cur_len, done_max, remaining, must, cur, finished):
        nonlocal best_len, best_routes
        rem_work = sum(lane_len[i] for i in remaining)
        bound = max(done_max, cur_len, (rem_work + cur_len) / (N - k))
        if bound >= best_len - _EPS:
            return
        if not remaining:
            best_len = max(done_max, cur_len)
            best_routes = finished + [list(cur)]
            return
        moves = []
        for lane in remaining:
            for o in (0, 1):
                entry, exit_ = _lane_ends(g, lane, o)
                moves.append((D[pos, entry], lane, o, entry, exit_))
        moves.sort()
        for step, lane, o, entry, exit_ in moves:
            new_len = cur_len + step + lane_len[lane]
            if not fits(new_len) or max(done_max, new_len) >= best_len - _EPS:
                continue
            cur.append((entry, exit_))
            dfs(k, exit_, new_len, done_max, remaining - {lane}, must, cur, finished)
            cur.pop()
        if k < N - 1 and cur and any(e == 2 * must + 1 or e == 2 * must + 2 for e, _ in cur):
            dfs(k + 1, 0, 0.0, max(done_max, cur_len), remaining, min(remaining), [], finished + [list(cur)])

    if n_lanes == 0:
        return _plan_from_lanes([], g, v, N)
    dfs(0, 0, 0.0, 0.0, frozenset(range(n_lanes)), 0, [], [])

    if best_routes is None:
        raise Infeasible("no plan fits within the battery")
    if isinstance(best_routes, RoutePlan):
        return best_routes
    return _plan_from_lanes(best_routes, g, v, N)


def solve(instance: VrpInstance, node_cap: int = EXACT_NODE_CAP) -> RoutePlan:
    """Exact below the node cap, heuristic above it."""
    if instance.graph.n_nodes <= node_cap:
        return solve_exact(instance, node_cap)
    return solve_heuristic(instance)


def validate(plan: RoutePlan, instance: VrpInstance) -> list[str]:
    """Every broken plan invariant as a short message; empty when the plan is valid."""
    g, v = instance.graph, instance.speed
    problems = []
    if len(plan.routes) != instance.n_drones:
        problems.append(f"expected {instance.n_drones} routes, got {len(plan.routes)}")
    if len(plan.flight_times) != len(plan.routes):
        problems.append("flight_times length does not match routes")

    seen: dict[int, int] = {}
    for k, route in enumerate(plan.routes):
        if not route or route[0] != g.depot:
            problems.append(f"route {k} does not start at depot")
            continue
        bad = [n for n in route if not (isinstance(n, (int, np.integer)) and 1 <= n <= g.n_nodes)]
        if bad:
            problems.append(f"route {k} has unknown node ids {bad}")
            continue
        for node in route[1:]:
            if node == g.depot or node in seen:
                problems.append(f"duplicate visit of node {node}")
            seen[node] = k
        body = route[1:]
        for p in range(0, len(body), 2):
            pair = body[p : p + 2]
            if len(pair) < 2 or g.lane_of(pair[0]) is None or g.partner(pair[0]) != pair[1]:
                problems.append(f"lane pair broken in route {k} at position {p + 1}")
                break
        if k < len(plan.flight_times):
            t = route_length(route, g) / v
            stored = plan.flight_times[k]
            if not math.isclose(t, stored, rel_tol=1e-9, abs_tol=1e-12):
                problems.append(f"flight time mismatch on route {k}: stored {stored}, recomputed {t}")
            if stored > instance.battery_s:
                problems.append(f"battery exceeded on route {k}")

    for node in range(2, g.n_nodes + 1):
        if node not in seen:
            problems.append(f"node {node} not visited")
    for a, b in g.lane_pairs:
        if a in seen and b in seen and seen[a] != seen[b]:
            problems.append(f"lane pair broken: ({a},{b}) split across drones")
    return problems


def format_plan(plan: RoutePlan, instance: VrpInstance) -> str:
    """Header ``N,v,T_b`` then one comma-separated node-id line per route."""
    lines = [
        "N,v,T_b",
        f"{instance.n_drones},{instance.speed!r},{instance.battery_s!r}",
    ]
    lines += [",".join(str(n) for n in r) for r in plan.routes]
    return "\n".join(lines) + "\n"


def parse_plan(text: str, graph: LaneGraph) -> tuple[VrpInstance, RoutePlan]:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "N,v,T_b":
        raise ValueError("missing plan header")
    n, v, t_b = lines[1].split(",")
    instance = VrpInstance(graph, int(n), float(v), float(t_b))
    routes = tuple(tuple(int(x) for x in ln.split(",")) for ln in lines[2:])
    plan = RoutePlan(routes, tuple(route_length(r, graph) / instance.speed for r in routes))
    return instance, plan


def format_instance(instance: VrpInstance) -> str:
    """Plan header plus one ``id,x,y`` line per node."""
    lines = [
        "N,v,T_b,lane_distance",
        f"{instance.n_drones},{instance.speed!r},{instance.battery_s!r},{instance.graph.lane_distance!r}",
        "region," + ",".join(repr(float(c)) for c in (
            instance.graph.region.x0, instance.graph.region.y0,
            instance.graph.region.width, instance.graph.region.height)),
    ]
    lines += [f"{i + 1},{x!r},{y!r}" for i, (x, y) in enumerate(instance.graph.nodes.tolist())]
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> VrpInstance:
    from .region_grid import Region

    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "N,v,T_b,lane_distance":
        raise ValueError("missing instance header")
    n, v, t_b, ld = lines[1].split(",")
    _, *rect = lines[2].split(",")
    region = Region(*(float(c) for c in rect))
    nodes = np.array([[float(x), float(y)] for _, x, y in (ln.split(",") for ln in lines[3:])])
    return VrpInstance(LaneGraph(nodes, float(ld), region), int(n), float(v), float(t_b))
