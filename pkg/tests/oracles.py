"""Slow, independent reference implementations used by the tests."""

import itertools
import math


def subset_path_costs(graph):
    """Cheapest open path from the depot through each subset of lanes.

    Plain enumeration of every order and every lane orientation; keyed by
    frozenset of zero-based lane indices.
    """
    pos = {n: tuple(graph.position(n)) for n in range(1, graph.n_nodes + 1)}

    def dist(a, b):
        return math.dist(pos[a], pos[b])

    lanes = list(range(graph.n_lanes))
    best = {frozenset(): 0.0}
    for size in range(1, len(lanes) + 1):
        for subset in itertools.combinations(lanes, size):
            cost = math.inf
            for order in itertools.permutations(subset):
                for flips in itertools.product((0, 1), repeat=size):
                    here, total = 1, 0.0
                    for lane, f in zip(order, flips):
                        lo, hi = 2 * lane + 2, 2 * lane + 3
                        entry, exit_ = (hi, lo) if f else (lo, hi)
                        total += dist(here, entry) + dist(entry, exit_)
                        here = exit_
                    cost = min(cost, total)
            best[frozenset(subset)] = cost
    return best


def set_partitions(items, max_parts):
    """All partitions of ``items`` into at most ``max_parts`` non-empty blocks."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest, max_parts):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        if len(part) < max_parts:
            yield [[first]] + part


def exhaustive_makespan(graph, n_drones, speed, battery_s):
    """Optimal makespan in seconds, or None when nothing fits the battery."""
    costs = subset_path_costs(graph)
    best = None
    for part in set_partitions(list(range(graph.n_lanes)), n_drones):
        times = [costs[frozenset(block)] / speed for block in part] or [0.0]
        if max(times) > battery_s:
            continue
        if best is None or max(times) < best:
            best = max(times)
    return best


def count_errors(truth, estimate):
    """FN%, FP% by walking two flat boolean lists."""
    pos = sum(1 for t in truth if t)
    neg = len(truth) - pos
    fn = sum(1 for t, e in zip(truth, estimate) if t and not e)
    fp = sum(1 for t, e in zip(truth, estimate) if e and not t)
    fn_pct = 100.0 * fn / pos
    fp_pct = 100.0 * fp / neg if neg else 0.0
    return fn_pct, fp_pct
