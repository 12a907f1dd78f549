import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import exhaustive_makespan, subset_path_costs
from plumesurvey.region_grid import Region, build_lane_graph
from plumesurvey.vrp_router import (
    Infeasible,
    InstanceTooLarge,
    RoutePlan,
    VrpInstance,
    format_instance,
    format_plan,
    parse_instance,
    parse_plan,
    route_time,
    solve,
    solve_exact,
    solve_heuristic,
    validate,
)


def random_instance(rng, max_lanes=6, tight=False):
    n_lanes = int(rng.integers(1, max_lanes + 1))
    lane = float(rng.choice([1.0, 2.0, 2.5, 5.0]))
    width = int(np.ceil(n_lanes * lane))
    while int(np.floor(width / lane + 1e-9)) != n_lanes:
        width -= 1
    region = Region(0, 0, width, int(rng.integers(3, 40)))
    depot = (rng.uniform(0, width), rng.uniform(0, region.height)) if rng.random() < 0.5 else None
    g = build_lane_graph(region, lane, depot)
    battery = 1e6
    if tight:
        battery = rng.uniform(0.3, 1.2) * sum(g.lane_length(i) for i in range(g.n_lanes)) / 2.0
    return VrpInstance(g, int(rng.integers(1, 4)), float(rng.uniform(1, 15)), battery)


def test_one_lane_one_drone():
    g = build_lane_graph(Region(0, 0, 2, 10), 2.0, depot=(1.0, 0.0))
    plan = solve_exact(VrpInstance(g, 1, 1.0, 100.0))
    assert plan.routes == ((1, 2, 3),)
    assert plan.makespan == pytest.approx(10.0)


def test_two_lanes_two_drones_split():
    g = build_lane_graph(Region(0, 0, 4, 10), 2.0, depot=(2.0, 0.0))
    plan = solve_exact(VrpInstance(g, 2, 1.0, 100.0))
    assert sorted(len(r) for r in plan.routes) == [3, 3]
    assert plan.flight_times == pytest.approx((11.0, 11.0))


def test_extra_drones_stay_home():
    g = build_lane_graph(Region(0, 0, 2, 10), 2.0)
    plan = solve_exact(VrpInstance(g, 3, 1.0, 100.0))
    assert sorted(plan.routes, key=len)[:2] == [(1,), (1,)]
    assert validate(plan, VrpInstance(g, 3, 1.0, 100.0)) == []


def test_battery_too_small_is_infeasible():
    g = build_lane_graph(Region(0, 0, 4, 10), 2.0)
    with pytest.raises(Infeasible):
        solve_exact(VrpInstance(g, 2, 1.0, 9.0))
    with pytest.raises(Infeasible):
        solve_heuristic(VrpInstance(g, 2, 1.0, 9.0))


def test_node_cap():
    g = build_lane_graph(Region(0, 0, 14, 10), 2.0)
    assert g.n_nodes == 15
    with pytest.raises(InstanceTooLarge):
        solve_exact(VrpInstance(g, 2, 1.0, 1e6))
    # the dispatcher falls back to the heuristic
    assert validate(solve(VrpInstance(g, 2, 1.0, 1e6)), VrpInstance(g, 2, 1.0, 1e6)) == []


def test_subset_oracle_on_hand_case():
    # depot at the origin, one lane at x=1 from y=0 to y=4
    g = build_lane_graph(Region(0, 0, 2, 4), 2.0, depot=(0.0, 0.0))
    assert subset_path_costs(g)[frozenset({0})] == pytest.approx(1.0 + 4.0)


@pytest.mark.parametrize("seed", range(30))
def test_exact_matches_exhaustive_enumeration(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, tight=seed % 3 == 0)
    expected = exhaustive_makespan(inst.graph, inst.n_drones, inst.speed, inst.battery_s)
    if expected is None:
        with pytest.raises(Infeasible):
            solve_exact(inst)
        return
    plan = solve_exact(inst)
    assert plan.makespan == pytest.approx(expected, rel=1e-12)
    assert validate(plan, inst) == []


@pytest.mark.parametrize("seed", range(30))
def test_heuristic_within_bound_of_exact(seed):
    inst = random_instance(np.random.default_rng(1000 + seed))
    exact = solve_exact(inst).makespan
    heur = solve_heuristic(inst)
    assert validate(heur, inst) == []
    assert heur.makespan <= 1.3 * exact + 1e-12


def test_full_region_single_drone_plan():
    inst = VrpInstance(build_lane_graph(Region(0, 0, 200, 100), 2.0), 1, 10.0, 1800.0)
    plan = solve(inst)
    assert validate(plan, inst) == []
    # 100 lanes of 100 m, 99 hops of 2 m, 99 m from the edge midpoint to the first lane
    assert plan.makespan == pytest.approx(1029.7, abs=1e-9)
    assert 970 <= plan.makespan <= 1070


def test_relabelling_drones_preserves_makespan():
    inst = VrpInstance(build_lane_graph(Region(0, 0, 10, 20), 2.0), 3, 2.0, 1e6)
    plan = solve_exact(inst)
    rev = RoutePlan(plan.routes[::-1], plan.flight_times[::-1])
    assert validate(rev, inst) == []
    assert rev.makespan == plan.makespan


@given(st.integers(0, 10_000), st.sampled_from([0.5, 2.0, 4.0, 8.0]))
@settings(max_examples=30, deadline=None)
def test_speed_scaling_is_exact(seed, factor):
    inst = random_instance(np.random.default_rng(seed))
    scaled = VrpInstance(inst.graph, inst.n_drones, inst.speed * factor, inst.battery_s)
    a, b = solve_exact(inst), solve_exact(scaled)
    assert b.makespan == a.makespan / factor


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_route_time_is_sum_of_leg_times(seed):
    inst = random_instance(np.random.default_rng(seed))
    plan = solve_heuristic(inst)
    for route, t in zip(plan.routes, plan.flight_times):
        legs = sum(inst.graph.d(i, j) for i, j in zip(route[:-1], route[1:]))
        assert route_time(route, inst.graph, inst.speed) == pytest.approx(legs / inst.speed)
        assert t == pytest.approx(legs / inst.speed)


def test_validate_reports_each_violation():
    g = build_lane_graph(Region(0, 0, 6, 10), 2.0, depot=(0.0, 0.0))
    inst = VrpInstance(g, 2, 1.0, 1e6)
    good = solve_exact(inst)
    assert validate(good, inst) == []

    def msgs(routes, times=None):
        if times is None:
            times = tuple(sum(g.d(i, j) for i, j in zip(r[:-1], r[1:])) for r in routes)
        return " | ".join(validate(RoutePlan(tuple(routes), tuple(times)), inst))

    assert "duplicate visit" in msgs([(1, 2, 3, 4, 5, 6, 7), (1, 2, 3)])
    assert "lane pair broken" in msgs([(1, 2, 4, 3, 5, 6, 7), (1,)])
    assert "lane pair broken" in msgs([(1, 2, 3, 4), (1, 5, 6, 7)])
    assert "not visited" in msgs([(1, 2, 3), (1, 4, 5)])
    assert "does not start at depot" in msgs([(2, 3, 4, 5, 6, 7), (1,)])
    assert "flight time mismatch" in msgs([(1, 2, 3, 4, 5, 6, 7), (1,)], (1.0, 0.0))
    tight = VrpInstance(g, 2, 1.0, 5.0)
    assert "battery exceeded" in " ".join(validate(good, tight))


def test_plan_and_instance_text_round_trip():
    inst = random_instance(np.random.default_rng(7))
    plan = solve(inst)
    text = format_plan(plan, inst)
    assert text.splitlines()[0] == "N,v,T_b"
    inst2, plan2 = parse_plan(text, inst.graph)
    assert plan2.routes == plan.routes
    assert plan2.flight_times == pytest.approx(plan.flight_times)
    assert (inst2.n_drones, inst2.speed, inst2.battery_s) == (inst.n_drones, inst.speed, inst.battery_s)
    back = parse_instance(format_instance(inst))
    np.testing.assert_array_equal(back.graph.nodes, inst.graph.nodes)
    assert back.graph.region == inst.graph.region
    assert solve(back).makespan == plan.makespan
