"""
Lane coverage plans for one and three drones
============================================

The area is cut into lanes parallel to the wind. A min-max router hands
whole lanes to each drone so the slowest drone finishes as early as
possible.
"""
from plumesurvey import Region, VrpInstance, build_lane_graph, solve, validate

region = Region(0, 0, 200, 100)

print("lane   1 drone   3 drones")
for lane in (20, 10, 7, 5, 2):
    graph = build_lane_graph(region, lane)
    times = []
    for n in (1, 3):
        instance = VrpInstance(graph, n_drones=n, speed=10.0, battery_s=1800.0)
        plan = solve(instance)
        assert validate(plan, instance) == []
        times.append(plan.makespan)
    print(f"{lane:4d} {times[0]:8.1f} s {times[1]:8.1f} s")

# a small instance is solved exactly; look at the routes
graph = build_lane_graph(Region(0, 0, 60, 40), 10)
plan = solve(VrpInstance(graph, 2, 10.0, 1800.0))
print()
for k, (route, t) in enumerate(zip(plan.routes, plan.flight_times), 1):
    print(f"drone {k}: nodes {route}  {t:.1f} s")
