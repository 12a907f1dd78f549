"""
Coarse search first, then a closer look
=======================================

Phase 1 flies wide lanes to find the plume. Phase 2 either sends the
drones on straight random runs that turn around at the plume edge, or
flies tight lanes over the box around the plume. Both get the same
total time as a 7 m single pass.
"""
from plumesurvey import ConcentrationField, MissionConfig, PlumeSource, run_mission

field = ConcentrationField(PlumeSource((90.3, 20.7)))

reference = run_mission(MissionConfig(p1_lane_m=7), field)
budget = reference.mission_time
print(f"single phase, 7 m lanes: {reference.report.total:.2f}% total error in {budget:.1f} s")

coarse = MissionConfig(p1_lane_m=10)
phase1 = run_mission(coarse, field).mission_time
for strategy in ("two_phase_random", "two_phase_coverage"):
    config = MissionConfig(strategy=strategy, p1_lane_m=10, p2_duration_s=budget - phase1, seed=1)
    result = run_mission(config, field)
    print(f"{strategy:>19}: {result.report.total:.2f}% total error in {result.mission_time:.1f} s"
          f" (phase 2 box {result.box.width:.0f} x {result.box.height:.0f} m, {result.revisits} box revisits)")
