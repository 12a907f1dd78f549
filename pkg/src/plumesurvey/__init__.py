"""Planning and scoring multi-drone surveys of a toxic gas plume."""

from .flight_sim import DroneState, Sample, SampleSet, SensorModel, bounce_heading, fly_polyline
from .harness import ExperimentSpec, parse_config, run_experiment, serialize_config
from .kernel_estimator import EstimateGrid, KernelSpec, estimate_at, estimate_grid, plume_bounding_box
from .metrics import ErrorReport, LabelGrid, classify, score
from .mission import MissionConfig, MissionResult, heading_interval, run_mission
from .plume_field import (
    ConcentrationField,
    DangerThreshold,
    PlumeSource,
    concentration_at,
    ground_truth_labels,
)
from .region_grid import Box, LaneGraph, Region, box_of, build_lane_graph
from .vrp_router import (
    Infeasible,
    InstanceTooLarge,
    RoutePlan,
    VrpInstance,
    route_time,
    solve,
    solve_exact,
    solve_heuristic,
    validate,
)

__version__ = "0.1.0"
