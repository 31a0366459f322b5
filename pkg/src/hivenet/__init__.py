"""Packet-level hybrid vehicular network simulator with an SDN control plane.

The package splits cleanly along the problem's seams:

- ``model``     static topology (access points, backhaul, vehicles), path search
- ``radio``     log-distance propagation, RSSI, coverage
- ``mobility``  waypoint motion and the trajectory-prediction oracle
- ``traffic``   ITS traffic models, flow schedules, conformance checks
- ``engine``    the deterministic discrete-event data plane
- ``control``   hierarchical controllers, views, policies, rule installs
- ``telemetry`` delivery-ratio/round-trip series, CSV and SVG export
- ``scenario``  scenario documents and builtins
- ``cli``       the ``hivenet`` command
"""

from .control import (
    MODE_BASELINE,
    MODE_SDN,
    LoadReport,
    NetworkView,
    Policy,
    evaluate_handovers,
    predicted_utilization,
    select_attachment,
    sync_views,
)
from .engine import RunResult, Simulation, run
from .mobility import Region, TrajectoryPlan, position_at, predict_position, region_density
from .model import (
    AccessPoint,
    ApKind,
    BackhaulLink,
    Interface,
    Position,
    Switch,
    Topology,
    Vehicle,
    build_topology,
    shortest_backhaul_path,
)
from .radio import RadioParams, candidate_attachments, coverage_radius_m, path_loss_db, rssi_dbm
from .scenario import ScenarioConfig, builtin_names, load_builtin, parse_scenario, serialize_scenario
from .traffic import (
    M1,
    M2,
    M3,
    M4,
    ConformanceReport,
    FlowSpec,
    TrafficModel,
    check_conformance,
    model_period_ms,
    packet_schedule,
)

__version__ = "0.1.0"
