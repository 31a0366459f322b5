"""Scenario documents: strict JSON parsing, canonical serialization, builtins.

A scenario file declares the whole experiment: topology, radio parameters,
vehicles with waypoint plans, flows, later phases injecting more vehicles
and flows, scripted impairments and the control policy. Parsing is strict:
unknown keys and missing required fields raise with the offending path, and
the assembled configuration is validated against every structural invariant
before it is returned.

Three builtins ship with the package:

- ``rsu-overload``     two-phase load experiment on four RSUs (the second
                       phase overloads one RSU and the load-aware policy
                       hands the affected vehicle over);
- ``collision-duplication``  safety traffic duplicated over two disjoint
                       backhaul paths under scripted per-path loss;
- ``birdseye-multihomed``    video streams from a dual-homed vehicle split
                       across the RSU and cellular networks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .control import MODE_BASELINE, MODE_SDN, Policy
from .errors import (
    MissingField,
    ParseError,
    SemanticError,
    UnknownKey,
)
from .errors import HivenetError
from .model import (
    AccessPoint,
    ApKind,
    BackhaulLink,
    Interface,
    Position,
    Switch,
    Vehicle,
    build_topology,
)
from .mobility import TrajectoryPlan
from .radio import RadioParams
from .traffic import MODELS, FlowSpec

BUILTIN_RSU_OVERLOAD = "rsu-overload"
BUILTIN_COLLISION_DUP = "collision-duplication"
BUILTIN_BIRDSEYE = "birdseye-multihomed"


@dataclass(frozen=True)
class EngineParams:
    attach_latency_s: float = 0.8
    control_latency_s: float = 0.005
    report_interval_s: float = 1.0
    default_table_action: str = "drop"  # drop | to_controller
    proactive_paths: bool = True

    def __post_init__(self):
        if self.default_table_action not in ("drop", "to_controller"):
            raise ValueError(f"unknown default action {self.default_table_action!r}")


@dataclass(frozen=True)
class Impairment:
    at_s: float
    loss_prob: float
    link: Optional[Tuple[int, int]] = None
    ap: Optional[int] = None
    direction: Optional[str] = None  # up | down

    def __post_init__(self):
        if not (0.0 <= self.loss_prob <= 1.0):
            raise ValueError("loss probability outside [0,1]")
        if (self.link is None) == (self.ap is None):
            raise ValueError("impairment targets exactly one of link or ap")


@dataclass
class Phase:
    start_s: float
    vehicles: List[Vehicle] = field(default_factory=list)
    flows: List[FlowSpec] = field(default_factory=list)


@dataclass
class ScenarioConfig:
    name: str
    area: Tuple[float, float]
    duration_s: float
    radio_defaults: RadioParams
    engine: EngineParams
    policy: Policy
    access_points: List[AccessPoint]
    switches: List[Switch]
    backhaul_links: List[BackhaulLink]
    vehicles: List[Vehicle]
    flows: List[FlowSpec]
    phases: List[Phase]
    impairments: List[Impairment]
    duplicate_flows: List[str]
    seed: int

    def all_vehicles(self) -> List[Vehicle]:
        out = list(self.vehicles)
        for phase in self.phases:
            out.extend(phase.vehicles)
        return out

    def all_flows(self) -> List[FlowSpec]:
        out = list(self.flows)
        for phase in self.phases:
            out.extend(phase.flows)
        return out

    def vehicle_activations(self) -> List[Tuple[Vehicle, float]]:
        out = [(veh, 0.0) for veh in self.vehicles]
        for phase in self.phases:
            out.extend((veh, phase.start_s) for veh in phase.vehicles)
        return out

    def flow_activations(self) -> List[Tuple[FlowSpec, float]]:
        out = [(spec, 0.0) for spec in self.flows]
        for phase in self.phases:
            out.extend((spec, phase.start_s) for spec in phase.flows)
        return out

    def phase_bounds_s(self) -> List[float]:
        return [0.0] + [phase.start_s for phase in self.phases] + [self.duration_s]


# ---------------------------------------------------------------------------
# strict parsing
# ---------------------------------------------------------------------------

class _Section:
    """Dict wrapper that tracks consumed keys and reports leftovers."""

    def __init__(self, raw: object, path: str):
        if not isinstance(raw, dict):
            raise SemanticError(f"expected an object at '{path}'")
        self.raw = dict(raw)
        self.path = path

    def take(self, key: str, required: bool = False, default=None):
        if key in self.raw:
            return self.raw.pop(key)
        if required:
            raise MissingField(self._sub(key))
        return default

    def done(self) -> None:
        if self.raw:
            raise UnknownKey(self._sub(sorted(self.raw)[0]))

    def _sub(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key


def _number(value, path: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise SemanticError(f"expected a number at '{path}'")
    return float(value)


def _integer(value, path: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise SemanticError(f"expected an integer at '{path}'")
    return value


def _string(value, path: str) -> str:
    if not isinstance(value, str):
        raise SemanticError(f"expected a string at '{path}'")
    return value


def _pair(value, path: str) -> Tuple[float, float]:
    if not isinstance(value, list) or len(value) != 2:
        raise SemanticError(f"expected [x, y] at '{path}'")
    return _number(value[0], path + "[0]"), _number(value[1], path + "[1]")


def _parse_radio(raw: object, path: str, base: RadioParams) -> RadioParams:
    section = _Section(raw, path)
    params = RadioParams(
        tx_power_dbm=_number(section.take("tx_power_dbm", default=base.tx_power_dbm), path),
        ref_distance_m=_number(section.take("ref_distance_m", default=base.ref_distance_m), path),
        ref_loss_db=_number(section.take("ref_loss_db", default=base.ref_loss_db), path),
        exponent=_number(section.take("exponent", default=base.exponent), path),
        rx_threshold_dbm=_number(section.take("rx_threshold_dbm", default=base.rx_threshold_dbm), path),
    )
    section.done()
    return params


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and fully validate one scenario document."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}", exc.msg)

    top = _Section(raw, "")
    name = _string(top.take("name", default="custom"), "name")
    area = _pair(top.take("area_m", required=True), "area_m")
    duration_s = _number(top.take("duration_s", required=True), "duration_s")
    seed = _integer(top.take("seed", default=0), "seed")

    radio_defaults = _parse_radio(top.take("radio_defaults", default={}), "radio_defaults", RadioParams())

    engine_section = _Section(top.take("engine", default={}), "engine")
    try:
        engine = EngineParams(
            attach_latency_s=_number(engine_section.take("attach_latency_s", default=0.8), "engine.attach_latency_s"),
            control_latency_s=_number(engine_section.take("control_latency_s", default=0.005), "engine.control_latency_s"),
            report_interval_s=_number(engine_section.take("report_interval_s", default=1.0), "engine.report_interval_s"),
            default_table_action=_string(engine_section.take("default_table_action", default="drop"), "engine.default_table_action"),
            proactive_paths=bool(engine_section.take("proactive_paths", default=True)),
        )
    except ValueError as exc:
        raise SemanticError(f"engine: {exc}")
    engine_section.done()

    policy_section = _Section(top.take("policy", default={}), "policy")
    try:
        policy = Policy(
            mode=_string(policy_section.take("mode", default=MODE_SDN), "policy.mode"),
            util_trigger=_number(policy_section.take("util_trigger", default=0.9), "policy.util_trigger"),
            hysteresis=_number(policy_section.take("hysteresis", default=0.2), "policy.hysteresis"),
            horizon_s=_number(policy_section.take("horizon_s", default=5.0), "policy.horizon_s"),
            tick_s=_number(policy_section.take("tick_s", default=1.0), "policy.tick_s"),
        )
    except ValueError as exc:
        raise SemanticError(f"policy: {exc}")
    policy_section.done()

    names: Dict[str, int] = {}

    def register(name_: str, node_id: int, path: str) -> None:
        if name_ in names:
            raise SemanticError(f"node name {name_!r} reused at '{path}'")
        names[name_] = node_id

    access_points: List[AccessPoint] = []
    for i, item in enumerate(top.take("access_points", default=[]) or []):
        path = f"access_points[{i}]"
        section = _Section(item, path)
        ap_name = _string(section.take("name", required=True), path)
        kind_raw = _string(section.take("kind", required=True), path)
        if kind_raw not in ("rsu", "base_station"):
            raise SemanticError(f"unknown access point kind {kind_raw!r} at '{path}.kind'")
        radio_raw = section.take("radio", default=None)
        radio = _parse_radio(radio_raw, path + ".radio", radio_defaults) if radio_raw is not None else radio_defaults
        try:
            ap = AccessPoint(
                id=_integer(section.take("id", required=True), path),
                name=ap_name,
                kind=ApKind(kind_raw),
                position=Position(*_pair(section.take("position", required=True), path + ".position")),
                radio=radio,
                wireless_capacity_bps=_integer(section.take("wireless_capacity_bps", required=True), path),
                buffer_packets=_integer(section.take("buffer_packets", default=300), path),
            )
        except ValueError as exc:
            raise SemanticError(f"{path}: {exc}")
        section.done()
        register(ap_name, ap.id, path)
        access_points.append(ap)

    switches: List[Switch] = []
    for i, item in enumerate(top.take("switches", default=[]) or []):
        path = f"switches[{i}]"
        section = _Section(item, path)
        sw_name = _string(section.take("name", required=True), path)
        sw = Switch(
            id=_integer(section.take("id", required=True), path),
            name=sw_name,
            position=Position(*_pair(section.take("position", required=True), path + ".position")),
        )
        section.done()
        register(sw_name, sw.id, path)
        switches.append(sw)

    def parse_vehicles(items: Iterable, base_path: str) -> List[Vehicle]:
        out = []
        for i, item in enumerate(items or []):
            path = f"{base_path}[{i}]"
            section = _Section(item, path)
            veh_name = _string(section.take("name", required=True), path)
            ifaces = section.take("interfaces", default=["dsrc"])
            if not isinstance(ifaces, list) or not ifaces:
                raise SemanticError(f"expected a non-empty interface list at '{path}.interfaces'")
            parsed_ifaces = []
            for raw_iface in ifaces:
                if raw_iface not in ("dsrc", "cellular"):
                    raise SemanticError(f"unknown interface {raw_iface!r} at '{path}.interfaces'")
                parsed_ifaces.append(Interface(raw_iface))
            waypoints_raw = section.take("waypoints", required=True)
            if not isinstance(waypoints_raw, list) or not waypoints_raw:
                raise SemanticError(f"expected a waypoint list at '{path}.waypoints'")
            waypoints = []
            for j, wp in enumerate(waypoints_raw):
                wpath = f"{path}.waypoints[{j}]"
                if not isinstance(wp, list) or len(wp) != 2:
                    raise SemanticError(f"expected [t, [x, y]] at '{wpath}'")
                t = _number(wp[0], wpath)
                pos = Position(*_pair(wp[1], wpath))
                waypoints.append((t, pos))
            try:
                plan = TrajectoryPlan(
                    waypoints=tuple(waypoints),
                    hold_after_last=bool(section.take("hold_after_last", default=True)),
                )
            except ValueError as exc:
                raise SemanticError(f"{path}: {exc}")
            veh = Vehicle(
                id=_integer(section.take("id", required=True), path),
                name=veh_name,
                plan=plan,
                interfaces=frozenset(parsed_ifaces),
            )
            section.done()
            register(veh_name, veh.id, path)
            out.append(veh)
        return out

    def resolve(name_: str, path: str) -> int:
        if name_ not in names:
            raise SemanticError(f"unknown node {name_!r} at '{path}'")
        return names[name_]

    vehicles = parse_vehicles(top.take("vehicles", default=[]), "vehicles")

    backhaul_links: List[BackhaulLink] = []
    links_raw = top.take("backhaul_links", default=[])

    def parse_flows(items: Iterable, base_path: str) -> List[FlowSpec]:
        out = []
        for i, item in enumerate(items or []):
            path = f"{base_path}[{i}]"
            section = _Section(item, path)
            flow_id = _string(section.take("flow_id", required=True), path)
            src = resolve(_string(section.take("src", required=True), path + ".src"), path + ".src")
            subscribers_raw = section.take("subscribers", default=None)
            if subscribers_raw is not None:
                if not isinstance(subscribers_raw, list) or not subscribers_raw:
                    raise SemanticError(f"expected a subscriber list at '{path}.subscribers'")
                subscribers = tuple(
                    resolve(_string(s, path + ".subscribers"), path + ".subscribers")
                    for s in subscribers_raw
                )
                dst = subscribers[0]
            else:
                subscribers = ()
                dst = resolve(_string(section.take("dst", required=True), path + ".dst"), path + ".dst")
            model_raw = section.take("model", default=None)
            model = None
            if model_raw is not None:
                model_name = _string(model_raw, path + ".model")
                if model_name not in MODELS:
                    raise SemanticError(f"unknown traffic model {model_name!r} at '{path}.model'")
                model = MODELS[model_name]
            try:
                spec = FlowSpec(
                    flow_id=flow_id,
                    src=src,
                    dst=dst,
                    traffic_class=_string(section.take("traffic_class", required=True), path),
                    rate_bps=_integer(section.take("rate_bps", default=0), path),
                    packet_size_bytes=_integer(section.take("packet_size_bytes", required=True), path),
                    start_s=_number(section.take("start_s", default=0.0), path),
                    duration_s=_number(section.take("duration_s", required=True), path),
                    model=model,
                    subscribers=subscribers if len(subscribers) > 1 else (),
                )
            except (ValueError, HivenetError) as exc:
                raise SemanticError(f"{path}: {exc}")
            section.done()
            out.append(spec)
        return out

    flows = parse_flows(top.take("flows", default=[]), "flows")

    phases: List[Phase] = []
    for i, item in enumerate(top.take("phases", default=[]) or []):
        path = f"phases[{i}]"
        section = _Section(item, path)
        phase = Phase(
            start_s=_number(section.take("start_s", required=True), path + ".start_s"),
            vehicles=parse_vehicles(section.take("vehicles", default=[]), path + ".vehicles"),
            flows=[],
        )
        phase_flows_raw = section.take("flows", default=[])
        section.done()
        phase.flows = parse_flows(phase_flows_raw, path + ".flows")
        phases.append(phase)

    # links are resolved after vehicles/phases so names cover every node
    for i, item in enumerate(links_raw or []):
        path = f"backhaul_links[{i}]"
        section = _Section(item, path)
        try:
            link = BackhaulLink(
                endpoints=(
                    resolve(_string(section.take("a", required=True), path + ".a"), path + ".a"),
                    resolve(_string(section.take("b", required=True), path + ".b"), path + ".b"),
                ),
                rate_bps=_integer(section.take("rate_bps", required=True), path),
                propagation_delay_s=_number(section.take("propagation_delay_s", required=True), path),
                buffer_packets=_integer(section.take("buffer_packets", default=300), path),
            )
        except ValueError as exc:
            raise SemanticError(f"{path}: {exc}")
        section.done()
        backhaul_links.append(link)

    impairments: List[Impairment] = []
    for i, item in enumerate(top.take("impairments", default=[]) or []):
        path = f"impairments[{i}]"
        section = _Section(item, path)
        link_raw = section.take("link", default=None)
        ap_raw = section.take("ap", default=None)
        direction = section.take("direction", default=None)
        try:
            impairment = Impairment(
                at_s=_number(section.take("at_s", required=True), path + ".at_s"),
                loss_prob=_number(section.take("loss_prob", required=True), path + ".loss_prob"),
                link=(
                    (resolve(_string(link_raw[0], path), path), resolve(_string(link_raw[1], path), path))
                    if link_raw is not None else None
                ),
                ap=resolve(_string(ap_raw, path + ".ap"), path + ".ap") if ap_raw is not None else None,
                direction=_string(direction, path + ".direction") if direction is not None else None,
            )
        except ValueError as exc:
            raise SemanticError(f"{path}: {exc}")
        if impairment.ap is not None and impairment.direction not in ("up", "down"):
            raise SemanticError(f"channel impairment needs direction up|down at '{path}'")
        section.done()
        impairments.append(impairment)

    duplicate_flows = []
    for i, item in enumerate(top.take("duplicate_flows", default=[]) or []):
        duplicate_flows.append(_string(item, f"duplicate_flows[{i}]"))

    top.done()

    config = ScenarioConfig(
        name=name, area=area, duration_s=duration_s, radio_defaults=radio_defaults,
        engine=engine, policy=policy, access_points=access_points, switches=switches,
        backhaul_links=backhaul_links, vehicles=vehicles, flows=flows, phases=phases,
        impairments=impairments, duplicate_flows=duplicate_flows, seed=seed,
    )
    _validate_semantics(config)
    return config


def _validate_semantics(config: ScenarioConfig) -> None:
    if config.duration_s <= 0:
        raise SemanticError("duration_s must be positive")
    prev = 0.0
    for phase in config.phases:
        if not (prev <= phase.start_s <= config.duration_s):
            raise SemanticError(
                f"phase start {phase.start_s} outside [0, {config.duration_s}] or unordered"
            )
        prev = phase.start_s

    try:
        topology = build_topology(config)
    except HivenetError as exc:
        raise SemanticError(str(exc))

    vehicle_ids = set(topology.vehicles)
    fixed = set(topology.fixed_nodes())
    known_flow_ids = set()
    for spec in config.all_flows():
        if spec.flow_id in known_flow_ids:
            raise SemanticError(f"flow id {spec.flow_id!r} declared twice")
        known_flow_ids.add(spec.flow_id)
        if spec.src not in vehicle_ids:
            raise SemanticError(f"flow {spec.flow_id!r}: source must be a vehicle")
        endpoints = spec.subscribers if spec.subscribers else (spec.dst,)
        for endpoint in endpoints:
            if endpoint not in vehicle_ids and endpoint not in fixed:
                raise SemanticError(f"flow {spec.flow_id!r}: unknown endpoint {endpoint}")
        if spec.traffic_class == "probe":
            if spec.subscribers or spec.dst not in vehicle_ids:
                raise SemanticError(f"flow {spec.flow_id!r}: probes are vehicle-to-vehicle unicast")
    for flow_id in config.duplicate_flows:
        if flow_id not in known_flow_ids:
            raise SemanticError(f"duplicate_flows names unknown flow {flow_id!r}")
    for impairment in config.impairments:
        if impairment.link is not None:
            a, b = impairment.link
            if topology.link_between(a, b) is None:
                raise SemanticError(f"impairment names missing link {a}-{b}")
        if impairment.ap is not None and impairment.ap not in topology.access_points:
            raise SemanticError(f"impairment names unknown access point {impairment.ap}")


# ---------------------------------------------------------------------------
# serialization (canonical form; parse(serialize(config)) round-trips)
# ---------------------------------------------------------------------------

def serialize_scenario(config: ScenarioConfig) -> str:
    by_id: Dict[int, str] = {}
    for ap in config.access_points:
        by_id[ap.id] = ap.name
    for sw in config.switches:
        by_id[sw.id] = sw.name
    for veh in config.all_vehicles():
        by_id[veh.id] = veh.name

    def radio_dict(params: RadioParams) -> dict:
        return {
            "tx_power_dbm": params.tx_power_dbm,
            "ref_distance_m": params.ref_distance_m,
            "ref_loss_db": params.ref_loss_db,
            "exponent": params.exponent,
            "rx_threshold_dbm": params.rx_threshold_dbm,
        }

    def vehicle_dict(veh: Vehicle) -> dict:
        return {
            "id": veh.id,
            "name": veh.name,
            "interfaces": sorted(iface.value for iface in veh.interfaces),
            "waypoints": [[t, [pos.x, pos.y]] for t, pos in veh.plan.waypoints],
            "hold_after_last": veh.plan.hold_after_last,
        }

    def flow_dict(spec: FlowSpec) -> dict:
        out = {
            "flow_id": spec.flow_id,
            "src": by_id[spec.src],
            "traffic_class": spec.traffic_class,
            "packet_size_bytes": spec.packet_size_bytes,
            "start_s": spec.start_s,
            "duration_s": spec.duration_s,
        }
        if spec.subscribers:
            out["subscribers"] = [by_id[s] for s in spec.subscribers]
        else:
            out["dst"] = by_id[spec.dst]
        if spec.rate_bps:
            out["rate_bps"] = spec.rate_bps
        if spec.model is not None:
            out["model"] = spec.model.id
        return out

    doc = {
        "name": config.name,
        "area_m": list(config.area),
        "duration_s": config.duration_s,
        "seed": config.seed,
        "radio_defaults": radio_dict(config.radio_defaults),
        "engine": {
            "attach_latency_s": config.engine.attach_latency_s,
            "control_latency_s": config.engine.control_latency_s,
            "report_interval_s": config.engine.report_interval_s,
            "default_table_action": config.engine.default_table_action,
            "proactive_paths": config.engine.proactive_paths,
        },
        "policy": {
            "mode": config.policy.mode,
            "util_trigger": config.policy.util_trigger,
            "hysteresis": config.policy.hysteresis,
            "horizon_s": config.policy.horizon_s,
            "tick_s": config.policy.tick_s,
        },
        "access_points": [
            {
                "id": ap.id,
                "name": ap.name,
                "kind": ap.kind.value,
                "position": [ap.position.x, ap.position.y],
                "wireless_capacity_bps": ap.wireless_capacity_bps,
                "buffer_packets": ap.buffer_packets,
                **({"radio": radio_dict(ap.radio)} if ap.radio != config.radio_defaults else {}),
            }
            for ap in config.access_points
        ],
        "switches": [
            {"id": sw.id, "name": sw.name, "position": [sw.position.x, sw.position.y]}
            for sw in config.switches
        ],
        "backhaul_links": [
            {
                "a": by_id[link.endpoints[0]],
                "b": by_id[link.endpoints[1]],
                "rate_bps": link.rate_bps,
                "propagation_delay_s": link.propagation_delay_s,
                "buffer_packets": link.buffer_packets,
            }
            for link in config.backhaul_links
        ],
        "vehicles": [vehicle_dict(v) for v in config.vehicles],
        "flows": [flow_dict(f) for f in config.flows],
        "phases": [
            {
                "start_s": phase.start_s,
                "vehicles": [vehicle_dict(v) for v in phase.vehicles],
                "flows": [flow_dict(f) for f in phase.flows],
            }
            for phase in config.phases
        ],
        "impairments": [
            {
                "at_s": imp.at_s,
                "loss_prob": imp.loss_prob,
                **(
                    {"link": [by_id[imp.link[0]], by_id[imp.link[1]]]}
                    if imp.link is not None
                    else {"ap": by_id[imp.ap], "direction": imp.direction}
                ),
            }
            for imp in config.impairments
        ],
        "duplicate_flows": list(config.duplicate_flows),
    }
    return json.dumps(doc, indent=2) + "\n"


# ---------------------------------------------------------------------------
# builtins
# ---------------------------------------------------------------------------

def _rsu_overload_doc() -> dict:
    rsus = [
        ("rsu1", 1, [500.0, 500.0]),
        ("rsu2", 2, [1500.0, 500.0]),
        ("rsu3", 3, [500.0, 1500.0]),
        ("rsu4", 4, [1500.0, 1500.0]),
    ]
    # phase-1 vehicles: the streaming server, its two clients, and seven
    # background uploaders spread over rsu2..rsu4 (each inside exactly one
    # coverage disk so only car1 ever has a handover alternative)
    vehicles = [
        ("car1", 10, [500.0, 950.0]),
        ("car2", 11, [1450.0, 550.0]),
        ("car3", 12, [1450.0, 1550.0]),
        ("bg1", 13, [1500.0, 300.0]),
        ("bg2", 14, [1600.0, 600.0]),
        ("bg3", 15, [1400.0, 450.0]),
        ("bg4", 16, [400.0, 1600.0]),
        ("bg5", 17, [600.0, 1700.0]),
        ("bg6", 18, [1600.0, 1400.0]),
        ("bg7", 19, [1500.0, 1700.0]),
    ]
    injected = [
        ("inj1", 20, [350.0, 350.0]),
        ("inj2", 21, [650.0, 380.0]),
        ("inj3", 22, [420.0, 650.0]),
        ("inj4", 23, [260.0, 540.0]),
        ("inj5", 24, [610.0, 620.0]),
    ]

    def veh(name, node_id, pos):
        return {"id": node_id, "name": name, "interfaces": ["dsrc"],
                "waypoints": [[0.0, pos]], "hold_after_last": True}

    # sub-millisecond start offsets keep the constant-bit-rate flows from
    # locking phase with the 400 us service grid of the overloaded channel
    flows = [
        {"flow_id": "video-car2", "src": "car1", "dst": "car2", "traffic_class": "video",
         "rate_bps": 8_000_000, "packet_size_bytes": 1500, "start_s": 0.0, "duration_s": 120.0},
        {"flow_id": "video-car3", "src": "car1", "dst": "car3", "traffic_class": "video",
         "rate_bps": 8_000_000, "packet_size_bytes": 1500, "start_s": 0.0005, "duration_s": 119.9995},
        {"flow_id": "probe", "src": "car1", "dst": "car2", "traffic_class": "probe",
         "rate_bps": 5120, "packet_size_bytes": 64, "start_s": 0.0571, "duration_s": 119.9429},
    ]
    for i in range(1, 8):
        flows.append({
            "flow_id": f"bg-{i}", "src": f"bg{i}", "dst": "sw1",
            "traffic_class": "background", "rate_bps": 2_000_000,
            "packet_size_bytes": 1500, "start_s": round(0.0002 * i, 6),
            "duration_s": round(120.0 - 0.0002 * i, 6),
        })
    # injected packet sizes are deliberately incommensurate with the video
    # stream's 400 us serialization slot, so the overloaded FIFO's admission
    # pattern rotates across flows instead of locking onto a fixed order
    injected_flows = []
    inj_offsets = (0.0011, 0.0023, 0.0037, 0.0041, 0.0053)
    inj_sizes = (1437, 1459, 1471, 1483, 1497)
    for i, (offset, size) in enumerate(zip(inj_offsets, inj_sizes), start=1):
        injected_flows.append({
            "flow_id": f"inj-{i}", "src": f"inj{i}", "dst": "sw1",
            "traffic_class": "background", "rate_bps": 4_000_000,
            "packet_size_bytes": size, "start_s": round(60.0 + offset, 6),
            "duration_s": round(60.0 - offset, 6),
        })

    return {
        "name": BUILTIN_RSU_OVERLOAD,
        "area_m": [2000.0, 2000.0],
        "duration_s": 120.0,
        "seed": 42,
        "access_points": [
            {"id": node_id, "name": name, "kind": "rsu", "position": pos,
             "wireless_capacity_bps": 30_000_000, "buffer_packets": 300}
            for name, node_id, pos in rsus
        ],
        "switches": [{"id": 5, "name": "sw1", "position": [1000.0, 1000.0]}],
        "backhaul_links": [
            {"a": name, "b": "sw1", "rate_bps": 1_000_000_000,
             "propagation_delay_s": 0.002, "buffer_packets": 300}
            for name, _, _ in rsus
        ],
        "vehicles": [veh(*entry) for entry in vehicles],
        "flows": flows,
        "phases": [{
            "start_s": 60.0,
            "vehicles": [veh(*entry) for entry in injected],
            "flows": injected_flows,
        }],
    }


def _collision_duplication_doc(loss_prob: float = 0.2) -> dict:
    return {
        "name": BUILTIN_COLLISION_DUP,
        "area_m": [2000.0, 2000.0],
        "duration_s": 30.0,
        "seed": 7,
        "access_points": [
            {"id": 1, "name": "rsua", "kind": "rsu", "position": [200.0, 1000.0],
             "wireless_capacity_bps": 30_000_000, "buffer_packets": 300},
            {"id": 2, "name": "rsub", "kind": "rsu", "position": [1800.0, 1000.0],
             "wireless_capacity_bps": 30_000_000, "buffer_packets": 300},
        ],
        "switches": [
            {"id": 3, "name": "swn", "position": [1000.0, 1600.0]},
            {"id": 4, "name": "sws", "position": [1000.0, 400.0]},
        ],
        "backhaul_links": [
            {"a": "rsua", "b": "swn", "rate_bps": 1_000_000_000,
             "propagation_delay_s": 0.002, "buffer_packets": 300},
            {"a": "swn", "b": "rsub", "rate_bps": 1_000_000_000,
             "propagation_delay_s": 0.002, "buffer_packets": 300},
            {"a": "rsua", "b": "sws", "rate_bps": 1_000_000_000,
             "propagation_delay_s": 0.002, "buffer_packets": 300},
            {"a": "sws", "b": "rsub", "rate_bps": 1_000_000_000,
             "propagation_delay_s": 0.002, "buffer_packets": 300},
        ],
        "vehicles": [
            {"id": 10, "name": "v1", "interfaces": ["dsrc"],
             "waypoints": [[0.0, [150.0, 1000.0]]], "hold_after_last": True},
            {"id": 11, "name": "v2", "interfaces": ["dsrc"],
             "waypoints": [[0.0, [1850.0, 1000.0]]], "hold_after_last": True},
        ],
        "flows": [
            {"flow_id": "a1-collision", "src": "v1", "dst": "v2", "traffic_class": "a1",
             "rate_bps": 1_200_000, "packet_size_bytes": 300, "start_s": 0.0,
             "duration_s": 30.0, "model": "M2"},
        ],
        # weather-degraded second hop of both backhaul paths: the predicted
        # event the control plane answers with duplication
        "impairments": [
            {"at_s": 0.0, "loss_prob": loss_prob, "link": ["swn", "rsub"]},
            {"at_s": 0.0, "loss_prob": loss_prob, "link": ["sws", "rsub"]},
        ],
        "duplicate_flows": ["a1-collision"],
    }


def _birdseye_doc() -> dict:
    doc = _rsu_overload_doc()
    bs_radio = {
        "tx_power_dbm": 20.0, "ref_distance_m": 1.0, "ref_loss_db": 40.0,
        "exponent": 3.0, "rx_threshold_dbm": -119.0309,
    }
    return {
        "name": BUILTIN_BIRDSEYE,
        "area_m": [2000.0, 2000.0],
        "duration_s": 30.0,
        "seed": 11,
        "access_points": doc["access_points"] + [
            {"id": 6, "name": "bs1", "kind": "base_station", "position": [1000.0, 1000.0],
             "wireless_capacity_bps": 100_000_000, "buffer_packets": 300,
             "radio": bs_radio},
        ],
        "switches": doc["switches"],
        "backhaul_links": doc["backhaul_links"] + [
            {"a": "bs1", "b": "sw1", "rate_bps": 1_000_000_000,
             "propagation_delay_s": 0.002, "buffer_packets": 300},
        ],
        "vehicles": [
            {"id": 10, "name": "v1", "interfaces": ["cellular", "dsrc"],
             "waypoints": [[0.0, [500.0, 950.0]]], "hold_after_last": True},
            {"id": 11, "name": "v2", "interfaces": ["dsrc"],
             "waypoints": [[0.0, [1450.0, 550.0]]], "hold_after_last": True},
            {"id": 12, "name": "v3", "interfaces": ["dsrc"],
             "waypoints": [[0.0, [1450.0, 1550.0]]], "hold_after_last": True},
        ],
        # declared order drives the greedy split: the first flow lands on the
        # RSU side (tie goes to the short-range network), the second on the
        # base station; the 1497-byte size keeps the two streams from phase
        # locking when a baseline run forces both onto one channel
        "flows": [
            {"flow_id": "view-v3", "src": "v1", "dst": "v3", "traffic_class": "video",
             "rate_bps": 20_000_000, "packet_size_bytes": 1497, "start_s": 0.0,
             "duration_s": 30.0},
            {"flow_id": "view-v2", "src": "v1", "dst": "v2", "traffic_class": "video",
             "rate_bps": 20_000_000, "packet_size_bytes": 1500, "start_s": 0.0005,
             "duration_s": 29.9995},
        ],
    }


def builtin_names() -> List[str]:
    return [BUILTIN_RSU_OVERLOAD, BUILTIN_COLLISION_DUP, BUILTIN_BIRDSEYE]


def builtin_document(name: str) -> str:
    """The JSON text of a built-in scenario."""
    docs = {
        BUILTIN_RSU_OVERLOAD: _rsu_overload_doc,
        BUILTIN_COLLISION_DUP: _collision_duplication_doc,
        BUILTIN_BIRDSEYE: _birdseye_doc,
    }
    if name not in docs:
        raise KeyError(name)
    return json.dumps(docs[name](), indent=2) + "\n"


def load_builtin(name: str) -> ScenarioConfig:
    return parse_scenario(builtin_document(name))
