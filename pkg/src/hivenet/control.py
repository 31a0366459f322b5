"""Hierarchical SDN control plane.

Two sub-controllers (one per access network) own rule installation on their
devices and report load upward; the main controller fuses those reports
with cloud knowledge (trajectory plans, declared flows) into a global view
and issues directives: handover commands, path installs, duplication.

Network state (attachments, load reports) reaches the main controller
through the sub-controllers with a control latency per hop; cloud knowledge
is available the moment a vehicle or flow enters the scenario. Decisions
are made only on fresh view entries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import (
    BrokenPath,
    DomainMismatch,
    NoCandidates,
    NoCoverageOnEitherNetwork,
    StaleView,
)
from .engine import (
    Duplicate,
    FlowTable,
    Forward,
    Match,
    HandoverRecord,
    NS_PER_S,
)
from .model import ApKind, Interface, Topology, node_disjoint_paths, shortest_backhaul_path
from .mobility import position_at
from .errors import TimeBeforePlanStart
from .radio import candidate_attachments, rssi_dbm
from .traffic import FlowSpec

DOMAIN_RSU = "RSU"
DOMAIN_CELLULAR = "Cellular"
DOMAIN_GLOBAL = "Global"

MODE_BASELINE = "baseline_rssi"
MODE_SDN = "sdn_load_aware"

RULE_PRIORITY_PATH = 10


@dataclass(frozen=True)
class Policy:
    mode: str = MODE_SDN
    util_trigger: float = 0.9
    hysteresis: float = 0.2
    horizon_s: float = 5.0
    tick_s: float = 1.0

    def __post_init__(self):
        if self.mode not in (MODE_BASELINE, MODE_SDN):
            raise ValueError(f"unknown policy mode {self.mode!r}")
        if not (self.util_trigger > self.hysteresis >= 0):
            raise ValueError("need util_trigger > hysteresis >= 0")


@dataclass(frozen=True)
class LoadReport:
    ap_id: int
    ts_s: float
    attached_count: int
    offered_bps: float
    queue_occupancy: float
    drops_in_window: int

    def __post_init__(self):
        if not (0.0 <= self.queue_occupancy <= 1.0):
            raise ValueError("occupancy outside [0,1]")
        if self.offered_bps < 0:
            raise ValueError("offered load cannot be negative")


@dataclass
class NetworkView:
    controller_id: str
    domain: str
    reports: Dict[int, LoadReport] = field(default_factory=dict)
    # vehicle -> {ap kind -> (ap id, learned at)}
    attachments: Dict[int, Dict[ApKind, Tuple[int, float]]] = field(default_factory=dict)

    def attachment_of(self, vehicle_id: int, kind: ApKind) -> Optional[int]:
        entry = self.attachments.get(vehicle_id, {}).get(kind)
        return entry[0] if entry else None

    def record_attachment(self, vehicle_id: int, kind: ApKind, ap_id: int, ts_s: float) -> None:
        self.attachments.setdefault(vehicle_id, {})[kind] = (ap_id, ts_s)

    def drop_attachment(self, vehicle_id: int, kind: ApKind, ap_id: int) -> None:
        entry = self.attachments.get(vehicle_id)
        if entry and entry.get(kind, (None,))[0] == ap_id:
            del entry[kind]

    def is_fresh(self, ap_id: int, now_s: float, tick_s: float) -> bool:
        report = self.reports.get(ap_id)
        return report is not None and (now_s - report.ts_s) <= 3.0 * tick_s


def sync_views(sub_view: NetworkView, main_view: NetworkView, now_s: float) -> NetworkView:
    """East-west merge of a sub-controller's view into the global one.

    The freshest report per access point and the freshest attachment entry
    per (vehicle, network) win; nothing is ever removed by a sync.
    """
    if sub_view.domain not in (DOMAIN_RSU, DOMAIN_CELLULAR):
        raise DomainMismatch(f"cannot sync from domain {sub_view.domain!r}")
    for ap_id, report in sub_view.reports.items():
        current = main_view.reports.get(ap_id)
        if current is None or report.ts_s >= current.ts_s:
            main_view.reports[ap_id] = report
    for vehicle_id, by_kind in sub_view.attachments.items():
        for kind, (ap_id, ts) in by_kind.items():
            known = main_view.attachments.get(vehicle_id, {}).get(kind)
            if known is None or ts >= known[1]:
                main_view.record_attachment(vehicle_id, kind, ap_id, ts)
    return main_view


# --- directives -------------------------------------------------------------

@dataclass(frozen=True)
class HandoverCommand:
    vehicle: int
    from_ap: int
    to_ap: int
    issued_s: float

    def __post_init__(self):
        if self.from_ap == self.to_ap:
            raise ValueError("handover must change the access point")


@dataclass(frozen=True)
class PathInstall:
    flow_id: str
    path: Tuple[int, ...]
    issued_s: float


@dataclass(frozen=True)
class DuplicateInstall:
    flow_id: str
    paths: Tuple[Tuple[int, ...], Tuple[int, ...]]
    issued_s: float

    def __post_init__(self):
        first, second = self.paths
        if set(first[1:-1]) & set(second[1:-1]):
            raise ValueError("duplicated paths must not share intermediate nodes")


@dataclass(frozen=True)
class AttachAssignment:
    vehicle: int
    ap: int
    issued_s: float


# --- cloud-side knowledge passed around the pure policy functions -----------

@dataclass
class ControlContext:
    topology: Topology
    policy: Policy
    vehicles_known_from: Dict[int, float]
    flows: List[FlowSpec]
    flow_known_from: Dict[str, float]
    flow_iface: Dict[str, Interface]

    def known_vehicles(self, now_s: float) -> List[int]:
        return sorted(
            v for v, known in self.vehicles_known_from.items() if known <= now_s
        )

    def known_active_flows(self, now_s: float, at_s: float) -> List[FlowSpec]:
        out = []
        for spec in self.flows:
            if self.flow_known_from.get(spec.flow_id, 0.0) > now_s:
                continue
            if spec.start_s <= at_s < spec.start_s + spec.duration_s:
                out.append(spec)
        return out


def predict_attachment_map(
    view: NetworkView, ctx: ControlContext, t_future_s: float, now_s: float
) -> Dict[Tuple[int, ApKind], int]:
    """Expected (vehicle, network) -> access point at a future instant.

    A vehicle keeps its viewed attachment while the predicted position stays
    in coverage; otherwise (including vehicles not yet seen attaching) it is
    assigned the strongest audible AP of that network, signal-strength rule.
    """
    topo = ctx.topology
    out: Dict[Tuple[int, ApKind], int] = {}
    for vehicle_id in ctx.known_vehicles(now_s):
        vehicle = topo.vehicles[vehicle_id]
        try:
            pos = position_at(vehicle.plan, t_future_s)
        except TimeBeforePlanStart:
            continue
        if pos is None:
            continue
        for iface in sorted(vehicle.interfaces, key=lambda i: i.value):
            kind = iface.ap_kind
            current = view.attachment_of(vehicle_id, kind)
            if current is not None:
                ap = topo.access_points[current]
                if rssi_dbm(ap.radio, pos.distance_to(ap.position)) >= ap.radio.rx_threshold_dbm:
                    out[(vehicle_id, kind)] = current
                    continue
            heard = candidate_attachments(pos, [iface], topo.access_points.values())
            if heard:
                out[(vehicle_id, kind)] = heard[0][0]
    return out


def _utilization(
    view: NetworkView,
    ctx: ControlContext,
    ap_id: int,
    now_s: float,
    attach_map: Dict[Tuple[int, ApKind], int],
    extra_bps: Optional[Dict[int, float]] = None,
    exclude_flow_ids: Optional[Set[str]] = None,
) -> float:
    horizon_at = now_s + ctx.policy.horizon_s
    uplink = downlink = 0.0
    topo = ctx.topology
    for spec in ctx.known_active_flows(now_s, horizon_at):
        if exclude_flow_ids and spec.flow_id in exclude_flow_ids:
            continue
        kind = ctx.flow_iface[spec.flow_id].ap_kind
        rate = spec.effective_rate_bps
        if attach_map.get((spec.src, kind)) == ap_id:
            uplink += rate
        receivers = spec.subscribers if spec.subscribers else (spec.dst,)
        for receiver in receivers:
            if receiver in topo.vehicles and attach_map.get((receiver, kind)) == ap_id:
                downlink += rate
    load = max(uplink, downlink) + (extra_bps or {}).get(ap_id, 0.0)
    return load / ctx.topology.access_points[ap_id].wireless_capacity_bps


def predicted_utilization(
    view: NetworkView, ctx: ControlContext, ap_id: int, now_s: float
) -> float:
    """Expected load/capacity of an AP one horizon ahead, from flows whose
    endpoint vehicles are predicted to be attached there."""
    if not view.is_fresh(ap_id, now_s, ctx.policy.tick_s):
        raise StaleView(f"no fresh report for access point {ap_id}")
    attach_map = predict_attachment_map(view, ctx, now_s + ctx.policy.horizon_s, now_s)
    return _utilization(view, ctx, ap_id, now_s, attach_map)


def select_attachment(
    mode: str,
    candidates: Sequence[Tuple[int, float]],
    utilization: Optional[Dict[int, float]] = None,
) -> int:
    """Pick an AP from (ap_id, rssi) candidates.

    Baseline takes the strongest signal; load-aware takes the least-utilized
    candidate, breaking ties toward stronger signal. Lowest id last.
    """
    if not candidates:
        raise NoCandidates("no access point in range")
    if mode == MODE_BASELINE or utilization is None:
        return min(candidates, key=lambda c: (-c[1], c[0]))[0]
    return min(candidates, key=lambda c: (utilization.get(c[0], 0.0), -c[1], c[0]))[0]


def evaluate_handovers(
    policy: Policy,
    view: NetworkView,
    ctx: ControlContext,
    now_s: float,
    pending: Optional[Set[int]] = None,
) -> List[HandoverCommand]:
    """Load-aware handover decisions over the global view, one per vehicle.

    A vehicle moves only when its current AP's predicted utilization exceeds
    the trigger and some in-range alternative undercuts it by more than the
    hysteresis margin.
    """
    if policy.mode != MODE_SDN:
        return []
    pending = pending or set()
    topo = ctx.topology
    attach_map = predict_attachment_map(view, ctx, now_s + policy.horizon_s, now_s)
    utilization = {
        ap_id: _utilization(view, ctx, ap_id, now_s, attach_map)
        for ap_id in sorted(topo.access_points)
        if view.is_fresh(ap_id, now_s, policy.tick_s)
    }
    commands: List[HandoverCommand] = []
    for vehicle_id in sorted(view.attachments):
        if vehicle_id in pending or vehicle_id not in topo.vehicles:
            continue
        vehicle = topo.vehicles[vehicle_id]
        try:
            pos = position_at(vehicle.plan, now_s)
        except TimeBeforePlanStart:
            continue
        if pos is None:
            continue
        for kind in sorted(view.attachments[vehicle_id], key=lambda k: k.value):
            current = view.attachment_of(vehicle_id, kind)
            if current is None or current not in utilization:
                continue
            current_util = utilization[current]
            if current_util <= policy.util_trigger:
                continue
            alternatives = [
                (ap_id, level)
                for ap_id, level in candidate_attachments(
                    pos, vehicle.interfaces, topo.access_points.values()
                )
                if ap_id != current and ap_id in utilization
            ]
            if not alternatives:
                continue
            best_util = min(utilization[ap_id] for ap_id, _ in alternatives)
            if best_util >= current_util - policy.hysteresis:
                continue
            target = select_attachment(MODE_SDN, alternatives, utilization)
            commands.append(HandoverCommand(vehicle_id, current, target, now_s))
            break  # at most one command per vehicle per tick
    return commands


# --- rule installation -------------------------------------------------------

def _check_consecutive(topology: Topology, path: Sequence[int]) -> None:
    adj = topology.adjacency()
    for a, b in zip(path, path[1:]):
        if b not in adj.get(a, {}):
            raise BrokenPath(f"path nodes {a} and {b} share no backhaul link")


def install_forward_chain(
    tables: Dict[int, FlowTable],
    match: Match,
    nodes: Sequence[int],
    final_hop: Optional[int],
    priority: int = RULE_PRIORITY_PATH,
) -> int:
    """Forward rules along `nodes`; the last node forwards to `final_hop`
    (a vehicle) when given. Returns the number of rules touched."""
    count = 0
    for node, nxt in zip(nodes, nodes[1:]):
        tables[node].upsert(match, Forward(nxt), priority)
        count += 1
    if final_hop is not None:
        tables[nodes[-1]].upsert(match, Forward(final_hop), priority)
        count += 1
    return count


def install_path_rules(
    flow: FlowSpec,
    path: Sequence[int],
    tables: Dict[int, FlowTable],
    topology: Topology,
) -> int:
    """Install the forward rules realizing `path` for a flow.

    One rule per path node: intermediate nodes forward along the path, the
    egress node forwards to the destination vehicle (or nothing more when
    the path already ends at an infrastructure destination). Reinstallation
    touches the same rule ids, so it is idempotent.
    """
    _check_consecutive(topology, path)
    match = Match(
        src=flow.src,
        dst=None if flow.broadcast else flow.dst,
        traffic_class=flow.traffic_class,
    )
    final = flow.dst if flow.dst in topology.vehicles else None
    return install_forward_chain(tables, match, list(path), final)


def duplicate_flow(
    flow: FlowSpec,
    topology: Topology,
    tables: Dict[int, FlowTable],
    ingress: int,
    egress: int,
    issued_s: float = 0.0,
) -> DuplicateInstall:
    """Route a flow over two node-disjoint backhaul paths at once.

    The ingress AP duplicates toward both first hops; each path gets plain
    forward rules; the receiver side deduplicates by origin packet.
    """
    first, second = node_disjoint_paths(topology, ingress, egress)
    match = Match(
        src=flow.src,
        dst=None if flow.broadcast else flow.dst,
        traffic_class=flow.traffic_class,
    )
    final = flow.dst if flow.dst in topology.vehicles else None
    hops = tuple(sorted({first[1], second[1]}))
    tables[ingress].upsert(match, Duplicate(hops), RULE_PRIORITY_PATH)
    for path in (first, second):
        install_forward_chain(tables, match, list(path[1:]), final)
    return DuplicateInstall(flow.flow_id, (tuple(first), tuple(second)), issued_s)


def assign_multihomed_paths(
    flows: Sequence[FlowSpec],
    view: NetworkView,
    ctx: ControlContext,
    now_s: float,
) -> List[Tuple[PathInstall, Interface]]:
    """Spread a dual-homed source's flows across its two networks.

    Flows are placed in declared order on whichever ingress AP is predicted
    least utilized (counting flows already placed in this batch); ties go to
    the RSU side to keep the cellular network offloaded.
    """
    attach_map = predict_attachment_map(view, ctx, now_s + ctx.policy.horizon_s, now_s)
    # the flows being placed must not count against any AP until they are
    # actually placed: their pre-assignment binding would double-book
    batch_ids = {spec.flow_id for spec in flows}
    extra: Dict[int, float] = {}
    out: List[Tuple[PathInstall, Interface]] = []
    for spec in flows:
        options: List[Tuple[float, int, int, Interface]] = []
        for iface, tie_rank in ((Interface.DSRC, 0), (Interface.CELLULAR, 1)):
            ap_id = view.attachment_of(spec.src, iface.ap_kind)
            if ap_id is None:
                continue
            util = _utilization(view, ctx, ap_id, now_s, attach_map, extra, batch_ids)
            options.append((util, tie_rank, ap_id, iface))
        if not options:
            raise NoCoverageOnEitherNetwork(
                f"flow {spec.flow_id}: source vehicle {spec.src} reaches no network"
            )
        options.sort(key=lambda o: (o[0], o[1]))
        _, _, ingress, iface = options[0]
        extra[ingress] = extra.get(ingress, 0.0) + spec.effective_rate_bps
        egress_kind = iface.ap_kind
        egress = None
        if spec.dst in ctx.topology.vehicles:
            egress = view.attachment_of(spec.dst, egress_kind)
            if egress is None:
                dst_vehicle = ctx.topology.vehicles[spec.dst]
                for other in sorted(dst_vehicle.interfaces, key=lambda i: i.value):
                    egress = view.attachment_of(spec.dst, other.ap_kind)
                    if egress is not None:
                        break
        else:
            egress = spec.dst
        if egress is None:
            raise NoCoverageOnEitherNetwork(
                f"flow {spec.flow_id}: destination {spec.dst} reaches no network"
            )
        path = tuple(shortest_backhaul_path(ctx.topology, ingress, egress))
        out.append((PathInstall(spec.flow_id, path, now_s), iface))
    return out


# --- the live control plane driven by engine events --------------------------

class SubController:
    def __init__(self, controller_id: str, domain: str, ap_ids: Set[int]):
        self.view = NetworkView(controller_id, domain)
        self.ap_ids = ap_ids

    def owns(self, ap_id: int) -> bool:
        return ap_id in self.ap_ids


class ControlPlane:
    """Wires the controllers to a running simulation.

    State updates travel as scheduled control messages with the configured
    control latency per hop (device -> sub-controller -> main controller);
    rule installs issued by the main controller likewise take one latency to
    reach the devices. Provisioning for flows entering the scenario is
    pre-arranged and takes effect at their start time.
    """

    def __init__(self, sim):
        self.sim = sim
        topo = sim.topology
        self.policy: Policy = sim.config.policy
        rsu_ids = {ap.id for ap in topo.access_points.values() if ap.kind is ApKind.RSU}
        bs_ids = {ap.id for ap in topo.access_points.values() if ap.kind is ApKind.BASE_STATION}
        self.subs = {
            DOMAIN_RSU: SubController("rsu-ctrl", DOMAIN_RSU, rsu_ids),
            DOMAIN_CELLULAR: SubController("cell-ctrl", DOMAIN_CELLULAR, bs_ids),
        }
        self.main_view = NetworkView("main-ctrl", DOMAIN_GLOBAL)
        self.pending_handovers: Set[int] = set()
        self.directives: List[object] = []
        self.ctx = ControlContext(
            topology=topo,
            policy=self.policy,
            vehicles_known_from={
                v_id: state.active_from_ns / NS_PER_S for v_id, state in sim.vehicles.items()
            },
            flows=[fs.spec for fs in sim.flows.values()],
            flow_known_from={
                fid: fs.known_from_ns / NS_PER_S for fid, fs in sim.flows.items()
            },
            flow_iface={
                fid: fs.iface for fid, fs in sim.flows.items() if fs.iface is not None
            },
        )

    # -- helpers ------------------------------------------------------------

    def _now_s(self) -> float:
        return self.sim.now_ns / NS_PER_S

    def _owner(self, ap_id: int) -> SubController:
        for sub in self.subs.values():
            if sub.owns(ap_id):
                return sub
        raise DomainMismatch(f"access point {ap_id} belongs to no controller")

    def _latency(self) -> int:
        return self.sim.control_latency_ns

    # -- device -> sub -> main state propagation -----------------------------

    def submit_report(self, ap_id: int, attached: int, offered_bps: float,
                      occupancy: float, drops: int) -> None:
        report = LoadReport(ap_id, self._now_s(), attached, offered_bps, occupancy, drops)
        sub = self._owner(ap_id)

        def deliver_to_sub():
            sub.view.reports[ap_id] = report
            self.sim.schedule_control(
                self._latency(), f"east-west sync {sub.view.controller_id}",
                lambda: sync_views(sub.view, self.main_view, self._now_s()),
            )

        self.sim.schedule_control(self._latency(), f"load report ap={ap_id}", deliver_to_sub)

    def notify_attach(self, vehicle_id: int, ap_id: int) -> None:
        kind = self.sim.topology.access_points[ap_id].kind
        sub = self._owner(ap_id)

        def deliver_to_sub():
            sub.view.record_attachment(vehicle_id, kind, ap_id, self._now_s())
            self.sim.schedule_control(
                self._latency(), f"attach notice vehicle={vehicle_id}",
                deliver_to_main,
            )

        def deliver_to_main():
            self.main_view.record_attachment(vehicle_id, kind, ap_id, self._now_s())
            self.pending_handovers.discard(vehicle_id)

        self.sim.schedule_control(self._latency(), f"attach report vehicle={vehicle_id}", deliver_to_sub)

    def notify_detach(self, vehicle_id: int, ap_id: int) -> None:
        kind = self.sim.topology.access_points[ap_id].kind
        sub = self._owner(ap_id)

        def deliver_to_sub():
            sub.view.drop_attachment(vehicle_id, kind, ap_id)
            self.sim.schedule_control(
                self._latency(), f"detach notice vehicle={vehicle_id}",
                lambda: self.main_view.drop_attachment(vehicle_id, kind, ap_id),
            )

        self.sim.schedule_control(self._latency(), f"detach report vehicle={vehicle_id}", deliver_to_sub)

    # -- provisioning ---------------------------------------------------------

    def _provision_view(self) -> NetworkView:
        """Ground-truth view used for pre-arranged provisioning decisions."""
        view = NetworkView("provision", DOMAIN_GLOBAL)
        now_s = self._now_s()
        for vehicle_id, state in self.sim.vehicles.items():
            for iface, ap_id in state.attachments.items():
                view.record_attachment(vehicle_id, iface.ap_kind, ap_id, now_s)
        view.reports = dict(self.main_view.reports)
        return view

    def provision_flows(self, flow_states: Sequence) -> None:
        """Install forwarding for a batch of flows entering the scenario now."""
        now_s = self._now_s()
        view = self._provision_view()
        sdn = self.policy.mode == MODE_SDN
        duplicated = set(self.sim.config.duplicate_flows) if sdn else set()

        multihomed = []
        if sdn:
            for fs in flow_states:
                vehicle = self.sim.topology.vehicles.get(fs.spec.src)
                if (
                    vehicle is not None
                    and vehicle.owns(Interface.DSRC)
                    and vehicle.owns(Interface.CELLULAR)
                    and fs.spec.flow_id not in duplicated
                ):
                    multihomed.append(fs)
        if multihomed:
            placed = assign_multihomed_paths(
                [fs.spec for fs in multihomed], view, self.ctx, now_s
            )
            for fs, (directive, iface) in zip(multihomed, placed):
                fs.iface = iface
                self.ctx.flow_iface[fs.flow_id] = iface
                self.directives.append(directive)
                self.sim.emit(
                    "ControlDeliver", flow=fs.flow_id,
                    detail=f"path install via={iface.value} "
                           f"path={'-'.join(map(str, directive.path))}",
                )

        for fs in flow_states:
            if fs.spec.flow_id in duplicated:
                self._install_duplicated(fs, now_s)
            else:
                self._install_flow(fs)

    def _endpoint_ap(self, node_id: int, preferred: Optional[Interface],
                     override: Optional[Dict[int, int]] = None) -> Optional[int]:
        if node_id in self.sim.topology.fixed_nodes():
            return node_id
        if override and node_id in override:
            return override[node_id]
        state = self.sim.vehicles.get(node_id)
        if state is None:
            return None
        if preferred is not None and preferred in state.attachments:
            return state.attachments[preferred]
        # fall back to a pending target, then any attachment, DSRC first
        for iface in (Interface.DSRC, Interface.CELLULAR):
            if iface in state.attachments:
                return state.attachments[iface]
        if preferred is not None and preferred in state.pending:
            return state.pending[preferred]
        for iface in (Interface.DSRC, Interface.CELLULAR):
            if iface in state.pending:
                return state.pending[iface]
        return None

    def _flow_rule_plan(self, fs, override: Optional[Dict[int, int]] = None):
        """next-hop sets per node realizing the flow's forwarding tree."""
        spec = fs.spec
        topo = self.sim.topology
        ingress = self._endpoint_ap(spec.src, fs.iface, override)
        if ingress is None:
            return None, {}
        receivers = spec.subscribers if spec.subscribers else (spec.dst,)
        next_hops: Dict[int, List[int]] = {}
        for receiver in receivers:
            egress = self._endpoint_ap(receiver, fs.iface, override)
            if egress is None:
                continue
            path = shortest_backhaul_path(topo, ingress, egress)
            if receiver in topo.vehicles:
                path = path + [receiver]
            for a, b in zip(path, path[1:]):
                hops = next_hops.setdefault(a, [])
                if b not in hops:
                    hops.append(b)
        match = Match(
            src=spec.src,
            dst=None if spec.broadcast else spec.dst,
            traffic_class=spec.traffic_class,
        )
        return match, next_hops

    def _apply_rule_plan(self, match: Match, next_hops: Dict[int, List[int]]) -> None:
        tables = self.sim.tables
        for node in sorted(next_hops):
            hops = next_hops[node]
            action = Forward(hops[0]) if len(hops) == 1 else Duplicate(tuple(sorted(hops)))
            tables[node].upsert(match, action, RULE_PRIORITY_PATH)

    def _install_flow(self, fs, override: Optional[Dict[int, int]] = None) -> None:
        match, next_hops = self._flow_rule_plan(fs, override)
        if match is None or not next_hops:
            return
        self._apply_rule_plan(match, next_hops)
        if fs.spec.traffic_class == "probe":
            # probes are echoed at the destination; the reply direction needs
            # its own forwarding rules
            rmatch, rhops = self._reverse_rule_plan(fs, override)
            if rmatch is not None and rhops:
                self._apply_rule_plan(rmatch, rhops)

    def _reverse_rule_plan(self, fs, override: Optional[Dict[int, int]] = None):
        spec = fs.spec
        topo = self.sim.topology
        ingress = self._endpoint_ap(spec.dst, fs.iface, override)
        egress = self._endpoint_ap(spec.src, fs.iface, override)
        if ingress is None or egress is None:
            return None, {}
        path = shortest_backhaul_path(topo, ingress, egress)
        if spec.src in topo.vehicles:
            path = path + [spec.src]
        next_hops: Dict[int, List[int]] = {}
        for a, b in zip(path, path[1:]):
            next_hops.setdefault(a, []).append(b)
        return Match(spec.dst, spec.src, spec.traffic_class), next_hops

    def _install_duplicated(self, fs, now_s: float) -> None:
        spec = fs.spec
        ingress = self._endpoint_ap(spec.src, fs.iface)
        egress = self._endpoint_ap(spec.dst, fs.iface)
        if ingress is None or egress is None:
            return
        directive = duplicate_flow(
            spec, self.sim.topology, self.sim.tables, ingress, egress, now_s
        )
        self.directives.append(directive)
        self.sim.emit(
            "ControlDeliver", flow=spec.flow_id,
            detail="duplicate install paths="
                   + "|".join("-".join(map(str, p)) for p in directive.paths),
        )

    # -- reactive path (table-miss punt) --------------------------------------

    def packet_in(self, node: int, fs) -> None:
        latency = self._latency()

        def at_main():
            self.sim.schedule_control(
                latency, f"reactive install flow={fs.flow_id}",
                lambda: self._install_flow(fs),
            )

        def at_sub():
            self.sim.schedule_control(latency, f"packet-in escalate flow={fs.flow_id}", at_main)

        self.sim.schedule_control(latency, f"packet-in node={node} flow={fs.flow_id}", at_sub)

    # -- the policy tick -------------------------------------------------------

    def policy_tick(self) -> None:
        if self.policy.mode != MODE_SDN:
            return
        now_s = self._now_s()
        commands = evaluate_handovers(
            self.policy, self.main_view, self.ctx, now_s, self.pending_handovers
        )
        for command in commands:
            self.directives.append(command)
            self.pending_handovers.add(command.vehicle)
            record = HandoverRecord(
                vehicle=command.vehicle, from_ap=command.from_ap,
                to_ap=command.to_ap, command_ns=self.sim.now_ns,
            )
            self.sim.handovers.append(record)
            self.sim.emit(
                "PolicyTick",
                node=self.sim.topology.node_name(command.from_ap),
                detail=(
                    f"handover vehicle={self.sim.topology.node_name(command.vehicle)} "
                    f"to={self.sim.topology.node_name(command.to_ap)}"
                ),
            )
            # proactive reroute: new rules reach the devices together with the
            # command, so forwarding is ready when the vehicle comes back up
            override = {command.vehicle: command.to_ap}
            for fs in list(self.sim.flows.values()):
                spec = fs.spec
                if command.vehicle not in (spec.src, spec.dst) and command.vehicle not in spec.subscribers:
                    continue
                self.sim.schedule_control(
                    self._latency(), f"reroute flow={fs.flow_id}",
                    (lambda f, o: lambda: self._install_flow(f, o))(fs, override),
                )
            self.sim.schedule_control(
                self._latency(),
                f"handover command vehicle={command.vehicle}",
                (lambda c, r: lambda: self.sim.execute_handover(c.vehicle, c.from_ap, c.to_ap, r))(command, record),
            )
