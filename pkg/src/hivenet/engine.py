"""Deterministic packet-level data plane.

One heap-ordered event timeline drives everything: packet generation,
store-and-forward queueing on shared wireless channels and wired links,
match-action forwarding, vehicle attach/detach, control-plane message
delivery and the periodic report/policy ticks. Time is integer nanoseconds
so event ordering never depends on float rounding; the only randomness is
the scripted-loss draw, fed by one seeded generator per run.
"""

from __future__ import annotations

import heapq
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .errors import NotInCoverage, UnknownNextHop
from .model import Interface, Topology, build_topology
from .mobility import position_at
from .radio import candidate_attachments, rssi_dbm
from .traffic import NS_PER_S, FlowSpec

# event kinds, also the first word of exported log records
PACKET_SEND = "PacketSend"
TX_COMPLETE = "TxComplete"
PACKET_ARRIVE = "PacketArrive"
ATTACH_REQUEST = "AttachRequest"
ATTACH_COMPLETE = "AttachComplete"
DETACH = "Detach"
CONTROL_DELIVER = "ControlDeliver"
POLICY_TICK = "PolicyTick"
REPORT_TICK = "ReportTick"
FLOW_START = "FlowStart"
FLOW_END = "FlowEnd"
IMPAIRMENT_TOGGLE = "ImpairmentToggle"

# drop reasons / packet outcome codes (negative codes fill outcome slots)
PENDING = -1
CODE_BUFFER_OVERFLOW = -2
CODE_SCRIPTED_LOSS = -3
CODE_NO_ATTACHMENT = -4
CODE_NO_COVERAGE = -5
CODE_RULE_DROP = -6
CODE_PUNTED = -7

REASON_NAMES = {
    CODE_BUFFER_OVERFLOW: "BufferOverflow",
    CODE_SCRIPTED_LOSS: "ScriptedLoss",
    CODE_NO_ATTACHMENT: "NoAttachment",
    CODE_NO_COVERAGE: "NoCoverage",
    CODE_RULE_DROP: "RuleDrop",
    CODE_PUNTED: "Punted",
}

PROBE_CLASS = "probe"

UPLINK = "up"
DOWNLINK = "down"


def ns(seconds: float) -> int:
    return round(seconds * NS_PER_S)


def serialization_ns(size_bytes: int, rate_bps: int) -> int:
    return size_bytes * 8 * NS_PER_S // rate_bps


# ---------------------------------------------------------------------------
# flow rules and tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Match:
    """Wildcarding match over a packet's source, destination and class.

    A None field matches anything.
    """

    src: Optional[int] = None
    dst: Optional[int] = None
    traffic_class: Optional[str] = None

    def covers(self, src: int, dst: int, traffic_class: str) -> bool:
        return (
            (self.src is None or self.src == src)
            and (self.dst is None or self.dst == dst)
            and (self.traffic_class is None or self.traffic_class == traffic_class)
        )


@dataclass(frozen=True)
class Forward:
    next_hop: int


@dataclass(frozen=True)
class Drop:
    pass


@dataclass(frozen=True)
class Duplicate:
    next_hops: Tuple[int, ...]

    def __post_init__(self):
        if len(set(self.next_hops)) < 2:
            raise ValueError("duplicate action needs at least two distinct next hops")


@dataclass(frozen=True)
class ToController:
    pass


Action = object  # Forward | Drop | Duplicate | ToController


@dataclass
class FlowRule:
    rule_id: int
    priority: int
    match: Match
    action: Action


class FlowTable:
    """Priority match-action table for one forwarding node.

    Highest priority wins; equal priorities go to the lowest rule id. Rule
    ids are interned per match so reinstalling the same match is idempotent
    (the action is replaced in place). A resolved-action cache keeps the
    per-packet cost at one dict lookup.
    """

    def __init__(self, node: int, default_action: Action = Drop()):
        self.node = node
        self.default_action = default_action
        self.rules: Dict[int, FlowRule] = {}
        self._ids_by_match: Dict[Match, int] = {}
        self._next_id = 1
        self._ordered: List[FlowRule] = []
        self._cache: Dict[Tuple[int, int, str], Action] = {}

    def upsert(self, match: Match, action: Action, priority: int = 10) -> FlowRule:
        rule_id = self._ids_by_match.get(match)
        if rule_id is None:
            rule_id = self._next_id
            self._next_id += 1
            self._ids_by_match[match] = rule_id
        rule = FlowRule(rule_id=rule_id, priority=priority, match=match, action=action)
        self.rules[rule_id] = rule
        self._ordered = sorted(self.rules.values(), key=lambda r: (-r.priority, r.rule_id))
        self._cache.clear()
        return rule

    def lookup(self, src: int, dst: int, traffic_class: str) -> Action:
        key = (src, dst, traffic_class)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        action = self.default_action
        for rule in self._ordered:
            if rule.match.covers(src, dst, traffic_class):
                action = rule.action
                break
        self._cache[key] = action
        return action


def match_rule(table: FlowTable, packet: "Packet") -> Action:
    """Resolve the action a table applies to a packet."""
    return table.lookup(packet.src, packet.dst, packet.traffic_class)


def trace_path(tables: Dict[int, FlowTable], src: int, dst: int,
               traffic_class: str, start_node: int, max_hops: int = 64) -> List[int]:
    """Walk Forward rules from start_node, returning the visited node sequence.

    Stops at the first node forwarding to something without a table (the
    delivery hop); used as an oracle that installed rules realize a path.
    """
    node = start_node
    visited = [node]
    for _ in range(max_hops):
        table = tables.get(node)
        if table is None:
            return visited
        action = table.lookup(src, dst, traffic_class)
        if not isinstance(action, Forward):
            return visited
        node = action.next_hop
        visited.append(node)
        if node == dst:
            return visited
    raise UnknownNextHop(f"rule walk from {start_node} exceeded {max_hops} hops")


# ---------------------------------------------------------------------------
# packets and per-flow accounting
# ---------------------------------------------------------------------------

class Packet:
    __slots__ = ("pid", "flow", "seq", "size", "src", "dst", "traffic_class",
                 "created_ns", "next_node", "hop_trace", "duplicate_of",
                 "is_echo", "probe_seq")

    def __init__(self, pid, flow, seq, size, src, dst, traffic_class, created_ns,
                 duplicate_of=None, is_echo=False, probe_seq=-1):
        self.pid = pid
        self.flow = flow
        self.seq = seq
        self.size = size
        self.src = src
        self.dst = dst
        self.traffic_class = traffic_class
        self.created_ns = created_ns
        self.next_node = -1
        self.hop_trace: List[int] = []
        self.duplicate_of = duplicate_of
        self.is_echo = is_echo
        self.probe_seq = probe_seq


class FlowState:
    """Mutable per-flow run state: schedule position and packet outcomes.

    Outcomes are one int per (receiver, source packet): PENDING while copies
    are in flight, a nanosecond timestamp once delivered, or a negative drop
    code once every copy is gone. Duplicate copies resolve against their
    origin packet, so delivery is counted once no matter how many copies
    arrive.
    """

    __slots__ = ("spec", "flow_id", "iface", "receivers", "send_ns", "outcomes",
                 "outstanding", "drop_reason", "copy_drops", "duplicates_suppressed",
                 "gap_ns", "end_ns", "echo_state", "echo_return", "known_from_ns")

    def __init__(self, spec: FlowSpec, flow_id: str, iface: Optional[Interface],
                 receivers: Tuple[int, ...], known_from_ns: int):
        self.spec = spec
        self.flow_id = flow_id
        self.iface = iface
        self.receivers = receivers
        self.send_ns: List[int] = []
        self.outcomes: Dict[int, List[int]] = {r: [] for r in receivers}
        self.outstanding: Dict[int, int] = {}
        self.drop_reason: Dict[int, int] = {}
        self.copy_drops: Counter = Counter()
        self.duplicates_suppressed = 0
        self.gap_ns = spec.gap_ns()
        self.end_ns = ns(spec.start_s + spec.duration_s)
        self.echo_state: Optional["FlowState"] = None
        self.echo_return: Dict[int, int] = {}
        self.known_from_ns = known_from_ns

    @property
    def sent(self) -> int:
        return len(self.send_ns)

    def on_send(self, when_ns: int) -> int:
        seq = len(self.send_ns)
        self.send_ns.append(when_ns)
        for lst in self.outcomes.values():
            lst.append(PENDING)
        self.outstanding[seq] = 1
        return seq

    def on_split(self, seq: int, extra_copies: int) -> None:
        self.outstanding[seq] += extra_copies

    def on_copy_drop(self, seq: int, code: int) -> None:
        self.copy_drops[code] += 1
        self.drop_reason.setdefault(seq, code)
        left = self.outstanding[seq] - 1
        if left:
            self.outstanding[seq] = left
        else:
            self._finalize(seq)

    def on_copy_delivered(self, seq: int, receiver: int, when_ns: int) -> bool:
        """Record an arrival; returns True only for the first copy."""
        slots = self.outcomes[receiver]
        first = slots[seq] == PENDING
        if first:
            slots[seq] = when_ns
        else:
            self.duplicates_suppressed += 1
        left = self.outstanding[seq] - 1
        if left:
            self.outstanding[seq] = left
        else:
            self._finalize(seq)
        return first

    def _finalize(self, seq: int) -> None:
        code = self.drop_reason.pop(seq, CODE_RULE_DROP)
        for slots in self.outcomes.values():
            if slots[seq] == PENDING:
                slots[seq] = code
        del self.outstanding[seq]

    def receiver_stats(self, receiver: int) -> Tuple[int, int, int, int]:
        """(sent, delivered, dropped, in_flight) for one receiver."""
        slots = self.outcomes[receiver]
        delivered = sum(1 for v in slots if v >= 0)
        in_flight = sum(1 for v in slots if v == PENDING)
        dropped = len(slots) - delivered - in_flight
        return len(slots), delivered, dropped, in_flight


@dataclass
class HandoverRecord:
    vehicle: int
    from_ap: int
    to_ap: int
    command_ns: int
    detach_ns: int = -1
    complete_ns: int = -1


@dataclass
class MetricsRaw:
    """Everything telemetry needs, straight off the engine."""

    flows: Dict[str, FlowState]
    drops_by_reason: Counter
    handovers: List[HandoverRecord]
    duration_ns: int

    def delivery_records(self, flow_id: str, receiver: Optional[int] = None
                         ) -> List[Tuple[float, bool]]:
        """(send_s, delivered) per source packet, in send order."""
        fs = self.flows[flow_id]
        recv = receiver if receiver is not None else fs.receivers[0]
        slots = fs.outcomes[recv]
        return [(t / NS_PER_S, slots[i] >= 0) for i, t in enumerate(fs.send_ns)]

    def probe_samples(self, flow_id: str) -> List[Tuple[float, Optional[float]]]:
        """(send_s, rtt_ms or None) per probe request."""
        fs = self.flows[flow_id]
        out = []
        for seq, t in enumerate(fs.send_ns):
            back = fs.echo_return.get(seq)
            rtt_ms = (back - t) / 1e6 if back is not None else None
            out.append((t / NS_PER_S, rtt_ms))
        return out

    def conformance_log(self, flow_id: str, receiver: Optional[int] = None):
        """Per-packet outcomes with one-way latency, for conformance checks."""
        from .traffic import DeliveryOutcome

        fs = self.flows[flow_id]
        recv = receiver if receiver is not None else fs.receivers[0]
        slots = fs.outcomes[recv]
        out = []
        for seq, send in enumerate(fs.send_ns):
            slot = slots[seq]
            if slot >= 0:
                out.append(DeliveryOutcome(send / NS_PER_S, True, (slot - send) / NS_PER_S))
            else:
                out.append(DeliveryOutcome(send / NS_PER_S, False))
        return out


# ---------------------------------------------------------------------------
# transmission servers (wireless channel directions and wired link directions)
# ---------------------------------------------------------------------------

class FifoServer:
    """One store-and-forward transmission resource with a bounded FIFO.

    Serialization of the head packet starts as soon as the server frees;
    arrival at the far end happens a propagation delay after serialization
    finishes. An arriving packet finding the queue full is dropped. A
    scripted loss probability, when set, independently discards packets at
    serialization completion using the run's seeded generator.
    """

    __slots__ = ("key", "rate_bps", "prop_ns", "buffer_packets", "loss_prob",
                 "queue", "serving", "offered_bytes", "window_drops")

    def __init__(self, key: str, rate_bps: int, prop_ns: int, buffer_packets: int):
        self.key = key
        self.rate_bps = rate_bps
        self.prop_ns = prop_ns
        self.buffer_packets = buffer_packets
        self.loss_prob = 0.0
        self.queue: deque = deque()
        self.serving: Optional[Packet] = None
        self.offered_bytes = 0   # window counter, reset at report ticks
        self.window_drops = 0

    def occupancy(self) -> float:
        return len(self.queue) / self.buffer_packets


# ---------------------------------------------------------------------------
# vehicles
# ---------------------------------------------------------------------------

class VehicleState:
    __slots__ = ("vehicle", "active_from_ns", "attachments", "pending",
                 "static_pos", "coverage_cache")

    def __init__(self, vehicle, active_from_ns: int):
        self.vehicle = vehicle
        self.active_from_ns = active_from_ns
        self.attachments: Dict[Interface, int] = {}
        self.pending: Dict[Interface, int] = {}
        self.static_pos = (
            vehicle.plan.waypoints[0][1] if len(vehicle.plan.waypoints) == 1 else None
        )
        self.coverage_cache: Dict[int, bool] = {}

    def position(self, now_ns: int):
        if self.static_pos is not None:
            return self.static_pos
        return position_at(self.vehicle.plan, now_ns / NS_PER_S)


# ---------------------------------------------------------------------------
# the simulation proper
# ---------------------------------------------------------------------------

class Simulation:
    def __init__(self, config, seed: int, record_packets: bool = False):
        from . import control  # engine -> control only at run wiring time

        self.config = config
        self.seed = seed
        self.record_packets = record_packets
        self.rng = random.Random(seed)
        self.topology: Topology = build_topology(config)

        self.now_ns = 0
        self.end_ns = ns(config.duration_s)
        self._heap: List[tuple] = []
        self._seq = 0

        self.log: List[str] = []
        self.drops = Counter()
        self.handovers: List[HandoverRecord] = []
        self._pid = 0

        eng = config.engine
        self.attach_latency_ns = ns(eng.attach_latency_s)
        self.control_latency_ns = ns(eng.control_latency_s)
        self.report_interval_ns = ns(eng.report_interval_s)

        default_action = ToController() if eng.default_table_action == "to_controller" else Drop()
        self.tables: Dict[int, FlowTable] = {
            node: FlowTable(node, default_action) for node in self.topology.fixed_nodes()
        }

        self.servers: Dict[str, FifoServer] = {}
        self.ap_channels: Dict[Tuple[int, str], FifoServer] = {}
        for ap in self.topology.access_points.values():
            for direction in (UPLINK, DOWNLINK):
                server = FifoServer(
                    f"ap:{ap.name}:{direction}", ap.wireless_capacity_bps, 0, ap.buffer_packets
                )
                self.servers[server.key] = server
                self.ap_channels[(ap.id, direction)] = server
        self.link_servers: Dict[Tuple[int, int], FifoServer] = {}
        for link in self.topology.backhaul_links:
            a, b = link.endpoints
            for u, v in ((a, b), (b, a)):
                server = FifoServer(
                    f"link:{self.topology.node_name(u)}>{self.topology.node_name(v)}",
                    link.rate_bps, ns(link.propagation_delay_s), link.buffer_packets,
                )
                self.servers[server.key] = server
                self.link_servers[(u, v)] = server

        self.vehicles: Dict[int, VehicleState] = {}
        for veh, active_from in config.vehicle_activations():
            self.vehicles[veh.id] = VehicleState(veh, ns(active_from))

        self.flows: Dict[str, FlowState] = {}
        for spec, known_from in config.flow_activations():
            iface = self._default_iface(spec)
            receivers = spec.subscribers if spec.subscribers else (spec.dst,)
            self.flows[spec.flow_id] = FlowState(spec, spec.flow_id, iface, receivers, ns(known_from))

        self.control = control.ControlPlane(self)

        self._handlers: Dict[str, Callable] = {
            PACKET_SEND: self._on_packet_send,
            TX_COMPLETE: self._on_tx_complete,
            PACKET_ARRIVE: self._on_packet_arrive,
            ATTACH_REQUEST: self._on_attach_request,
            ATTACH_COMPLETE: self._on_attach_complete,
            DETACH: self._on_detach,
            CONTROL_DELIVER: self._on_control_deliver,
            POLICY_TICK: self._on_policy_tick,
            REPORT_TICK: self._on_report_tick,
            FLOW_START: self._on_flow_start,
            FLOW_END: self._on_flow_end,
            IMPAIRMENT_TOGGLE: self._on_impairment,
        }

    # -- scheduling ---------------------------------------------------------

    def schedule(self, t_ns: int, kind: str, payload: tuple) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (t_ns, self._seq, kind, payload))

    def schedule_control(self, delay_ns: int, description: str, thunk: Callable[[], None]) -> None:
        self.schedule(self.now_ns + delay_ns, CONTROL_DELIVER, (description, thunk))

    def emit(self, kind: str, node: str = "-", flow: str = "-", packet: str = "-",
             detail: str = "") -> None:
        self.log.append(f"{self.now_ns} {kind} {node} {flow} {packet} {detail}".rstrip())

    def emit_packet(self, kind: str, node: int, pkt: Packet, detail: str = "") -> None:
        if self.record_packets:
            self.log.append(
                f"{self.now_ns} {kind} {self.topology.node_name(node)} "
                f"{pkt.flow.flow_id} {pkt.pid} {detail}".rstrip()
            )

    # -- setup --------------------------------------------------------------

    def _default_iface(self, spec: FlowSpec) -> Optional[Interface]:
        veh = self.topology.vehicles.get(spec.src)
        if veh is None:
            return None
        for iface in (Interface.DSRC, Interface.CELLULAR):
            if veh.owns(iface):
                return iface
        return None

    def _prepare(self) -> None:
        config = self.config
        # initial vehicles associate before the run starts; injected ones at
        # their phase boundary (instantly: their association predates the
        # measurement window of interest)
        for veh_state in self.vehicles.values():
            at = veh_state.active_from_ns
            self.schedule(at, ATTACH_REQUEST, (veh_state.vehicle.id, None, None, True))
        for fs in self.flows.values():
            self.schedule(ns(fs.spec.start_s), FLOW_START, (fs,))
            self.schedule(fs.end_ns, FLOW_END, (fs,))
        for imp in config.impairments:
            self.schedule(ns(imp.at_s), IMPAIRMENT_TOGGLE, (imp,))
        t = 0
        while t <= self.end_ns:
            self.schedule(t, REPORT_TICK, ())
            t += self.report_interval_ns
        tick_ns = ns(config.policy.tick_s)
        t = 0
        while t <= self.end_ns:
            self.schedule(t, POLICY_TICK, ())
            t += tick_ns
        # forwarding rules are provisioned ahead of each batch of flows; the
        # thunk runs after same-instant attach/tick events but before the
        # first PacketSend of those flows. Without proactive paths the tables
        # stay empty and the default action (usually a controller punt)
        # handles the first packets.
        if self.config.engine.proactive_paths:
            for when in sorted({fs.known_from_ns for fs in self.flows.values()}):
                batch = [fs for fs in self.flows.values() if fs.known_from_ns == when]
                self.schedule(when, CONTROL_DELIVER,
                              ("provision flows " + ",".join(fs.flow_id for fs in batch),
                               (lambda group: lambda: self.control.provision_flows(group))(batch)))

    # -- main loop ----------------------------------------------------------

    def run(self) -> "RunResult":
        self._prepare()
        heap = self._heap
        handlers = self._handlers
        end_ns = self.end_ns
        while heap:
            t_ns, _, kind, payload = heapq.heappop(heap)
            if t_ns > end_ns:
                break
            if t_ns < self.now_ns:
                raise AssertionError(f"event time went backwards: {t_ns} < {self.now_ns}")
            self.now_ns = t_ns
            handlers[kind](*payload)
        self.now_ns = end_ns
        return RunResult(
            config=self.config,
            seed=self.seed,
            event_lines=self.log,
            metrics=MetricsRaw(
                flows=self.flows,
                drops_by_reason=self.drops,
                handovers=self.handovers,
                duration_ns=self.end_ns,
            ),
        )

    # -- packet path --------------------------------------------------------

    def _drop(self, pkt: Packet, code: int, where: int) -> None:
        self.drops[REASON_NAMES[code]] += 1
        pkt.flow.on_copy_drop(pkt.seq, code)
        self.emit_packet(PACKET_ARRIVE, where, pkt, f"drop={REASON_NAMES[code]}")

    def _new_packet(self, fs: FlowState, seq: int, src: int, dst: int,
                    is_echo: bool = False, probe_seq: int = -1) -> Packet:
        self._pid += 1
        return Packet(
            self._pid, fs, seq, fs.spec.packet_size_bytes, src, dst,
            fs.spec.traffic_class, self.now_ns, is_echo=is_echo, probe_seq=probe_seq,
        )

    def _enqueue(self, server: FifoServer, pkt: Packet, next_node: int) -> None:
        pkt.next_node = next_node
        server.offered_bytes += pkt.size
        if server.serving is None:
            server.serving = pkt
            self.schedule(
                self.now_ns + serialization_ns(pkt.size, server.rate_bps),
                TX_COMPLETE, (server,),
            )
        elif len(server.queue) < server.buffer_packets:
            server.queue.append(pkt)
        else:
            server.window_drops += 1
            self._drop(pkt, CODE_BUFFER_OVERFLOW, next_node)

    def _on_tx_complete(self, server: FifoServer) -> None:
        pkt = server.serving
        if server.queue:
            nxt = server.queue.popleft()
            server.serving = nxt
            self.schedule(
                self.now_ns + serialization_ns(nxt.size, server.rate_bps),
                TX_COMPLETE, (server,),
            )
        else:
            server.serving = None
        self.emit_packet(TX_COMPLETE, pkt.next_node, pkt, f"server={server.key}")
        if server.loss_prob > 0.0 and self.rng.random() < server.loss_prob:
            server.window_drops += 1
            self._drop(pkt, CODE_SCRIPTED_LOSS, pkt.next_node)
            return
        self.schedule(self.now_ns + server.prop_ns, PACKET_ARRIVE, (pkt.next_node, pkt))

    def _on_packet_send(self, fs: FlowState, seq: int) -> None:
        spec = fs.spec
        # chain the next send before anything else so generation never stalls
        next_ns = self.now_ns + fs.gap_ns
        if next_ns < fs.end_ns:
            self.schedule(next_ns, PACKET_SEND, (fs, seq + 1))
        fs.on_send(self.now_ns)
        veh = self.vehicles[spec.src]
        dst = -1 if spec.broadcast else spec.dst
        pkt = self._new_packet(fs, seq, spec.src, dst)
        self.emit_packet(PACKET_SEND, spec.src, pkt)
        self._transmit_from_vehicle(veh, fs, pkt)

    def _transmit_from_vehicle(self, veh: VehicleState, fs: FlowState, pkt: Packet) -> None:
        iface = fs.iface
        ap_id = veh.attachments.get(iface) if iface is not None else None
        if ap_id is None:
            if iface is not None and iface not in veh.pending and self._best_by_rssi(veh, iface) is None:
                self._drop(pkt, CODE_NO_COVERAGE, pkt.src)
            else:
                self._drop(pkt, CODE_NO_ATTACHMENT, pkt.src)
            self._maybe_request_attach(veh, iface)
            return
        if not self._in_coverage(veh, ap_id):
            # moved out of range: lose the link, then try to come back
            self._execute_detach(veh, iface, reason="coverage")
            self._drop(pkt, CODE_NO_COVERAGE, pkt.src)
            self._maybe_request_attach(veh, iface)
            return
        self._enqueue(self.ap_channels[(ap_id, UPLINK)], pkt, ap_id)

    def _in_coverage(self, veh: VehicleState, ap_id: int) -> bool:
        if veh.static_pos is not None:
            hit = veh.coverage_cache.get(ap_id)
            if hit is not None:
                return hit
        pos = veh.position(self.now_ns)
        ap = self.topology.access_points[ap_id]
        ok = (
            pos is not None
            and rssi_dbm(ap.radio, pos.distance_to(ap.position)) >= ap.radio.rx_threshold_dbm
        )
        if veh.static_pos is not None:
            veh.coverage_cache[ap_id] = ok
        return ok

    def _on_packet_arrive(self, node: int, pkt: Packet) -> None:
        pkt.hop_trace.append(node)
        veh = self.vehicles.get(node)
        if veh is not None:
            self._deliver_to_vehicle(veh, pkt)
            return
        self.emit_packet(PACKET_ARRIVE, node, pkt)
        if node == pkt.dst:
            # infrastructure sink (e.g. a switch standing in for the cloud)
            pkt.flow.on_copy_delivered(pkt.seq, node, self.now_ns)
            return
        self._apply_action(match_rule(self.tables[node], pkt), pkt, node)

    def _apply_action(self, action: Action, pkt: Packet, node: int) -> None:
        kind = type(action)
        if kind is Forward:
            self._forward(pkt, node, action.next_hop)
        elif kind is Duplicate:
            hops = action.next_hops
            pkt.flow.on_split(pkt.seq, len(hops) - 1)
            for hop in hops:
                copy = Packet(
                    self._pid + 1, pkt.flow, pkt.seq, pkt.size, pkt.src, pkt.dst,
                    pkt.traffic_class, pkt.created_ns, duplicate_of=pkt.pid,
                    is_echo=pkt.is_echo, probe_seq=pkt.probe_seq,
                )
                self._pid += 1
                copy.hop_trace = list(pkt.hop_trace)
                self._forward(copy, node, hop)
        elif kind is Drop:
            self._drop(pkt, CODE_RULE_DROP, node)
        elif kind is ToController:
            self._drop(pkt, CODE_PUNTED, node)
            self.control.packet_in(node, pkt.flow)
        else:
            raise UnknownNextHop(f"unhandled action {action!r} at node {node}")

    def _forward(self, pkt: Packet, node: int, next_hop: int) -> None:
        veh = self.vehicles.get(next_hop)
        if veh is not None:
            # wireless delivery from this access point down to the vehicle
            iface_map = veh.attachments
            if node not in iface_map.values():
                self._drop(pkt, CODE_NO_ATTACHMENT, node)
                return
            self._enqueue(self.ap_channels[(node, DOWNLINK)], pkt, next_hop)
            return
        server = self.link_servers.get((node, next_hop))
        if server is None:
            raise UnknownNextHop(
                f"no link from {self.topology.node_name(node)} to node {next_hop}"
            )
        self._enqueue(server, pkt, next_hop)

    def _deliver_to_vehicle(self, veh: VehicleState, pkt: Packet) -> None:
        fs = pkt.flow
        arrived_from = pkt.hop_trace[-2] if len(pkt.hop_trace) > 1 else -1
        if arrived_from not in veh.attachments.values():
            # detached while the packet was in flight
            self._drop(pkt, CODE_NO_ATTACHMENT, veh.vehicle.id)
            return
        node = veh.vehicle.id
        if node not in fs.outcomes:
            # a stale or hand-written rule steered the packet to the wrong car
            self._drop(pkt, CODE_RULE_DROP, node)
            return
        first = fs.on_copy_delivered(pkt.seq, node, self.now_ns)
        self.emit_packet(PACKET_ARRIVE, node, pkt, "delivered" if first else "duplicate")
        if not first:
            return
        if pkt.is_echo:
            origin = self.flows[fs.flow_id.rsplit("/", 1)[0]]
            origin.echo_return[pkt.probe_seq] = self.now_ns
        elif pkt.traffic_class == PROBE_CLASS and node == fs.spec.dst:
            self._send_echo(veh, fs, pkt)

    def _send_echo(self, veh: VehicleState, fs: FlowState, request: Packet) -> None:
        echo = fs.echo_state
        if echo is None:
            spec = FlowSpec(
                flow_id=fs.flow_id + "/echo", src=fs.spec.dst, dst=fs.spec.src,
                traffic_class=fs.spec.traffic_class, rate_bps=fs.spec.rate_bps,
                packet_size_bytes=fs.spec.packet_size_bytes, start_s=fs.spec.start_s,
                duration_s=fs.spec.duration_s, model=fs.spec.model,
            )
            echo = FlowState(spec, spec.flow_id, fs.iface, (spec.dst,), fs.known_from_ns)
            fs.echo_state = echo
            self.flows[echo.flow_id] = echo
        seq = echo.on_send(self.now_ns)
        pkt = self._new_packet(echo, seq, echo.spec.src, echo.spec.dst,
                               is_echo=True, probe_seq=request.seq)
        self.emit_packet(PACKET_SEND, echo.spec.src, pkt, "echo")
        self._transmit_from_vehicle(veh, echo, pkt)

    # -- attachment ---------------------------------------------------------

    def _maybe_request_attach(self, veh: VehicleState, iface: Optional[Interface]) -> None:
        if iface is None or iface in veh.pending or iface in veh.attachments:
            return
        ap_id = self._best_by_rssi(veh, iface)
        if ap_id is not None:
            self.schedule(self.now_ns, ATTACH_REQUEST, (veh.vehicle.id, ap_id, iface, False))

    def _best_by_rssi(self, veh: VehicleState, iface: Interface) -> Optional[int]:
        pos = veh.position(self.now_ns)
        if pos is None:
            return None
        heard = candidate_attachments(pos, [iface], self.topology.access_points.values())
        return heard[0][0] if heard else None

    def _on_attach_request(self, vehicle_id: int, ap_id: Optional[int],
                           iface: Optional[Interface], initial: bool) -> None:
        veh = self.vehicles[vehicle_id]
        if initial:
            # associate every owned interface to its strongest audible AP
            for owned in sorted(veh.vehicle.interfaces, key=lambda i: i.value):
                best = self._best_by_rssi(veh, owned)
                if best is not None:
                    self.emit(ATTACH_REQUEST, veh.vehicle.name, detail=f"ap={self.topology.node_name(best)} initial")
                    self._complete_attach(veh, owned, best)
            return
        assert iface is not None and ap_id is not None
        if not self._in_coverage(veh, ap_id):
            raise NotInCoverage(
                f"{veh.vehicle.name} cannot attach to {self.topology.node_name(ap_id)}"
            )
        veh.pending[iface] = ap_id
        self.emit(ATTACH_REQUEST, veh.vehicle.name, detail=f"ap={self.topology.node_name(ap_id)}")
        self.schedule(self.now_ns + self.attach_latency_ns, ATTACH_COMPLETE,
                      (vehicle_id, ap_id, iface))

    def _complete_attach(self, veh: VehicleState, iface: Interface, ap_id: int) -> None:
        veh.pending.pop(iface, None)
        veh.attachments[iface] = ap_id
        self.emit(ATTACH_COMPLETE, veh.vehicle.name,
                  detail=f"ap={self.topology.node_name(ap_id)} iface={iface.value}")
        self.control.notify_attach(veh.vehicle.id, ap_id)
        for record in self.handovers:
            if record.vehicle == veh.vehicle.id and record.to_ap == ap_id and record.complete_ns < 0:
                record.complete_ns = self.now_ns

    def _on_attach_complete(self, vehicle_id: int, ap_id: int, iface: Interface) -> None:
        veh = self.vehicles[vehicle_id]
        if veh.pending.get(iface) != ap_id:
            return  # superseded by a newer command
        self._complete_attach(veh, iface, ap_id)

    def _execute_detach(self, veh: VehicleState, iface: Interface, reason: str) -> None:
        ap_id = veh.attachments.pop(iface, None)
        if ap_id is None:
            return
        if veh.static_pos is not None:
            veh.coverage_cache.pop(ap_id, None)
        self.emit(DETACH, veh.vehicle.name,
                  detail=f"ap={self.topology.node_name(ap_id)} reason={reason}")
        self.control.notify_detach(veh.vehicle.id, ap_id)

    def _on_detach(self, vehicle_id: int, iface: Interface, reason: str) -> None:
        self._execute_detach(self.vehicles[vehicle_id], iface, reason)

    def execute_handover(self, vehicle_id: int, from_ap: int, to_ap: int,
                         record: HandoverRecord) -> None:
        """Vehicle-side handover action, run at command delivery time."""
        veh = self.vehicles[vehicle_id]
        iface = next(
            (i for i, ap in veh.attachments.items() if ap == from_ap),
            Interface.DSRC,
        )
        record.detach_ns = self.now_ns
        self._execute_detach(veh, iface, reason="handover")
        veh.pending[iface] = to_ap
        self.schedule(self.now_ns + self.attach_latency_ns, ATTACH_COMPLETE,
                      (vehicle_id, to_ap, iface))

    # -- control and ticks ----------------------------------------------------

    def _on_control_deliver(self, description: str, thunk: Callable[[], None]) -> None:
        self.emit(CONTROL_DELIVER, detail=description)
        thunk()

    def _on_policy_tick(self) -> None:
        self.control.policy_tick()

    def _on_report_tick(self) -> None:
        window_s = self.report_interval_ns / NS_PER_S
        for ap in self.topology.access_points.values():
            up = self.ap_channels[(ap.id, UPLINK)]
            down = self.ap_channels[(ap.id, DOWNLINK)]
            attached = sum(
                1 for veh in self.vehicles.values() if ap.id in veh.attachments.values()
            )
            offered_bps = (up.offered_bytes + down.offered_bytes) * 8 / window_s
            occupancy = max(up.occupancy(), down.occupancy())
            drops = up.window_drops + down.window_drops
            up.offered_bytes = down.offered_bytes = 0
            up.window_drops = down.window_drops = 0
            self.emit(REPORT_TICK, self.topology.node_name(ap.id),
                      detail=f"attached={attached} offered_bps={offered_bps:.0f} "
                             f"occupancy={occupancy:.3f} drops={drops}")
            self.control.submit_report(ap.id, attached, offered_bps, occupancy, drops)

    def _on_flow_start(self, fs: FlowState) -> None:
        self.emit(FLOW_START, flow=fs.flow_id)
        if ns(fs.spec.start_s) < fs.end_ns:
            self.schedule(self.now_ns, PACKET_SEND, (fs, 0))

    def _on_flow_end(self, fs: FlowState) -> None:
        self.emit(FLOW_END, flow=fs.flow_id)

    def _on_impairment(self, imp) -> None:
        server = self._resolve_impairment_target(imp)
        server.loss_prob = imp.loss_prob
        self.emit(IMPAIRMENT_TOGGLE, detail=f"server={server.key} loss={imp.loss_prob}")

    def _resolve_impairment_target(self, imp) -> FifoServer:
        if imp.link is not None:
            a, b = imp.link
            server = self.link_servers.get((a, b))
            if server is None:
                raise UnknownNextHop(f"impairment names missing link {a}->{b}")
            return server
        assert imp.ap is not None and imp.direction is not None
        return self.ap_channels[(imp.ap, imp.direction)]


@dataclass
class RunResult:
    config: object
    seed: int
    event_lines: List[str]
    metrics: MetricsRaw

    def event_log_text(self) -> str:
        return "\n".join(self.event_lines) + ("\n" if self.event_lines else "")


def run(config, seed: int, record_packets: bool = False) -> RunResult:
    """Simulate one scenario to completion; bit-identical per (config, seed)."""
    return Simulation(config, seed, record_packets=record_packets).run()
