"""Static network model: access points, backhaul graph, vehicles, path computation.

All node ids are plain non-negative ints, unique across one topology. The
backhaul graph (access points + switches + wired links) is immutable after
construction; vehicles move, infrastructure does not.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import (
    DanglingLinkEndpoint,
    DisconnectedBackhaul,
    DuplicateNodeId,
    NoDisjointPaths,
    NoPath,
    PositionOutOfArea,
)
from .radio import RadioParams

NodeId = int


class ApKind(str, Enum):
    RSU = "rsu"
    BASE_STATION = "base_station"


class Interface(str, Enum):
    DSRC = "dsrc"
    CELLULAR = "cellular"

    @property
    def ap_kind(self) -> ApKind:
        return ApKind.RSU if self is Interface.DSRC else ApKind.BASE_STATION


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class AccessPoint:
    id: NodeId
    name: str
    kind: ApKind
    position: Position
    radio: RadioParams
    wireless_capacity_bps: int
    buffer_packets: int

    def __post_init__(self):
        if self.wireless_capacity_bps <= 0:
            raise ValueError(f"access point {self.name}: capacity must be > 0")
        if self.buffer_packets < 1:
            raise ValueError(f"access point {self.name}: buffer must be >= 1")


@dataclass(frozen=True)
class Switch:
    id: NodeId
    name: str
    position: Position


@dataclass
class Vehicle:
    """A mobile node. `attachments` holds at most one access point per owned
    interface (a dual-homed vehicle can be on an RSU and a base station at
    the same time)."""

    id: NodeId
    name: str
    plan: "TrajectoryPlan"
    interfaces: frozenset
    attachments: Dict[Interface, NodeId] = field(default_factory=dict)

    def owns(self, iface: Interface) -> bool:
        return iface in self.interfaces


@dataclass(frozen=True)
class BackhaulLink:
    endpoints: Tuple[NodeId, NodeId]
    rate_bps: int
    propagation_delay_s: float
    buffer_packets: int

    def __post_init__(self):
        a, b = self.endpoints
        if a == b:
            raise ValueError("link endpoints must be distinct")
        if self.rate_bps <= 0:
            raise ValueError("link rate must be > 0")
        if self.propagation_delay_s < 0:
            raise ValueError("link delay must be >= 0")


@dataclass
class Topology:
    access_points: Dict[NodeId, AccessPoint]
    switches: Dict[NodeId, Switch]
    vehicles: Dict[NodeId, Vehicle]
    backhaul_links: List[BackhaulLink]
    area: Tuple[float, float]

    def fixed_nodes(self) -> Dict[NodeId, object]:
        out: Dict[NodeId, object] = dict(self.access_points)
        out.update(self.switches)
        return out

    def node_name(self, node_id: NodeId) -> str:
        if node_id in self.access_points:
            return self.access_points[node_id].name
        if node_id in self.switches:
            return self.switches[node_id].name
        if node_id in self.vehicles:
            return self.vehicles[node_id].name
        return str(node_id)

    def adjacency(self) -> Dict[NodeId, Dict[NodeId, float]]:
        """Backhaul adjacency: neighbor -> propagation delay in seconds."""
        adj: Dict[NodeId, Dict[NodeId, float]] = {n: {} for n in self.fixed_nodes()}
        for link in self.backhaul_links:
            a, b = link.endpoints
            # parallel links: keep the lower-delay one
            for u, v in ((a, b), (b, a)):
                prev = adj[u].get(v)
                if prev is None or link.propagation_delay_s < prev:
                    adj[u][v] = link.propagation_delay_s
        return adj

    def link_between(self, a: NodeId, b: NodeId) -> Optional[BackhaulLink]:
        best = None
        for link in self.backhaul_links:
            if set(link.endpoints) == {a, b}:
                if best is None or link.propagation_delay_s < best.propagation_delay_s:
                    best = link
        return best

    def validate(self) -> "Topology":
        """Re-check all structural invariants; idempotent on a valid topology."""
        _validate(self)
        return self


def _validate(topo: Topology) -> None:
    seen: Dict[NodeId, str] = {}
    for group in (topo.access_points, topo.switches, topo.vehicles):
        for node_id in group:
            if node_id in seen:
                raise DuplicateNodeId(f"node id {node_id} used more than once")
            seen[node_id] = ""

    ax, ay = topo.area
    for ap in topo.access_points.values():
        _check_in_area(ap.position, ax, ay, ap.name)
    for sw in topo.switches.values():
        _check_in_area(sw.position, ax, ay, sw.name)
    for veh in topo.vehicles.values():
        for _, pos in veh.plan.waypoints:
            _check_in_area(pos, ax, ay, veh.name)

    fixed = topo.fixed_nodes()
    for link in topo.backhaul_links:
        for end in link.endpoints:
            if end not in fixed:
                raise DanglingLinkEndpoint(f"link endpoint {end} is not a fixed node")

    # the backhaul over fixed nodes must be one component (vacuous when <= 1 node)
    if len(fixed) > 1:
        adj = topo.adjacency()
        start = min(fixed)
        reached = {start}
        frontier = [start]
        while frontier:
            node = frontier.pop()
            for neighbor in adj[node]:
                if neighbor not in reached:
                    reached.add(neighbor)
                    frontier.append(neighbor)
        if reached != set(fixed):
            missing = sorted(set(fixed) - reached)
            raise DisconnectedBackhaul(f"fixed nodes unreachable from {start}: {missing}")


def _check_in_area(pos: Position, ax: float, ay: float, name: str) -> None:
    if not (math.isfinite(pos.x) and math.isfinite(pos.y)):
        raise PositionOutOfArea(f"{name}: non-finite position")
    if not (0 <= pos.x <= ax and 0 <= pos.y <= ay):
        raise PositionOutOfArea(f"{name}: ({pos.x}, {pos.y}) outside [0,{ax}]x[0,{ay}]")


def build_topology(config) -> Topology:
    """Assemble and validate a Topology from a parsed ScenarioConfig.

    Vehicles from every phase are included; the engine activates them at
    their injection time.
    """
    topo = Topology(
        access_points={ap.id: ap for ap in config.access_points},
        switches={sw.id: sw for sw in config.switches},
        vehicles={v.id: v for v in config.all_vehicles()},
        backhaul_links=list(config.backhaul_links),
        area=config.area,
    )
    # dict construction silently drops duplicate ids; re-count explicitly
    n_declared = (
        len(config.access_points) + len(config.switches) + len(list(config.all_vehicles()))
    )
    n_kept = len(topo.access_points) + len(topo.switches) + len(topo.vehicles)
    if n_kept != n_declared:
        raise DuplicateNodeId("duplicate node ids in scenario")
    _validate(topo)
    return topo


def shortest_backhaul_path(topology: Topology, src_ap: NodeId, dst_ap: NodeId) -> List[NodeId]:
    """Minimum-propagation-delay path between two fixed nodes.

    Ties are broken by the lexicographically smallest id sequence, so the
    result is deterministic for any input graph.
    """
    fixed = topology.fixed_nodes()
    if src_ap not in fixed:
        raise NoPath(f"source {src_ap} is not a fixed node")
    if dst_ap not in fixed:
        raise NoPath(f"destination {dst_ap} is not a fixed node")
    if src_ap == dst_ap:
        return [src_ap]

    adj = topology.adjacency()
    # carry the whole path in the heap entry: tuple comparison gives the
    # lexicographic tie-break for free
    heap: List[Tuple[float, Tuple[NodeId, ...]]] = [(0.0, (src_ap,))]
    settled = set()
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == dst_ap:
            return list(path)
        for neighbor, delay in adj[node].items():
            if neighbor not in settled:
                heapq.heappush(heap, (cost + delay, path + (neighbor,)))
    raise NoPath(f"no backhaul path from {src_ap} to {dst_ap}")


def path_delay_s(topology: Topology, path: Sequence[NodeId]) -> float:
    adj = topology.adjacency()
    total = 0.0
    for a, b in zip(path, path[1:]):
        if b not in adj.get(a, {}):
            raise NoPath(f"nodes {a} and {b} share no link")
        total += adj[a][b]
    return total


def all_simple_paths(topology: Topology, src: NodeId, dst: NodeId) -> List[List[NodeId]]:
    """Exhaustive simple-path enumeration; intended for small graphs."""
    adj = topology.adjacency()
    out: List[List[NodeId]] = []

    def walk(node: NodeId, path: List[NodeId]):
        if node == dst:
            out.append(list(path))
            return
        for neighbor in sorted(adj[node]):
            if neighbor not in path:
                path.append(neighbor)
                walk(neighbor, path)
                path.pop()

    if src in adj and dst in adj:
        walk(src, [src])
    return out


def node_disjoint_paths(topology: Topology, src: NodeId, dst: NodeId) -> Tuple[List[NodeId], List[NodeId]]:
    """Two paths between src and dst sharing no intermediate node.

    Exhaustive search over simple paths, deterministic: the pair with the
    smallest (total delay, id-sequence) wins. Raises NoDisjointPaths when no
    such pair exists (e.g. every path crosses one cut vertex).
    """
    paths = all_simple_paths(topology, src, dst)
    ranked = sorted(paths, key=lambda p: (path_delay_s(topology, p), p))
    best = None
    for i, first in enumerate(ranked):
        inner_first = set(first[1:-1])
        for second in ranked[i + 1:]:
            if inner_first.isdisjoint(second[1:-1]):
                key = (
                    path_delay_s(topology, first) + path_delay_s(topology, second),
                    first,
                    second,
                )
                if best is None or key < best:
                    best = key
    if best is None:
        raise NoDisjointPaths(f"no two node-disjoint paths between {src} and {dst}")
    return list(best[1]), list(best[2])
