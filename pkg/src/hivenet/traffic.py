"""ITS traffic models, flow specifications and conformance checking.

The four standard traffic profiles (M1..M4) pin the latency/frequency/
reliability envelope a service must meet; flows either derive their packet
cadence from a periodic model or from an explicit constant bit rate.

All engine-facing schedules are computed in integer nanoseconds; the
seconds-based helpers are thin views over the same arithmetic so test code
and the engine can never disagree on send times.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

from .errors import EmptyLog, ZeroRate

NS_PER_S = 1_000_000_000

HIGH_RELIABILITY_MAX_LOSS = 1e-5

MIN_PACKET_BYTES = 64
MAX_PACKET_BYTES = 1500


@dataclass(frozen=True)
class TrafficModel:
    id: str
    periodic: bool
    mode: str  # unicast | broadcast
    max_latency_ms: float
    min_frequency_hz: float
    high_reliability: bool


M1 = TrafficModel("M1", periodic=True, mode="broadcast", max_latency_ms=100.0,
                  min_frequency_hz=10.0, high_reliability=True)
M2 = TrafficModel("M2", periodic=False, mode="unicast", max_latency_ms=100.0,
                  min_frequency_hz=10.0, high_reliability=True)
M3 = TrafficModel("M3", periodic=True, mode="broadcast", max_latency_ms=500.0,
                  min_frequency_hz=2.0, high_reliability=False)
M4 = TrafficModel("M4", periodic=False, mode="unicast", max_latency_ms=500.0,
                  min_frequency_hz=2.0, high_reliability=False)

MODELS = {m.id: m for m in (M1, M2, M3, M4)}


def model_period_ms(model: TrafficModel) -> Optional[float]:
    """Inter-message period for periodic models; None for event-driven ones."""
    if not model.periodic:
        return None
    return 1000.0 / model.min_frequency_hz


@dataclass(frozen=True)
class FlowSpec:
    """One unidirectional application flow.

    dst names a single node; broadcast flows list every subscriber in
    `subscribers` instead and leave dst as the first of them. Periodic-model
    flows carry rate_bps=0 and derive their cadence (and effective rate)
    from the model.
    """

    flow_id: str
    src: int
    dst: int
    traffic_class: str
    rate_bps: int
    packet_size_bytes: int
    start_s: float
    duration_s: float
    model: Optional[TrafficModel] = None
    subscribers: Tuple[int, ...] = ()

    def __post_init__(self):
        periodic = self.model is not None and self.model.periodic
        if periodic == (self.rate_bps > 0):
            raise ValueError(
                f"flow {self.flow_id}: rate_bps and a periodic model are mutually exclusive"
            )
        if not (MIN_PACKET_BYTES <= self.packet_size_bytes <= MAX_PACKET_BYTES):
            raise ValueError(
                f"flow {self.flow_id}: packet size {self.packet_size_bytes} outside "
                f"[{MIN_PACKET_BYTES}, {MAX_PACKET_BYTES}]"
            )
        if self.duration_s < 0:
            raise ValueError(f"flow {self.flow_id}: negative duration")

    @property
    def broadcast(self) -> bool:
        return len(self.subscribers) > 1

    @property
    def effective_rate_bps(self) -> float:
        """Offered bit rate; for periodic flows, frequency * packet size."""
        if self.rate_bps > 0:
            return float(self.rate_bps)
        assert self.model is not None
        return self.model.min_frequency_hz * self.packet_size_bytes * 8

    def gap_ns(self) -> int:
        """Inter-packet spacing in nanoseconds."""
        if self.model is not None and self.model.periodic:
            return round(NS_PER_S / self.model.min_frequency_hz)
        if self.rate_bps <= 0:
            raise ZeroRate(f"flow {self.flow_id} has no rate and no periodic model")
        return self.packet_size_bytes * 8 * NS_PER_S // self.rate_bps

    def send_times_ns(self) -> Iterator[int]:
        """Send instants within [start, start + duration), evenly spaced."""
        start = round(self.start_s * NS_PER_S)
        end = round((self.start_s + self.duration_s) * NS_PER_S)
        gap = self.gap_ns()
        t = start
        while t < end:
            yield t
            t += gap


def packet_schedule(spec: FlowSpec) -> List[Tuple[float, int]]:
    """(send_time_s, packet_size_bytes) pairs for the whole flow."""
    return [(t / NS_PER_S, spec.packet_size_bytes) for t in spec.send_times_ns()]


@dataclass(frozen=True)
class DeliveryOutcome:
    """One source packet's fate, as needed for conformance checking."""

    send_s: float
    delivered: bool
    latency_s: Optional[float] = None


@dataclass(frozen=True)
class ConformanceReport:
    flow_id: str
    sent: int
    delivered: int
    loss_ratio: float
    latency_violations: int
    passed: bool


def check_conformance(
    model: TrafficModel, flow_id: str, log: Sequence[DeliveryOutcome]
) -> ConformanceReport:
    """Judge a delivery log against a traffic model's latency and loss bounds.

    Fails on any delivery slower than the model's max latency; for
    high-reliability models, also on loss above the 1e-5 bound.
    """
    if not log:
        raise EmptyLog(f"no packets recorded for flow {flow_id}")
    sent = len(log)
    delivered = sum(1 for rec in log if rec.delivered)
    max_latency_s = model.max_latency_ms / 1000.0
    violations = sum(
        1
        for rec in log
        if rec.delivered and rec.latency_s is not None and rec.latency_s > max_latency_s
    )
    loss_ratio = 1.0 - delivered / sent
    passed = violations == 0
    if model.high_reliability and loss_ratio > HIGH_RELIABILITY_MAX_LOSS:
        passed = False
    return ConformanceReport(
        flow_id=flow_id,
        sent=sent,
        delivered=delivered,
        loss_ratio=loss_ratio,
        latency_violations=violations,
        passed=passed,
    )
