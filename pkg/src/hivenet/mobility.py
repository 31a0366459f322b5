"""Vehicle motion on waypoint plans, and the cloud-side trajectory oracle.

The control plane predicts future positions from the same plans the engine
moves vehicles with, so prediction is exact by construction. Density
classification follows the usual environment bands (vehicles per square km).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .errors import TimeBeforePlanStart
from .model import Position

DENSITY_URBAN = 1000.0
DENSITY_SUBURBAN = 500.0
DENSITY_HIGHWAY = 100.0


@dataclass(frozen=True)
class TrajectoryPlan:
    """Piecewise-linear motion: exact at waypoints, interpolated between.

    When hold_after_last is False the vehicle leaves the scenario after its
    last waypoint time (position_at returns None past the end).
    """

    waypoints: Tuple[Tuple[float, Position], ...]
    hold_after_last: bool = True

    def __post_init__(self):
        if len(self.waypoints) < 1:
            raise ValueError("a plan needs at least one waypoint")
        times = [t for t, _ in self.waypoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("waypoint times must be strictly increasing")

    @property
    def start_time_s(self) -> float:
        return self.waypoints[0][0]

    @property
    def end_time_s(self) -> float:
        return self.waypoints[-1][0]


def stationary_plan(pos: Position, at_s: float = 0.0) -> TrajectoryPlan:
    return TrajectoryPlan(waypoints=((at_s, pos),))


def position_at(plan: TrajectoryPlan, t_s: float) -> Optional[Position]:
    """Position at time t; None when the vehicle has left (hold_after_last off)."""
    points = plan.waypoints
    if t_s < points[0][0]:
        raise TimeBeforePlanStart(f"t={t_s} precedes plan start {points[0][0]}")
    if t_s >= points[-1][0]:
        if t_s > points[-1][0] and not plan.hold_after_last:
            return None
        return points[-1][1]
    # linear scan: plans are short; callers needing speed cache per segment
    for (t0, p0), (t1, p1) in zip(points, points[1:]):
        if t0 <= t_s <= t1:
            frac = (t_s - t0) / (t1 - t0)
            return Position(p0.x + frac * (p1.x - p0.x), p0.y + frac * (p1.y - p0.y))
    raise AssertionError("unreachable: waypoint times are ordered")


def predict_position(plan: TrajectoryPlan, t_future_s: float) -> Optional[Position]:
    """Cloud-oracle prediction; plans are known exactly, so this is position_at."""
    return position_at(plan, t_future_s)


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle, half-open on the max edges so that adjacent
    regions tile the area without double counting."""

    min_corner: Position
    max_corner: Position

    def __post_init__(self):
        if not (self.min_corner.x < self.max_corner.x and self.min_corner.y < self.max_corner.y):
            raise ValueError("region must be non-degenerate")

    def contains(self, pos: Position) -> bool:
        return (
            self.min_corner.x <= pos.x < self.max_corner.x
            and self.min_corner.y <= pos.y < self.max_corner.y
        )

    @property
    def area_km2(self) -> float:
        dx = self.max_corner.x - self.min_corner.x
        dy = self.max_corner.y - self.min_corner.y
        return dx * dy / 1e6


def classify_density(vehicles_per_km2: float) -> str:
    if vehicles_per_km2 >= DENSITY_URBAN:
        return "urban"
    if vehicles_per_km2 >= DENSITY_SUBURBAN:
        return "suburban"
    if vehicles_per_km2 >= DENSITY_HIGHWAY:
        return "highway"
    return "sparse"


def region_density(
    plans: Iterable[TrajectoryPlan], region: Region, t_s: float
) -> Tuple[float, str]:
    """Predicted vehicle density in a region at time t, with its environment class."""
    count = 0
    for plan in plans:
        try:
            pos = predict_position(plan, t_s)
        except TimeBeforePlanStart:
            continue
        if pos is not None and region.contains(pos):
            count += 1
    density = count / region.area_km2
    return density, classify_density(density)
