"""Log-distance path loss, RSSI and coverage.

Propagation is fully deterministic: PL(d) = PL0 + 10*n*log10(d/d0), clamped
to PL0 below the reference distance. Link-quality variation is injected
elsewhere (scripted loss on channels), never here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Tuple

from .errors import NonFiniteDistance, ThresholdAboveMaxPower

# calibrated so an RSU with these parameters reaches exactly 600 m
DEFAULT_TX_POWER_DBM = 20.0
DEFAULT_REF_DISTANCE_M = 1.0
DEFAULT_REF_LOSS_DB = 40.0
DEFAULT_EXPONENT = 3.0
DEFAULT_RX_THRESHOLD_DBM = -103.3445


@dataclass(frozen=True)
class RadioParams:
    tx_power_dbm: float = DEFAULT_TX_POWER_DBM
    ref_distance_m: float = DEFAULT_REF_DISTANCE_M
    ref_loss_db: float = DEFAULT_REF_LOSS_DB
    exponent: float = DEFAULT_EXPONENT
    rx_threshold_dbm: float = DEFAULT_RX_THRESHOLD_DBM

    def __post_init__(self):
        if not self.ref_distance_m > 0:
            raise ValueError("reference distance must be > 0")
        if not self.exponent > 0:
            raise ValueError("path-loss exponent must be > 0")
        if not math.isfinite(self.tx_power_dbm):
            raise ValueError("tx power must be finite")


def path_loss_db(params: RadioParams, distance_m: float) -> float:
    """Attenuation in dB at the given distance; PL0 for anything inside d0."""
    if not math.isfinite(distance_m):
        raise NonFiniteDistance(f"distance {distance_m!r}")
    if distance_m <= params.ref_distance_m:
        return params.ref_loss_db
    return params.ref_loss_db + 10.0 * params.exponent * math.log10(
        distance_m / params.ref_distance_m
    )


def rssi_dbm(params: RadioParams, distance_m: float) -> float:
    return params.tx_power_dbm - path_loss_db(params, distance_m)


def coverage_radius_m(params: RadioParams) -> float:
    """Distance at which RSSI equals the receive threshold (closed form)."""
    headroom_db = params.tx_power_dbm - params.rx_threshold_dbm - params.ref_loss_db
    if headroom_db < 0:
        raise ThresholdAboveMaxPower(
            f"threshold {params.rx_threshold_dbm} dBm exceeds signal at reference "
            f"distance ({params.tx_power_dbm - params.ref_loss_db} dBm)"
        )
    return params.ref_distance_m * 10.0 ** (headroom_db / (10.0 * params.exponent))


def candidate_attachments(position, interfaces: Iterable, access_points) -> List[Tuple[int, float]]:
    """Access points audible from `position` over an owned interface.

    Returns (ap_id, rssi_dbm) pairs holding rssi >= the AP's own threshold,
    strongest first; equal-RSSI ties go to the lower id.
    """
    kinds = {iface.ap_kind for iface in interfaces}
    heard = []
    for ap in access_points:
        if ap.kind not in kinds:
            continue
        level = rssi_dbm(ap.radio, position.distance_to(ap.position))
        if level >= ap.radio.rx_threshold_dbm:
            heard.append((ap.id, level))
    heard.sort(key=lambda pair: (-pair[1], pair[0]))
    return heard
