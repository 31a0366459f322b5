"""Per-interval delivery-ratio and round-trip series, CSV export, SVG charts.

Packets are bucketed by their send time, so a delivery counts toward the
interval that produced the packet no matter when the copy arrived. An
interval with nothing sent has no delivery ratio at all (the field stays
empty rather than pretending 0 or 1), and an interval whose probes all died
has no mean round-trip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import IoFailure

METRIC_PDR = "pdr"
METRIC_RTT = "mean_rtt_ms"

CSV_HEADER = "t_start_s,t_end_s,flow_id,metric,value"


@dataclass(frozen=True)
class IntervalStat:
    t_start_s: float
    t_end_s: float
    flow_id: str
    sent: Optional[int] = None
    delivered: Optional[int] = None
    pdr: Optional[float] = None
    rtt_samples: Optional[int] = None
    mean_rtt_ms: Optional[float] = None

    def __post_init__(self):
        if self.pdr is not None and not (0.0 <= self.pdr <= 1.0):
            raise ValueError(f"delivery ratio {self.pdr} outside [0,1]")
        if self.sent is not None and self.delivered is not None and self.delivered > self.sent:
            raise ValueError("delivered exceeds sent")


@dataclass(frozen=True)
class ProbeSample:
    probe_id: int
    sent_s: float
    returned_s: Optional[float] = None

    @property
    def rtt_ms(self) -> Optional[float]:
        if self.returned_s is None:
            return None
        return (self.returned_s - self.sent_s) * 1000.0


def _interval_count(duration_s: float, interval_s: float) -> int:
    return max(1, math.ceil(round(duration_s / interval_s, 9)))


def pdr_series(
    delivery_log: Sequence[Tuple[float, bool]],
    interval_s: float,
    duration_s: float,
    flow_id: str,
) -> List[IntervalStat]:
    """Delivery ratio per interval from (send_s, delivered) records."""
    n = _interval_count(duration_s, interval_s)
    sent = [0] * n
    delivered = [0] * n
    for send_s, ok in delivery_log:
        idx = min(int(send_s / interval_s), n - 1)
        sent[idx] += 1
        if ok:
            delivered[idx] += 1
    out = []
    for i in range(n):
        out.append(IntervalStat(
            t_start_s=i * interval_s,
            t_end_s=(i + 1) * interval_s,
            flow_id=flow_id,
            sent=sent[i],
            delivered=delivered[i],
            pdr=(delivered[i] / sent[i]) if sent[i] else None,
        ))
    return out


def rtt_series(
    probe_log: Sequence[Tuple[float, Optional[float]]],
    interval_s: float,
    duration_s: float,
    flow_id: str,
) -> List[IntervalStat]:
    """Mean round-trip per interval from (send_s, rtt_ms or None) records;
    lost probes contribute nothing."""
    n = _interval_count(duration_s, interval_s)
    sums = [0.0] * n
    counts = [0] * n
    for send_s, rtt_ms in probe_log:
        if rtt_ms is None:
            continue
        idx = min(int(send_s / interval_s), n - 1)
        sums[idx] += rtt_ms
        counts[idx] += 1
    out = []
    for i in range(n):
        out.append(IntervalStat(
            t_start_s=i * interval_s,
            t_end_s=(i + 1) * interval_s,
            flow_id=flow_id,
            rtt_samples=counts[i],
            mean_rtt_ms=(sums[i] / counts[i]) if counts[i] else None,
        ))
    return out


def _fmt_time(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return repr(value)


def _fmt_value(value: Optional[float]) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and value == int(value):
        return f"{value:.1f}"
    return repr(float(value))


def csv_rows(series: Iterable[IntervalStat]) -> List[Tuple[float, str, str, Optional[float]]]:
    rows = []
    for stat in series:
        if stat.sent is not None:
            rows.append((stat.t_start_s, stat.t_end_s, stat.flow_id, METRIC_PDR, stat.pdr))
        if stat.rtt_samples is not None:
            rows.append((stat.t_start_s, stat.t_end_s, stat.flow_id, METRIC_RTT, stat.mean_rtt_ms))
        if stat.sent is None and stat.rtt_samples is None:
            if stat.pdr is not None:
                rows.append((stat.t_start_s, stat.t_end_s, stat.flow_id, METRIC_PDR, stat.pdr))
            if stat.mean_rtt_ms is not None:
                rows.append((stat.t_start_s, stat.t_end_s, stat.flow_id, METRIC_RTT, stat.mean_rtt_ms))
    rows.sort(key=lambda r: (r[0], r[2], r[3]))
    return rows


def export_csv(series: Iterable[IntervalStat]) -> bytes:
    """Serialize interval stats; identical input yields identical bytes."""
    lines = [CSV_HEADER]
    for t0, t1, flow_id, metric, value in csv_rows(series):
        lines.append(f"{_fmt_time(t0)},{_fmt_time(t1)},{flow_id},{metric},{_fmt_value(value)}")
    return ("\n".join(lines) + "\n").encode("ascii")


def parse_csv(data: bytes) -> List[IntervalStat]:
    """Parse bytes produced by export_csv back into metric-only interval stats."""
    text = data.decode("ascii")
    lines = [line for line in text.split("\n") if line]
    if not lines or lines[0] != CSV_HEADER:
        raise IoFailure("unrecognized metrics header")
    merged: Dict[Tuple[float, float, str], Dict[str, Optional[float]]] = {}
    order: List[Tuple[float, float, str]] = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 5:
            raise IoFailure(f"malformed row: {line!r}")
        t0, t1, flow_id, metric, raw = parts
        key = (float(t0), float(t1), flow_id)
        if key not in merged:
            merged[key] = {}
            order.append(key)
        merged[key][metric] = float(raw) if raw else None
    out = []
    for key in order:
        t0, t1, flow_id = key
        fields = merged[key]
        out.append(IntervalStat(
            t_start_s=t0, t_end_s=t1, flow_id=flow_id,
            pdr=fields.get(METRIC_PDR),
            mean_rtt_ms=fields.get(METRIC_RTT),
        ))
    return out


# --- SVG charts ---------------------------------------------------------------

_CHART_W = 720
_CHART_H = 220
_MARGIN_L = 60
_MARGIN_R = 16
_MARGIN_T = 28
_MARGIN_B = 30
_SERIES_STYLE = [
    ('stroke="#c0392b" stroke-dasharray="6 4"', "#c0392b"),
    ('stroke="#1a5276"', "#1a5276"),
    ('stroke="#1e8449" stroke-dasharray="2 3"', "#1e8449"),
    ('stroke="#7d3c98"', "#7d3c98"),
]


def _points(series: Sequence[IntervalStat], metric: str) -> List[Tuple[float, Optional[float]]]:
    out = []
    for stat in series:
        value = stat.pdr if metric == METRIC_PDR else stat.mean_rtt_ms
        out.append(((stat.t_start_s + stat.t_end_s) / 2.0, value))
    return out


def _chart(metric: str, labeled: Dict[str, Sequence[IntervalStat]], y_offset: int) -> List[str]:
    pts_by_label = {label: _points(series, metric) for label, series in labeled.items()}
    xs = [x for pts in pts_by_label.values() for x, _ in pts]
    ys = [y for pts in pts_by_label.values() for _, y in pts if y is not None]
    if not xs:
        raise IoFailure("no interval stats to chart")
    if metric == METRIC_PDR:
        for y in ys:
            if not (0.0 <= y <= 1.0):
                raise IoFailure(f"delivery ratio {y} outside [0,1]")
        y_lo, y_hi = 0.0, 1.0
    else:
        y_lo = 0.0
        y_hi = max(ys) * 1.1 if ys else 1.0
    x_lo, x_hi = min(xs), max(xs)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    plot_w = _CHART_W - _MARGIN_L - _MARGIN_R
    plot_h = _CHART_H - _MARGIN_T - _MARGIN_B

    def sx(x: float) -> float:
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return y_offset + _MARGIN_T + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h

    title = "PDR (packet delivery ratio)" if metric == METRIC_PDR else "RTT (round trip time, ms)"
    parts = [
        f'<text x="{_MARGIN_L}" y="{y_offset + 16}" font-size="13" font-family="sans-serif">{title}</text>',
        f'<rect x="{_MARGIN_L}" y="{y_offset + _MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#888" stroke-width="1"/>',
        f'<text x="{_MARGIN_L - 6}" y="{y_offset + _MARGIN_T + 10}" font-size="10" '
        f'text-anchor="end" font-family="sans-serif">{y_hi:g}</text>',
        f'<text x="{_MARGIN_L - 6}" y="{y_offset + _MARGIN_T + plot_h}" font-size="10" '
        f'text-anchor="end" font-family="sans-serif">{y_lo:g}</text>',
        f'<text x="{_MARGIN_L}" y="{y_offset + _MARGIN_T + plot_h + 14}" font-size="10" '
        f'font-family="sans-serif">{x_lo:g}s</text>',
        f'<text x="{_MARGIN_L + plot_w}" y="{y_offset + _MARGIN_T + plot_h + 14}" font-size="10" '
        f'text-anchor="end" font-family="sans-serif">{x_hi:g}s</text>',
    ]
    for idx, (label, pts) in enumerate(sorted(pts_by_label.items())):
        style, color = _SERIES_STYLE[idx % len(_SERIES_STYLE)]
        # one polyline per contiguous run of defined values
        run: List[str] = []
        segments: List[List[str]] = []
        for x, y in pts:
            if y is None:
                if run:
                    segments.append(run)
                    run = []
            else:
                run.append(f"{sx(x):.2f},{sy(y):.2f}")
        if run:
            segments.append(run)
        for seg in segments:
            parts.append(
                f'<polyline fill="none" {style} stroke-width="1.5" points="{" ".join(seg)}"/>'
            )
        parts.append(
            f'<text x="{_MARGIN_L + plot_w - 6}" y="{y_offset + _MARGIN_T + 14 + 13 * idx}" '
            f'font-size="11" text-anchor="end" font-family="sans-serif" fill="{color}">{label}</text>'
        )
    return parts


def render_charts(series_by_metric: Dict[str, Dict[str, Sequence[IntervalStat]]]) -> str:
    """One line chart per metric, one line per labeled series, as one SVG text."""
    if not series_by_metric or not any(series_by_metric.values()):
        raise IoFailure("nothing to chart")
    body: List[str] = []
    offset = 0
    for metric in sorted(series_by_metric):
        labeled = series_by_metric[metric]
        if not labeled:
            raise IoFailure(f"metric {metric} has no series")
        body.extend(_chart(metric, labeled, offset))
        offset += _CHART_H
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_CHART_W}" height="{offset}" '
        f'viewBox="0 0 {_CHART_W} {offset}">\n' + "\n".join(body) + "\n</svg>\n"
    )


def emit_svg(series_by_metric: Dict[str, Dict[str, Sequence[IntervalStat]]], destination) -> None:
    """Render charts and write them to a path; nothing is written on error."""
    text = render_charts(series_by_metric)
    try:
        with open(destination, "w", encoding="ascii") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
