"""Command-line front end: run scenarios, export metrics, compare runs.

``hivenet run`` simulates one scenario under one policy and writes three
files into the output directory: ``metrics.csv`` (per-interval series),
``events.log`` (the exported event records) and ``summary.txt`` (per-phase
aggregates, handovers, drop counters). All outputs are byte-deterministic
for a given (scenario, seed). ``hivenet compare`` diffs two output
directories phase by phase.

Exit codes: 0 success, 1 configuration/input problem, 2 runtime failure.
The HIVENET_LOG environment variable (quiet|info|trace) sets stderr
verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import engine, telemetry
from .control import MODE_BASELINE, MODE_SDN
from .errors import HivenetError, SchemaMismatch, ScenarioError, SemanticError
from .scenario import (
    ScenarioConfig,
    builtin_document,
    builtin_names,
    parse_scenario,
)
from .traffic import NS_PER_S

log = logging.getLogger("hivenet")

POLICY_FLAGS = {"baseline": MODE_BASELINE, "sdn": MODE_SDN}


def _setup_logging() -> None:
    level = {"quiet": logging.ERROR, "info": logging.INFO, "trace": logging.DEBUG}.get(
        os.environ.get("HIVENET_LOG", "info"), logging.INFO
    )
    logging.basicConfig(stream=sys.stderr, level=level, format="%(message)s")


# ---------------------------------------------------------------------------
# one run end to end
# ---------------------------------------------------------------------------

@dataclass
class RunSummary:
    scenario: str
    policy: str
    seed: int
    duration_s: float
    phase_bounds_s: List[float]
    # (flow_id, phase index 1-based) -> aggregates
    flow_phase: Dict[Tuple[str, int], Dict[str, float]]
    handovers: List[Dict[str, object]]
    drops: Dict[str, int]

    def handover_count(self) -> int:
        return len(self.handovers)


@dataclass
class RunOutputs:
    config: ScenarioConfig
    result: engine.RunResult
    series: Dict[str, List[telemetry.IntervalStat]]
    rtt_series: Dict[str, List[telemetry.IntervalStat]]
    summary: RunSummary
    csv_bytes: bytes
    summary_text: str


def _phase_indices(bounds: Sequence[float]) -> List[Tuple[int, float, float]]:
    return [(i + 1, bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]


def _mean(values: Sequence[float]) -> Optional[float]:
    values = [v for v in values if v is not None]
    return sum(values) / len(values) if values else None


def simulate(config: ScenarioConfig, policy_flag: str, seed: int,
             record_packets: bool = False) -> RunOutputs:
    """Run a scenario under the given policy and aggregate its telemetry."""
    config.policy = replace(config.policy, mode=POLICY_FLAGS[policy_flag])
    result = engine.run(config, seed, record_packets=record_packets)
    metrics = result.metrics
    interval_s = config.engine.report_interval_s
    duration_s = config.duration_s

    series: Dict[str, List[telemetry.IntervalStat]] = {}
    rtt: Dict[str, List[telemetry.IntervalStat]] = {}
    topo_names = {v.id: v.name for v in config.all_vehicles()}
    for spec in config.all_flows():
        fs = metrics.flows[spec.flow_id]
        if spec.subscribers:
            for subscriber in spec.subscribers:
                label = f"{spec.flow_id}@{topo_names.get(subscriber, subscriber)}"
                series[label] = telemetry.pdr_series(
                    metrics.delivery_records(spec.flow_id, subscriber),
                    interval_s, duration_s, label,
                )
        else:
            series[spec.flow_id] = telemetry.pdr_series(
                metrics.delivery_records(spec.flow_id), interval_s, duration_s, spec.flow_id
            )
        if spec.traffic_class == "probe":
            rtt[spec.flow_id] = telemetry.rtt_series(
                metrics.probe_samples(spec.flow_id), interval_s, duration_s, spec.flow_id
            )

    bounds = config.phase_bounds_s()
    flow_phase: Dict[Tuple[str, int], Dict[str, float]] = {}
    for label, stats in series.items():
        flow_id = label.split("@", 1)[0]
        fs = metrics.flows[flow_id]
        probe_samples = (
            metrics.probe_samples(flow_id) if fs.spec.traffic_class == "probe" else None
        )
        for phase, lo, hi in _phase_indices(bounds):
            inside = [s for s in stats if s.t_start_s >= lo and s.t_end_s <= hi]
            entry: Dict[str, float] = {
                "sent": sum(s.sent or 0 for s in inside),
                "delivered": sum(s.delivered or 0 for s in inside),
            }
            pdr_mean = _mean([s.pdr for s in inside])
            if pdr_mean is not None:
                entry["pdr_mean"] = pdr_mean
            if probe_samples is not None:
                in_phase = [r for t, r in probe_samples if lo <= t < hi and r is not None]
                entry["rtt_samples"] = len(in_phase)
                if in_phase:
                    entry["rtt_mean_ms"] = sum(in_phase) / len(in_phase)
            flow_phase[(label, phase)] = entry

    handovers = [
        {
            "vehicle": topo_names.get(rec.vehicle, str(rec.vehicle)),
            "from": config.access_points[0].name if False else _ap_name(config, rec.from_ap),
            "to": _ap_name(config, rec.to_ap),
            "command_s": rec.command_ns / NS_PER_S,
            "detach_s": rec.detach_ns / NS_PER_S if rec.detach_ns >= 0 else None,
            "complete_s": rec.complete_ns / NS_PER_S if rec.complete_ns >= 0 else None,
        }
        for rec in metrics.handovers
    ]
    summary = RunSummary(
        scenario=config.name,
        policy=config.policy.mode,
        seed=seed,
        duration_s=duration_s,
        phase_bounds_s=bounds,
        flow_phase=flow_phase,
        handovers=handovers,
        drops={k: v for k, v in sorted(metrics.drops_by_reason.items())},
    )
    all_stats = [s for stats in series.values() for s in stats]
    all_stats += [s for stats in rtt.values() for s in stats]
    return RunOutputs(
        config=config,
        result=result,
        series=series,
        rtt_series=rtt,
        summary=summary,
        csv_bytes=telemetry.export_csv(all_stats),
        summary_text=render_summary(summary),
    )


def _ap_name(config: ScenarioConfig, ap_id: int) -> str:
    for ap in config.access_points:
        if ap.id == ap_id:
            return ap.name
    return str(ap_id)


def render_summary(summary: RunSummary) -> str:
    lines = [
        f"scenario {summary.scenario}",
        f"policy {summary.policy}",
        f"seed {summary.seed}",
        f"duration_s {summary.duration_s:g}",
        "phase_bounds_s " + " ".join(f"{b:g}" for b in summary.phase_bounds_s),
        f"handover_count {summary.handover_count()}",
    ]
    for (flow_id, phase), entry in sorted(summary.flow_phase.items()):
        parts = [f"flow {flow_id} phase {phase}",
                 f"sent={int(entry['sent'])}", f"delivered={int(entry['delivered'])}"]
        parts.append(
            f"pdr_mean={entry['pdr_mean']:.6f}" if "pdr_mean" in entry else "pdr_mean=-"
        )
        if "rtt_samples" in entry:
            parts.append(
                f"rtt_mean_ms={entry['rtt_mean_ms']:.6f}" if "rtt_mean_ms" in entry
                else "rtt_mean_ms=-"
            )
            parts.append(f"rtt_samples={int(entry['rtt_samples'])}")
        lines.append(" ".join(parts))
    for rec in summary.handovers:
        detach = f"{rec['detach_s']:.6f}" if rec["detach_s"] is not None else "-"
        complete = f"{rec['complete_s']:.6f}" if rec["complete_s"] is not None else "-"
        lines.append(
            f"handover {rec['vehicle']} from={rec['from']} to={rec['to']} "
            f"command_s={rec['command_s']:.6f} detach_s={detach} complete_s={complete}"
        )
    drops = " ".join(f"{k}={v}" for k, v in summary.drops.items()) or "none"
    lines.append(f"drops {drops}")
    return "\n".join(lines) + "\n"


def parse_summary(text: str) -> RunSummary:
    scenario = policy = ""
    seed = 0
    duration = 0.0
    bounds: List[float] = []
    flow_phase: Dict[Tuple[str, int], Dict[str, float]] = {}
    handovers: List[Dict[str, object]] = []
    drops: Dict[str, int] = {}
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "scenario":
            scenario = parts[1]
        elif parts[0] == "policy":
            policy = parts[1]
        elif parts[0] == "seed":
            seed = int(parts[1])
        elif parts[0] == "duration_s":
            duration = float(parts[1])
        elif parts[0] == "phase_bounds_s":
            bounds = [float(v) for v in parts[1:]]
        elif parts[0] == "flow":
            flow_id, phase = parts[1], int(parts[3])
            entry: Dict[str, float] = {}
            for token in parts[4:]:
                key, value = token.split("=", 1)
                if value != "-":
                    entry[key] = float(value)
            flow_phase[(flow_id, phase)] = entry
        elif parts[0] == "handover":
            rec: Dict[str, object] = {"vehicle": parts[1]}
            for token in parts[2:]:
                key, value = token.split("=", 1)
                if key in ("from", "to"):
                    rec[key] = value
                else:
                    rec[key] = None if value == "-" else float(value)
            handovers.append(rec)
        elif parts[0] == "drops" and parts[1] != "none":
            for token in parts[1:]:
                key, value = token.split("=", 1)
                drops[key] = int(value)
    return RunSummary(scenario, policy, seed, duration, bounds, flow_phase, handovers, drops)


# ---------------------------------------------------------------------------
# file output
# ---------------------------------------------------------------------------

def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def write_outputs(outputs: RunOutputs, out_dir: Path, svg: bool = False) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_atomic(out_dir / "metrics.csv", outputs.csv_bytes)
    _write_atomic(out_dir / "events.log", outputs.result.event_log_text().encode("ascii"))
    _write_atomic(out_dir / "summary.txt", outputs.summary_text.encode("ascii"))
    if svg:
        charts: Dict[str, Dict[str, Sequence[telemetry.IntervalStat]]] = {}
        pdr_labels = {
            label: stats for label, stats in outputs.series.items()
            if not label.startswith("bg-") and not label.startswith("inj-")
        }
        if pdr_labels:
            charts[telemetry.METRIC_PDR] = pdr_labels
        if outputs.rtt_series:
            charts[telemetry.METRIC_RTT] = dict(outputs.rtt_series)
        text = telemetry.render_charts(charts)
        _write_atomic(out_dir / "chart.svg", text.encode("ascii"))


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------

def _phase_means(stats: List[telemetry.IntervalStat], bounds: Sequence[float]
                 ) -> Dict[Tuple[str, int, str], Optional[float]]:
    """(flow, phase, metric) -> mean over intervals fully inside the phase."""
    out: Dict[Tuple[str, int, str], Optional[float]] = {}
    by_flow: Dict[str, List[telemetry.IntervalStat]] = {}
    for stat in stats:
        by_flow.setdefault(stat.flow_id, []).append(stat)
    for flow_id, flow_stats in by_flow.items():
        for phase, lo, hi in _phase_indices(bounds):
            inside = [s for s in flow_stats if s.t_start_s >= lo and s.t_end_s <= hi]
            pdr_values = [s.pdr for s in inside if s.pdr is not None]
            rtt_values = [s.mean_rtt_ms for s in inside if s.mean_rtt_ms is not None]
            if any(s.pdr is not None for s in inside) or pdr_values:
                out[(flow_id, phase, telemetry.METRIC_PDR)] = _mean(pdr_values)
            if rtt_values:
                out[(flow_id, phase, telemetry.METRIC_RTT)] = _mean(rtt_values)
    return out


def compare_runs(dir_a: Path, dir_b: Path) -> str:
    """Per-phase deltas (B minus A) of mean RTT and mean PDR between two runs."""
    stats_a = telemetry.parse_csv((dir_a / "metrics.csv").read_bytes())
    stats_b = telemetry.parse_csv((dir_b / "metrics.csv").read_bytes())
    summary_a = parse_summary((dir_a / "summary.txt").read_text())
    summary_b = parse_summary((dir_b / "summary.txt").read_text())
    if summary_a.phase_bounds_s != summary_b.phase_bounds_s:
        raise SchemaMismatch(
            f"phase structure differs: {summary_a.phase_bounds_s} vs {summary_b.phase_bounds_s}"
        )
    flows_a = {s.flow_id for s in stats_a}
    flows_b = {s.flow_id for s in stats_b}
    if flows_a != flows_b:
        raise SchemaMismatch(f"flow sets differ: {sorted(flows_a ^ flows_b)}")
    bounds = summary_a.phase_bounds_s
    means_a = _phase_means(stats_a, bounds)
    means_b = _phase_means(stats_b, bounds)

    lines = []
    for phase, _, _ in _phase_indices(bounds):
        pdr_deltas = []
        rtt_deltas = []
        for key, value_a in means_a.items():
            flow_id, key_phase, metric = key
            if key_phase != phase:
                continue
            value_b = means_b.get(key)
            if value_a is None or value_b is None:
                continue
            if metric == telemetry.METRIC_PDR:
                pdr_deltas.append(value_b - value_a)
            else:
                rtt_deltas.append(value_b - value_a)
        rtt_delta = _mean(rtt_deltas)
        pdr_delta = _mean(pdr_deltas)
        rtt_part = f"rtt_delta_ms={rtt_delta:.6f}" if rtt_delta is not None else "rtt_delta_ms=-"
        pdr_part = f"pdr_delta={pdr_delta:.6f}" if pdr_delta is not None else "pdr_delta=-"
        lines.append(f"phase{phase} {rtt_part} {pdr_part}")
    for key in sorted(means_a):
        flow_id, phase, metric = key
        value_a, value_b = means_a[key], means_b.get(key)
        if value_a is None or value_b is None:
            continue
        lines.append(f"flow {flow_id} phase{phase} {metric}_delta={value_b - value_a:.6f}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# argument parsing and entry point
# ---------------------------------------------------------------------------

def _load_scenario(ref: str) -> ScenarioConfig:
    if ref in builtin_names():
        return parse_scenario(builtin_document(ref))
    path = Path(ref)
    if not path.exists():
        raise SemanticError(
            f"unknown scenario {ref!r} (builtins: {', '.join(builtin_names())})"
        )
    return parse_scenario(path.read_text())


def run_command(args: argparse.Namespace) -> int:
    try:
        config = _load_scenario(args.scenario)
    except ScenarioError as exc:
        log.error("scenario error: %s", exc)
        return 1
    except (SemanticError, HivenetError) as exc:
        log.error("scenario error: %s", exc)
        return 1
    seed = args.seed if args.seed is not None else config.seed
    try:
        outputs = simulate(config, args.policy, seed, record_packets=args.log_packets)
        write_outputs(outputs, Path(args.out), svg=args.svg)
    except HivenetError as exc:
        log.error("run failed: %s", exc)
        return 2
    log.info(
        "%s policy=%s seed=%d: %d handovers, wrote %s",
        config.name, args.policy, seed, outputs.summary.handover_count(), args.out,
    )
    return 0


def compare_command(args: argparse.Namespace) -> int:
    try:
        report = compare_runs(Path(args.dir_a), Path(args.dir_b))
    except FileNotFoundError as exc:
        log.error("missing input: %s", exc)
        return 1
    except (SchemaMismatch, HivenetError) as exc:
        log.error("comparison failed: %s", exc)
        return 1
    sys.stdout.write(report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hivenet",
        description="Packet-level hybrid vehicular network simulator with an SDN control plane",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate one scenario")
    run_p.add_argument("--scenario", required=True,
                       help="builtin name or path to a scenario JSON file")
    run_p.add_argument("--policy", choices=sorted(POLICY_FLAGS), default="sdn")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the scenario's seed")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--svg", action="store_true", help="also write chart.svg")
    run_p.add_argument("--log-packets", action="store_true",
                       help="include per-packet records in events.log")
    run_p.set_defaults(func=run_command)

    cmp_p = sub.add_parser("compare", help="diff two run output directories")
    cmp_p.add_argument("dir_a")
    cmp_p.add_argument("dir_b")
    cmp_p.set_defaults(func=compare_command)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
