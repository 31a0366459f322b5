"""Shared fixtures: cached scenario runs and small-topology builders.

The two-phase overload scenario takes seconds to simulate, so each (policy,
scenario) combination runs once per session through the CLI entry point and
every test reads the written artifacts.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import pytest

from hivenet import cli
from hivenet.scenario import _rsu_overload_doc


def two_rsu_doc(**overrides) -> dict:
    """A minimal two-RSU line topology: v1 @ rsua -- sw -- rsub @ v2."""
    doc = {
        "name": "two-rsu",
        "area_m": [2000.0, 2000.0],
        "duration_s": 10.0,
        "seed": 1,
        "access_points": [
            {"id": 1, "name": "rsua", "kind": "rsu", "position": [400.0, 1000.0],
             "wireless_capacity_bps": 30_000_000, "buffer_packets": 300},
            {"id": 2, "name": "rsub", "kind": "rsu", "position": [1600.0, 1000.0],
             "wireless_capacity_bps": 30_000_000, "buffer_packets": 300},
        ],
        "switches": [{"id": 3, "name": "sw", "position": [1000.0, 1000.0]}],
        "backhaul_links": [
            {"a": "rsua", "b": "sw", "rate_bps": 1_000_000_000,
             "propagation_delay_s": 0.002, "buffer_packets": 300},
            {"a": "sw", "b": "rsub", "rate_bps": 1_000_000_000,
             "propagation_delay_s": 0.002, "buffer_packets": 300},
        ],
        "vehicles": [
            {"id": 10, "name": "v1", "interfaces": ["dsrc"],
             "waypoints": [[0.0, [350.0, 1000.0]]], "hold_after_last": True},
            {"id": 11, "name": "v2", "interfaces": ["dsrc"],
             "waypoints": [[0.0, [1650.0, 1000.0]]], "hold_after_last": True},
        ],
        "flows": [
            {"flow_id": "f1", "src": "v1", "dst": "v2", "traffic_class": "data",
             "rate_bps": 1_000_000, "packet_size_bytes": 500,
             "start_s": 0.0, "duration_s": 10.0},
        ],
    }
    doc.update(overrides)
    return doc


def run_cli(tmp_dir: Path, scenario: str, policy: str, seed: int, *extra) -> Path:
    out = tmp_dir
    code = cli.main([
        "run", "--scenario", scenario, "--policy", policy,
        "--seed", str(seed), "--out", str(out), *extra,
    ])
    assert code == 0, f"run failed for {scenario} {policy}"
    return out


@pytest.fixture(scope="session")
def baseline_run(tmp_path_factory):
    """rsu-overload under the signal-strength policy; returns (dir, wall seconds)."""
    out = tmp_path_factory.mktemp("rsu-baseline")
    t0 = time.perf_counter()
    run_cli(out, "rsu-overload", "baseline", 42)
    return out, time.perf_counter() - t0


@pytest.fixture(scope="session")
def sdn_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("rsu-sdn")
    run_cli(out, "rsu-overload", "sdn", 42)
    return out


@pytest.fixture(scope="session")
def dup_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("dup-sdn")
    run_cli(out, "collision-duplication", "sdn", 7)
    return out


@pytest.fixture(scope="session")
def dup_baseline_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("dup-baseline")
    run_cli(out, "collision-duplication", "baseline", 7)
    return out


@pytest.fixture(scope="session")
def m1_overload_sim():
    """rsu-overload trimmed to 80 s plus a safety flow through the hot RSU;
    run in process so per-packet latencies are available."""
    from hivenet.scenario import parse_scenario

    doc = _rsu_overload_doc()
    doc["duration_s"] = 80.0
    for flow in doc["flows"]:
        flow["duration_s"] = round(min(flow["duration_s"], 80.0 - flow["start_s"]), 6)
    for flow in doc["phases"][0]["flows"]:
        flow["duration_s"] = round(min(flow["duration_s"], 80.0 - flow["start_s"]), 6)
    doc["flows"].append({
        "flow_id": "cca", "src": "car1", "dst": "car2", "traffic_class": "a1",
        "packet_size_bytes": 300, "start_s": 0.0123, "duration_s": 79.9877,
        "model": "M1",
    })
    config = parse_scenario(json.dumps(doc))
    return cli.simulate(config, "baseline", 42)
