#!/usr/bin/env python3
"""Regenerate the frozen golden logs for the scenario regression tests.

Run from the repository root after an intentional behavior change, then
review the diffs by hand before committing:

    python3 scripts/make_goldens.py
"""
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from busnav.network import load_network
from busnav.scenario import load_scenario, run_scenario
from busnav.simworld import SimConfig
from busnav.trace import write_trace

GOLDEN_SEED = 1
SCENARIOS = ("happy_path", "wrong_bus", "missed_stop", "off_path_walk",
             "refuse_then_delay")


def main() -> None:
    root = pathlib.Path(__file__).resolve().parents[1]
    net = load_network(str(root / "tests/fixtures/gridtown.yaml"))
    out_dir = root / "tests/golden"
    out_dir.mkdir(exist_ok=True)
    for name in SCENARIOS:
        scenario = load_scenario(str(root / f"tests/fixtures/scenarios/{name}.yaml"))
        result = run_scenario(net, SimConfig(seed=GOLDEN_SEED), scenario)
        path = out_dir / f"{name}.events.jsonl"
        write_trace(str(path), result.by_kind("ride_event", "message"))
        print(f"{path.name}: {sum(1 for _ in open(path))} records")


if __name__ == "__main__":
    main()
