import json

from click.testing import CliRunner

from busnav.cli import main

from conftest import scenario_path


def test_plan_prints_three_segments(gridtown_path):
    result = CliRunner().invoke(main, [
        "plan", "--network", gridtown_path,
        "--origin", "40.75288,-73.99059", "--dest", "40.75099,-73.98620",
        "--time", "2"])
    assert result.exit_code == 0
    assert "bus line L1 direction 0" in result.output
    assert result.output.count("walk") == 2


def test_plan_json_output(gridtown_path):
    result = CliRunner().invoke(main, [
        "plan", "--network", gridtown_path,
        "--origin", "40.75288,-73.99059", "--dest", "40.75099,-73.98620",
        "--time", "00:00:02", "--json"])
    assert result.exit_code == 0
    payload = json.loads(result.output)
    assert [s["kind"] for s in payload["segments"]] == ["walk", "bus", "walk"]
    assert payload["segments"][1]["board_stop"] == "s_a"


def test_plan_at_destination(gridtown_path):
    result = CliRunner().invoke(main, [
        "plan", "--network", gridtown_path,
        "--origin", "40.75288,-73.99000", "--dest", "40.75288,-73.99000"])
    assert result.exit_code == 0
    assert "already at destination" in result.output


def test_plan_no_route_exit_code(gridtown_path):
    result = CliRunner().invoke(main, [
        "plan", "--network", gridtown_path,
        "--origin", "40.75288,-73.99000", "--dest", "40.85,-73.99"])
    assert result.exit_code == 2


def test_plan_bad_network_exit_code(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("bus_ssid: X\nstops: []\nlines: []\nvehicle_runs: []\nwat: 1\n")
    result = CliRunner().invoke(main, [
        "plan", "--network", str(bad),
        "--origin", "40,-73", "--dest", "40.1,-73"])
    assert result.exit_code == 3
    assert "unknown top-level" in result.output


def test_simulate_writes_trace_and_replay_matches(gridtown_path, tmp_path):
    trace = str(tmp_path / "run.jsonl")
    events = str(tmp_path / "events.jsonl")
    runner = CliRunner()
    sim = runner.invoke(main, [
        "simulate", "--network", gridtown_path,
        "--scenario", scenario_path("happy_path"),
        "--seed", "1", "--trace-out", trace, "--events-out", events])
    assert sim.exit_code == 0
    assert "boarded bus-101" in sim.output

    rep = runner.invoke(main, [
        "replay", "--network", gridtown_path, "--trace", trace])
    assert rep.exit_code == 0
    assert "ride events detected: 2" in rep.output
    assert "false positives: 0" in rep.output
    assert "false negatives: 0" in rep.output


def test_replay_trace_with_no_bus_readings(gridtown_path, tmp_path):
    trace = str(tmp_path / "empty.jsonl")
    with open(trace, "w") as fh:
        fh.write('{"t":0,"kind":"scan","payload":{"readings":[]}}\n')
        fh.write('{"t":5,"kind":"scan","payload":{"readings":[]}}\n')
    result = CliRunner().invoke(main, [
        "replay", "--network", gridtown_path, "--trace", trace])
    assert result.exit_code == 0
    assert "ride events detected: 0" in result.output


def test_replay_rejects_out_of_order_trace(gridtown_path, tmp_path):
    trace = str(tmp_path / "bad.jsonl")
    with open(trace, "w") as fh:
        fh.write('{"t":10,"kind":"scan","payload":{"readings":[]}}\n')
        fh.write('{"t":5,"kind":"scan","payload":{"readings":[]}}\n')
    result = CliRunner().invoke(main, [
        "replay", "--network", gridtown_path, "--trace", trace])
    assert result.exit_code == 3
    assert "line 2" in result.output


def test_simulate_bad_scenario_exit_code(gridtown_path, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("nonsense: true\n")
    result = CliRunner().invoke(main, [
        "simulate", "--network", gridtown_path, "--scenario", str(bad)])
    assert result.exit_code == 3
