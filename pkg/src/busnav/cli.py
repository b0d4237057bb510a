"""Command line entry points.

Thin wrappers: `plan`, `simulate`, and `replay` call straight into the
library; `serve` starts the HTTP session service.

Exit codes: 0 success, 2 no route, 3 bad input (file, validation, trace).
"""
from __future__ import annotations

import sys

import click

from .geo import GeoPoint
from .network import NetworkError, load_network
from .planner import BusRideSegment, TripPlan, WalkSegment, plan_payload, plan_trip
from .replay import replay_trace
from .scenario import ScenarioError, load_scenario, run_scenario
from .simworld import SimConfig
from .trace import TraceError, canonical_json, read_trace, record_to_line, write_trace

EXIT_NO_ROUTE = 2
EXIT_BAD_INPUT = 3


def _parse_point(raw: str) -> GeoPoint:
    try:
        lat, lon = (float(x) for x in raw.split(","))
        return GeoPoint(lat, lon)
    except ValueError as e:
        raise click.UsageError(f"expected 'lat,lon', got {raw!r}: {e}")


def _parse_time(raw: str) -> float:
    if ":" in raw:
        parts = [int(p) for p in raw.split(":")]
        while len(parts) < 3:
            parts.append(0)
        h, m, s = parts[:3]
        return float(h * 3600 + m * 60 + s)
    return float(raw)


def _load_net(path: str):
    try:
        return load_network(path)
    except (NetworkError, OSError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_BAD_INPUT)


def _describe_plan(plan: TripPlan) -> str:
    if not plan.segments:
        return "already at destination"
    lines = []
    for i, seg in enumerate(plan.segments, 1):
        if isinstance(seg, WalkSegment):
            lines.append(f"{i}. walk {seg.length_m():.0f} m "
                         f"(~{seg.est_duration_s:.0f} s)")
        else:
            lines.append(
                f"{i}. bus line {seg.line_id} direction {seg.direction}: "
                f"board {seg.board_stop} at {_hms(seg.scheduled_board)}, "
                f"alight {seg.alight_stop} at {_hms(seg.scheduled_alight)} "
                f"({seg.intermediate_stops} stops in between)")
    lines.append(f"arrival: {_hms(plan.arrival_time())}")
    return "\n".join(lines)


def _hms(t: float) -> str:
    s = int(round(t))
    return f"{s // 3600:02d}:{(s % 3600) // 60:02d}:{s % 60:02d}"


@click.group()
def main() -> None:
    """Bus navigation engine: planning, simulation, replay, and a session service."""


@main.command("plan")
@click.option("--network", "network_path", required=True, type=click.Path(exists=True))
@click.option("--origin", required=True, help="lat,lon")
@click.option("--destination", "--dest", required=True, help="lat,lon")
@click.option("--time", "depart", default="0", help="departure time (HH:MM:SS or seconds)")
@click.option("--json", "as_json", is_flag=True, help="machine-readable output")
def cli_plan(network_path: str, origin: str, destination: str, depart: str,
             as_json: bool) -> None:
    """Plan a trip between two points."""
    net = _load_net(network_path)
    plan = plan_trip(net, _parse_point(origin), _parse_point(destination),
                     _parse_time(depart))
    if plan is None:
        click.echo("no route found", err=True)
        sys.exit(EXIT_NO_ROUTE)
    if as_json:
        click.echo(canonical_json(plan_payload(plan)))
    else:
        click.echo(_describe_plan(plan))


@main.command("simulate")
@click.option("--network", "network_path", required=True, type=click.Path(exists=True))
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
@click.option("--seed", default=1, type=int, show_default=True)
@click.option("--trace-out", type=click.Path(), help="write the full trace here")
@click.option("--events-out", type=click.Path(),
              help="write only ride events and messages here")
def cli_simulate(network_path: str, scenario_path: str, seed: int,
                 trace_out: str, events_out: str) -> None:
    """Run a scripted scenario and log what happened."""
    net = _load_net(network_path)
    try:
        scenario = load_scenario(scenario_path)
    except (ScenarioError, OSError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_BAD_INPUT)
    result = run_scenario(net, SimConfig(seed=seed), scenario)
    if trace_out:
        write_trace(trace_out, result.records)
    if events_out:
        write_trace(events_out, result.by_kind("ride_event", "message"))
    events = result.by_kind("ride_event")
    messages = result.by_kind("message")
    click.echo(f"scenario {scenario.name}: {len(result.records)} records, "
               f"{len(events)} ride events, {len(messages)} messages")
    for rec in events:
        click.echo(f"  t={rec.t:.0f} {rec.payload['event']} {rec.payload['vehicle']}")


@main.command("replay")
@click.option("--network", "network_path", required=True, type=click.Path(exists=True))
@click.option("--trace", "trace_path", required=True, type=click.Path(exists=True))
@click.option("--events-out", type=click.Path(),
              help="write the re-detected ride events here")
def cli_replay(network_path: str, trace_path: str, events_out: str) -> None:
    """Re-run ride detection over a recorded trace."""
    net = _load_net(network_path)
    try:
        records = read_trace(trace_path)
    except (TraceError, OSError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_BAD_INPUT)
    report = replay_trace(records, net)
    for line in report.summary_lines():
        click.echo(line)
    if events_out:
        from .trace import TraceRecord, ride_event_payload

        write_trace(events_out, [TraceRecord(ev.timestamp, "ride_event",
                                             ride_event_payload(ev))
                                 for ev in report.events])


@main.command("serve")
@click.option("--network", "network_path", required=True, type=click.Path(exists=True))
@click.option("--bind", default="127.0.0.1:8000", show_default=True)
@click.option("--speed", default=5.0, show_default=True,
              help="simulated seconds per wall second for interactive sessions")
@click.option("--seed", default=1, type=int, show_default=True)
@click.option("--trace-out", type=click.Path(), default=None,
              help="directory for per-session trace dumps on shutdown")
@click.option("--ui", "ui_dir", type=click.Path(exists=True), default=None,
              help="serve this directory (the web client) at /ui")
def cli_serve(network_path: str, bind: str, speed: float, seed: int,
              trace_out: str, ui_dir: str) -> None:
    """Serve the session API for interactive clients."""
    import uvicorn

    from .service.app import create_app

    net = _load_net(network_path)
    host, _, port = bind.partition(":")
    app = create_app(net, default_speed=speed, default_seed=seed,
                     trace_dir=trace_out, ui_dir=ui_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))


if __name__ == "__main__":
    main()
