"""Scenario scripts and the engine runner that wires world -> detector -> tracker.

A scenario is a timed passenger command list plus a journey (start,
destination, when to plan) in the same YAML style as the network file.
``run_scenario`` replays it tick by tick, feeding synthesized observations
through ride detection and trip tracking, and records everything in the
shared trace format. The same ``EngineRunner`` drives interactive service
sessions, so scripted and interactive behavior cannot drift apart.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Optional, Union

import yaml

from . import tracker as trk
from .detection import EventKind, RideDetectorState, detect_step
from .geo import GeoPoint
from .network import TransitNetwork
from .planner import PlannerConfig, TripPlan, plan_trip
from .simworld import CommandRejected, Observation, PassengerCommand, SimConfig, SimWorld
from .trace import TraceRecord, gps_payload, ride_event_payload, scan_payload

_SCENARIO_KEYS = {"name", "start", "destination", "plan_at", "duration",
                  "start_clock", "commands", "responses"}


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class TimedCommand:
    t: float
    command: PassengerCommand


@dataclass(frozen=True)
class TimedResponse:
    t: float
    choice: trk.ReplanChoice
    delay_s: float = 60.0


@dataclass(frozen=True)
class Scenario:
    name: str
    start: GeoPoint
    destination: GeoPoint
    plan_at: float
    duration: float
    start_clock: float = 0.0
    commands: tuple[TimedCommand, ...] = ()
    responses: tuple[TimedResponse, ...] = ()


def scenario_from_doc(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    unknown = set(doc) - _SCENARIO_KEYS
    if unknown:
        raise ScenarioError(f"unknown scenario fields: {sorted(unknown)}")
    for key in ("start", "destination", "plan_at", "duration"):
        if key not in doc:
            raise ScenarioError(f"scenario missing field {key!r}")

    def point(raw, what):
        try:
            return GeoPoint(float(raw["lat"]), float(raw["lon"]))
        except (KeyError, TypeError, ValueError) as e:
            raise ScenarioError(f"bad {what}: {e}") from e

    commands = []
    for raw in doc.get("commands") or []:
        kind = str(raw.get("kind", ""))
        target = point(raw, "command target") if kind == "walk_toward" else None
        try:
            cmd = PassengerCommand(kind, target=target, vehicle=raw.get("vehicle"))
        except ValueError as e:
            raise ScenarioError(str(e)) from e
        commands.append(TimedCommand(float(raw["t"]), cmd))
    responses = []
    for raw in doc.get("responses") or []:
        try:
            choice = trk.ReplanChoice(str(raw["choice"]))
        except ValueError as e:
            raise ScenarioError(f"bad replan choice {raw.get('choice')!r}") from e
        responses.append(TimedResponse(float(raw["t"]), choice,
                                       float(raw.get("delay_s", 60.0))))
    return Scenario(
        name=str(doc.get("name", "scenario")),
        start=point(doc["start"], "start"),
        destination=point(doc["destination"], "destination"),
        plan_at=float(doc["plan_at"]),
        duration=float(doc["duration"]),
        start_clock=float(doc.get("start_clock", 0.0)),
        commands=tuple(sorted(commands, key=lambda c: c.t)),
        responses=tuple(sorted(responses, key=lambda r: r.t)),
    )


def load_scenario(source: Union[str, IO[str]]) -> Scenario:
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            raw = fh.read()
    else:
        raw = source.read()
    try:
        doc = yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ScenarioError(f"cannot parse scenario: {e}") from e
    return scenario_from_doc(doc)


class EngineRunner:
    """One passenger session: a world plus the detection and tracking engine.

    All mutation goes through plan/start_tracking/queue_command/respond/tick;
    every input and output is appended to ``records`` in occurrence order.
    """

    def __init__(self, net: TransitNetwork, sim_config: SimConfig,
                 start: GeoPoint, start_clock: float = 0.0,
                 tracker_config: trk.TrackerConfig = trk.DEFAULT_TRACKER_CONFIG,
                 planner_config: PlannerConfig = PlannerConfig()):
        self.net = net
        self.sim_config = sim_config
        self.tracker_config = tracker_config
        self.planner_config = planner_config
        self.world = SimWorld(net, sim_config, start, start_clock)
        self.detector = RideDetectorState.initial()
        self.tracker: Optional[trk.TrackerState] = None
        self.records: list[TraceRecord] = []
        self._queued: list[PassengerCommand] = []
        self._last_fed_next_stop: Optional[str] = None

    # --- inputs ---------------------------------------------------------------

    def plan(self, destination: GeoPoint, origin: Optional[GeoPoint] = None,
             depart_after: Optional[float] = None) -> Optional[TripPlan]:
        o = origin if origin is not None else self.world.passenger.position
        t = depart_after if depart_after is not None else self.world.clock
        return plan_trip(self.net, o, destination, t, self.planner_config)

    def start_tracking(self, plan: TripPlan) -> None:
        self.tracker = trk.start_tracking(plan, self.world.clock)
        self._last_fed_next_stop = None
        for msg in trk.current_guidance(self.tracker, self.net):
            self._record_message(self.world.clock, msg)

    def queue_command(self, cmd: PassengerCommand) -> None:
        self._queued.append(cmd)

    def respond(self, choice: trk.ReplanChoice, delay_s: float = 60.0) -> None:
        if self.tracker is None:
            raise ValueError("tracking not started")
        self.tracker, msgs = trk.respond_to_replan(
            self.tracker, choice, self.net, self.world.clock, delay_s,
            self.planner_config)
        for m in msgs:
            self._record_message(self.world.clock, m)
        if choice is trk.ReplanChoice.CONFIRM:
            self._last_fed_next_stop = None

    # --- the tick -------------------------------------------------------------

    def tick(self) -> None:
        """Advance one tick; commands queued since the last tick apply first."""
        queued, self._queued = self._queued, []
        valid: list[PassengerCommand] = []
        for cmd in queued:
            try:
                self.world.validate(cmd)
                valid.append(cmd)
            except CommandRejected as e:
                self.records.append(TraceRecord(
                    self.world.clock, "ground_truth",
                    {"event": "command_rejected", "kind": cmd.kind,
                     "reason": e.reason}))
        self._process(self.world.step(valid))

    def _process(self, observations: list[Observation]) -> None:
        for obs in observations:
            if obs.kind == "scan":
                self.records.append(TraceRecord(obs.t, "scan", scan_payload(obs.scan)))
                self.detector, events = detect_step(self.detector, obs.scan, self.net)
                for ev in events:
                    self.records.append(TraceRecord(obs.t, "ride_event",
                                                    ride_event_payload(ev)))
                    if self.tracker is not None:
                        self.tracker, msgs = trk.on_ride_event(
                            self.tracker, ev, self.net, obs.t, self.tracker_config)
                        for m in msgs:
                            self._record_message(obs.t, m)
                        if ev.kind is EventKind.BOARDED:
                            self._last_fed_next_stop = self.world.vehicle_next_stop(
                                ev.vehicle_id)
            elif obs.kind == "gps":
                self.records.append(TraceRecord(obs.t, "gps", gps_payload(obs.point)))
                if self.tracker is not None:
                    self.tracker, msgs = trk.on_gps(
                        self.tracker, obs.point, obs.t, self.tracker_config, self.net)
                    for m in msgs:
                        self._record_message(obs.t, m)
            else:
                self.records.append(TraceRecord(obs.t, "ground_truth", obs.data))
        self._feed_bus_progress()

    def _feed_bus_progress(self) -> None:
        tr = self.tracker
        if (tr is None or tr.activity is not trk.TripActivity.RIDING_BUS
                or tr.status is not trk.TrackerStatus.ON_TRACK
                or tr.riding_vehicle is None):
            return
        nxt = self.world.vehicle_next_stop(tr.riding_vehicle)
        if nxt is None or nxt == self._last_fed_next_stop:
            return
        self._last_fed_next_stop = nxt
        self.tracker, msgs = trk.on_bus_progress(self.tracker, nxt, self.net)
        for m in msgs:
            self._record_message(self.world.clock, m)

    def _record_message(self, t: float, msg: trk.NavigationMessage) -> None:
        self.records.append(TraceRecord(t, "message", msg.to_payload()))

    # --- views ----------------------------------------------------------------

    def events(self) -> list[TraceRecord]:
        return [r for r in self.records if r.kind == "ride_event"]

    def messages(self) -> list[TraceRecord]:
        return [r for r in self.records if r.kind == "message"]


@dataclass
class ScenarioResult:
    scenario: Scenario
    plan: Optional[TripPlan]
    records: list[TraceRecord]
    final_tracker: Optional[trk.TrackerState]

    def by_kind(self, *kinds: str) -> list[TraceRecord]:
        return [r for r in self.records if r.kind in kinds]


def drive_scenario(runner: EngineRunner, scenario: Scenario) -> Optional[TripPlan]:
    """Feed a scenario's script into an existing runner, tick by tick."""
    plan: Optional[TripPlan] = None
    commands = list(scenario.commands)
    responses = list(scenario.responses)
    end = scenario.start_clock + scenario.duration
    planned = False

    while runner.world.clock < end:
        t = runner.world.clock
        if not planned and t >= scenario.plan_at:
            plan = runner.plan(scenario.destination)
            planned = True
            if plan is not None:
                runner.start_tracking(plan)
            else:
                runner.records.append(TraceRecord(t, "ground_truth",
                                                  {"event": "plan_failed"}))
        while responses and responses[0].t <= t:
            resp = responses.pop(0)
            runner.respond(resp.choice, resp.delay_s)
        while commands and commands[0].t <= t:
            runner.queue_command(commands.pop(0).command)
        runner.tick()
    return plan


def run_scenario(net: TransitNetwork, config: SimConfig, scenario: Scenario,
                 tracker_config: trk.TrackerConfig = trk.DEFAULT_TRACKER_CONFIG,
                 planner_config: PlannerConfig = PlannerConfig()) -> ScenarioResult:
    """Run a scripted scenario to completion; fully deterministic."""
    runner = EngineRunner(net, config, scenario.start, scenario.start_clock,
                          tracker_config, planner_config)
    plan = drive_scenario(runner, scenario)
    return ScenarioResult(scenario, plan, runner.records, runner.tracker)
