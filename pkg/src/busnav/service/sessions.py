"""Session management: one simulated world and engine per client session.

Mutations within a session are serialized by an asyncio lock; the ticker
task advances interactive sessions in scaled real time and pushes new
records to subscribed event streams. Sessions never share mutable state,
so concurrent sessions cannot contaminate each other.
"""
from __future__ import annotations

import asyncio
import itertools
import os
import secrets
import time
from dataclasses import dataclass, field
from typing import Optional

from ..geo import GeoPoint
from ..network import TransitNetwork
from ..planner import TripPlan, plan_payload
from ..scenario import EngineRunner, Scenario, drive_scenario
from ..simworld import CommandRejected, PassengerCommand, SimConfig
from ..tracker import ReplanChoice
from ..trace import write_trace

SNAPSHOT_MIN_INTERVAL_WALL_S = 0.5     # world snapshots at <= 2 Hz


class SessionError(Exception):
    def __init__(self, code: str, detail: str):
        super().__init__(detail)
        self.code = code
        self.detail = detail


@dataclass
class Session:
    session_id: str
    mode: str
    runner: EngineRunner
    speed: float
    paused: bool = False
    closed: bool = False
    plan: Optional[TripPlan] = None
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    subscribers: list[asyncio.Queue] = field(default_factory=list)
    _pushed: int = 0
    _last_snapshot_wall: float = 0.0
    _ticker: Optional[asyncio.Task] = None

    def snapshot(self) -> dict:
        tr = self.runner.tracker
        tracker = None
        if tr is not None:
            tracker = {
                "activity": tr.activity.value,
                "status": tr.status.value,
                "segment_index": tr.segment_index,
                "stops_left": tr.stops_left,
                "deviation": tr.deviation.kind.value if tr.deviation else None,
                "pending_replan": tr.pending_replan is not None,
            }
        active_plan = tr.plan if tr is not None else self.plan
        return {
            "clock": self.runner.world.clock,
            "paused": self.paused,
            "speed": self.speed,
            "passenger": self.runner.world.passenger_snapshot(),
            "vehicles": self.runner.world.vehicle_snapshot(),
            "tracker": tracker,
            "plan": plan_payload(active_plan) if active_plan is not None else None,
        }

    def drain_new_records(self) -> list:
        new = self.runner.records[self._pushed:]
        self._pushed = len(self.runner.records)
        return new

    def publish(self, force_snapshot: bool = False) -> None:
        """Push freshly produced records, plus a rate-limited snapshot."""
        events = []
        for rec in self.drain_new_records():
            if rec.kind in ("message", "ride_event"):
                events.append((rec.kind, {"t": rec.t, **rec.payload}))
        now = time.monotonic()
        if force_snapshot or now - self._last_snapshot_wall >= SNAPSHOT_MIN_INTERVAL_WALL_S:
            self._last_snapshot_wall = now
            events.append(("snapshot", self.snapshot()))
        if not events:
            return
        for q in list(self.subscribers):
            for item in events:
                q.put_nowait(item)

    def subscribe(self) -> asyncio.Queue:
        q: asyncio.Queue = asyncio.Queue()
        self.subscribers.append(q)
        return q

    def unsubscribe(self, q: asyncio.Queue) -> None:
        if q in self.subscribers:
            self.subscribers.remove(q)


class SessionManager:
    def __init__(self, net: TransitNetwork, default_speed: float = 5.0,
                 default_seed: int = 1, trace_dir: Optional[str] = None):
        self.net = net
        self.default_speed = default_speed
        self.default_seed = default_seed
        self.trace_dir = trace_dir
        self.sessions: dict[str, Session] = {}
        self._counter = itertools.count(1)

    def get(self, session_id: str) -> Session:
        s = self.sessions.get(session_id)
        if s is None or s.closed:
            raise SessionError("unknown_session", f"no session {session_id!r}")
        return s

    def create_interactive(self, start: GeoPoint, seed: int,
                           speed: Optional[float]) -> Session:
        runner = EngineRunner(self.net, SimConfig(seed=seed), start)
        session = Session(self._new_id(), "interactive", runner,
                          speed or self.default_speed)
        self.sessions[session.session_id] = session
        session._ticker = asyncio.get_running_loop().create_task(
            self._run_ticker(session))
        return session

    def create_scripted(self, scenario: Scenario, seed: int) -> Session:
        runner = EngineRunner(self.net, SimConfig(seed=seed), scenario.start,
                              scenario.start_clock)
        session = Session(self._new_id(), "scripted", runner, speed=0.0)
        session.plan = drive_scenario(runner, scenario)
        session.paused = True
        self.sessions[session.session_id] = session
        return session

    async def _run_ticker(self, session: Session) -> None:
        cfg = session.runner.sim_config
        while not session.closed:
            await asyncio.sleep(cfg.tick_s / session.speed)
            if session.paused or session.closed:
                continue
            async with session.lock:
                session.runner.tick()
                session.publish()

    async def close(self, session_id: str) -> None:
        session = self.get(session_id)
        session.closed = True
        if session._ticker is not None:
            session._ticker.cancel()
        self._dump(session)
        del self.sessions[session.session_id]

    async def close_all(self) -> None:
        for sid in list(self.sessions):
            try:
                await self.close(sid)
            except SessionError:
                pass

    def _dump(self, session: Session) -> None:
        if not self.trace_dir:
            return
        os.makedirs(self.trace_dir, exist_ok=True)
        path = os.path.join(self.trace_dir, f"session-{session.session_id}.jsonl")
        write_trace(path, session.runner.records)

    def _new_id(self) -> str:
        return f"s{next(self._counter):04d}-{secrets.token_hex(4)}"


def command_from_request(kind: str, lat: Optional[float], lon: Optional[float],
                         vehicle: Optional[str]) -> PassengerCommand:
    target = None
    if kind == "walk_toward":
        if lat is None or lon is None:
            raise SessionError("bad_request", "walk_toward needs lat and lon")
        target = GeoPoint(lat, lon)
    try:
        return PassengerCommand(kind, target=target, vehicle=vehicle)
    except ValueError as e:
        raise SessionError("bad_request", str(e))


def reject_code(reason: str) -> str:
    mapping = {
        "doors closed": "doors_closed",
        "already on board": "already_on_board",
        "not on board": "not_on_board",
        "vehicle not in service": "vehicle_not_in_service",
        "vehicle not close enough to board": "vehicle_too_far",
    }
    if reason.startswith("unknown vehicle"):
        return "unknown_vehicle"
    return mapping.get(reason, "command_rejected")
