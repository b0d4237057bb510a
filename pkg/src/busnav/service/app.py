"""HTTP session service: plan trips, steer the passenger, stream guidance.

One server hosts one network and many isolated sessions. State flows to
clients over a per-session server-sent event stream (message, ride_event,
snapshot); commands and re-plan responses come in as POSTs. Protocol
errors carry machine-readable codes.
"""
from __future__ import annotations

import asyncio
from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from ..geo import GeoPoint
from ..network import TransitNetwork, network_to_doc
from ..planner import plan_payload
from ..scenario import ScenarioError, scenario_from_doc
from ..simworld import CommandRejected
from ..tracker import ReplanChoice
from ..trace import canonical_json
from .models import (ClockRequest, CommandRequest, CreateSessionRequest,
                     PlanRequest, PlanResponse, ReplanResponseRequest, SessionInfo)
from .sessions import (Session, SessionError, SessionManager,
                       command_from_request, reject_code)


def create_app(net: TransitNetwork, default_speed: float = 5.0,
               default_seed: int = 1, trace_dir: Optional[str] = None,
               ui_dir: Optional[str] = None) -> FastAPI:
    manager = SessionManager(net, default_speed, default_seed, trace_dir)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        await manager.close_all()

    app = FastAPI(title="busnav session service", lifespan=lifespan)
    app.state.manager = manager

    @app.exception_handler(SessionError)
    async def session_error_handler(request: Request, exc: SessionError):
        status = 404 if exc.code == "unknown_session" else 409
        if exc.code == "bad_request":
            status = 422
        return JSONResponse(status_code=status,
                            content={"code": exc.code, "detail": exc.detail})

    def info(session: Session) -> SessionInfo:
        return SessionInfo(session_id=session.session_id, mode=session.mode,
                           clock=session.runner.world.clock, speed=session.speed,
                           paused=session.paused)

    @app.get("/network")
    async def get_network() -> dict:
        return network_to_doc(net)

    @app.post("/sessions", response_model=SessionInfo)
    async def create_session(req: CreateSessionRequest):
        if req.mode == "interactive":
            if req.start is None:
                raise SessionError("bad_request", "interactive sessions need start")
            session = manager.create_interactive(
                GeoPoint(req.start.lat, req.start.lon), req.seed, req.speed)
        else:
            if req.scenario is None:
                raise SessionError("bad_request", "scripted sessions need scenario")
            try:
                scenario = scenario_from_doc(req.scenario)
            except ScenarioError as e:
                raise SessionError("bad_request", str(e))
            session = manager.create_scripted(scenario, req.seed)
        return info(session)

    @app.get("/sessions/{sid}", response_model=None)
    async def get_session(sid: str) -> dict:
        session = manager.get(sid)
        return session.snapshot()

    @app.delete("/sessions/{sid}")
    async def delete_session(sid: str) -> dict:
        await manager.close(sid)
        return {"deleted": sid}

    @app.post("/sessions/{sid}/plan", response_model=PlanResponse)
    async def plan_trip_endpoint(sid: str, req: PlanRequest):
        session = manager.get(sid)
        async with session.lock:
            origin = GeoPoint(req.origin.lat, req.origin.lon) if req.origin else None
            plan = session.runner.plan(GeoPoint(req.destination.lat, req.destination.lon),
                                       origin=origin, depart_after=req.depart_after)
            session.plan = plan
        if plan is None:
            return PlanResponse(no_route=True)
        return PlanResponse(no_route=False, plan=plan_payload(plan))

    @app.post("/sessions/{sid}/track")
    async def start_tracking(sid: str) -> dict:
        session = manager.get(sid)
        async with session.lock:
            if session.plan is None:
                raise SessionError("no_plan", "plan a trip before tracking")
            session.runner.start_tracking(session.plan)
            session.publish(force_snapshot=True)
        return {"tracking": True}

    @app.post("/sessions/{sid}/command")
    async def passenger_command(sid: str, req: CommandRequest) -> dict:
        session = manager.get(sid)
        cmd = command_from_request(req.kind, req.lat, req.lon, req.vehicle)
        async with session.lock:
            try:
                session.runner.world.validate(cmd)
            except CommandRejected as e:
                raise SessionError(reject_code(e.reason), e.reason)
            session.runner.queue_command(cmd)
        return {"queued": req.kind}

    @app.post("/sessions/{sid}/replan-response")
    async def replan_response(sid: str, req: ReplanResponseRequest) -> dict:
        session = manager.get(sid)
        async with session.lock:
            tr = session.runner.tracker
            if tr is None or tr.pending_replan is None:
                raise SessionError("no_prompt", "no re-plan prompt is pending")
            session.runner.respond(ReplanChoice(req.choice), req.delay_s)
            session.publish(force_snapshot=True)
        return {"choice": req.choice}

    @app.post("/sessions/{sid}/clock")
    async def clock_control(sid: str, req: ClockRequest) -> dict:
        session = manager.get(sid)
        async with session.lock:
            if req.action == "pause":
                session.paused = True
            elif req.action == "resume":
                session.paused = False
            else:
                if req.speed is None:
                    raise SessionError("bad_request", "set_speed needs speed")
                session.speed = req.speed
        return {"paused": session.paused, "speed": session.speed}

    @app.get("/sessions/{sid}/log")
    async def session_log(sid: str, after: float = -1.0,
                          kinds: Optional[str] = None) -> dict:
        session = manager.get(sid)
        wanted = set(kinds.split(",")) if kinds else None
        records = [
            {"t": r.t, "kind": r.kind, "payload": r.payload}
            for r in session.runner.records
            if r.t > after and (wanted is None or r.kind in wanted)
        ]
        return {"records": records, "clock": session.runner.world.clock}

    @app.get("/sessions/{sid}/events")
    async def event_stream(sid: str, limit: int = 0):
        """Server-sent events; with limit > 0 the stream ends after that
        many events (handy for buffering clients and tests)."""
        session = manager.get(sid)
        queue = session.subscribe()

        async def gen():
            sent = 0
            try:
                yield _sse("snapshot", session.snapshot())
                while not session.closed and (limit <= 0 or sent < limit):
                    try:
                        kind, payload = await asyncio.wait_for(queue.get(), timeout=15.0)
                    except asyncio.TimeoutError:
                        yield ": keepalive\n\n"
                        continue
                    yield _sse(kind, payload)
                    sent += 1
            finally:
                session.unsubscribe(queue)

        return StreamingResponse(gen(), media_type="text/event-stream")

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def _sse(event: str, payload: dict) -> str:
    return f"event: {event}\ndata: {canonical_json(payload)}\n\n"
