"""Request/response bodies for the session service."""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class Point(BaseModel):
    lat: float = Field(ge=-90, le=90)
    lon: float = Field(ge=-180, le=180)


class CreateSessionRequest(BaseModel):
    mode: Literal["interactive", "scripted"] = "interactive"
    seed: int = 1
    start: Optional[Point] = None          # required for interactive sessions
    scenario: Optional[dict] = None        # required for scripted sessions
    speed: Optional[float] = Field(default=None, gt=0)


class SessionInfo(BaseModel):
    session_id: str
    mode: str
    clock: float
    speed: float
    paused: bool


class PlanRequest(BaseModel):
    origin: Optional[Point] = None         # default: the passenger's position
    destination: Point
    depart_after: Optional[float] = None   # default: the world clock


class PlanResponse(BaseModel):
    no_route: bool
    plan: Optional[dict] = None


class CommandRequest(BaseModel):
    kind: Literal["walk_toward", "wait", "board", "alight"]
    lat: Optional[float] = None
    lon: Optional[float] = None
    vehicle: Optional[str] = None


class ReplanResponseRequest(BaseModel):
    choice: Literal["confirm", "delay", "refuse"]
    delay_s: float = Field(default=60.0, gt=0)


class ClockRequest(BaseModel):
    action: Literal["pause", "resume", "set_speed"]
    speed: Optional[float] = Field(default=None, gt=0)


class ProtocolError(BaseModel):
    code: str
    detail: str
