"""Trip tracking and micro-navigation guidance.

Follows a plan segment by segment, watches GPS fixes and ride events for
three kinds of deviation (wrong bus, missed stop, off the walking path),
raises a confirm/delay/refuse re-plan prompt on each deviation, and renders
activity-specific guidance messages from one substitution template table.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

from .detection import EventKind, RideEvent
from .geo import GeoPoint, haversine_m
from .network import NetworkError, TransitNetwork, nearest_stop, run_stop_index, stops_between
from .planner import BusRideSegment, PlannerConfig, TripPlan, WalkSegment, replan

log = logging.getLogger(__name__)


class TripActivity(enum.Enum):
    STARTING_JOURNEY = "starting_journey"
    WALKING_TO_STOP = "walking_to_stop"
    ARRIVING_AT_STOP = "arriving_at_stop"
    BOARDING_BUS = "boarding_bus"
    RIDING_BUS = "riding_bus"
    DEPARTING_BUS = "departing_bus"
    WALKING_TO_DESTINATION = "walking_to_destination"


class DeviationKind(enum.Enum):
    WRONG_BUS = "wrong_bus"
    MISSED_STOP = "missed_stop"
    OFF_PATH = "off_path"


class TrackerStatus(enum.Enum):
    ON_TRACK = "on_track"
    DEVIATED = "deviated"
    ARRIVED = "arrived"


class Severity(enum.Enum):
    INFO = "info"
    ALERT = "alert"


class ReplanChoice(enum.Enum):
    CONFIRM = "confirm"
    DELAY = "delay"
    REFUSE = "refuse"


@dataclass(frozen=True)
class Deviation:
    kind: DeviationKind
    detected_at: float
    detail: dict


@dataclass(frozen=True)
class ReplanPrompt:
    raised_at: float
    kind: DeviationKind


@dataclass(frozen=True)
class NavigationMessage:
    activity: TripActivity
    severity: Severity
    text: str
    payload: dict

    def to_payload(self) -> dict:
        return {
            "activity": self.activity.value,
            "severity": self.severity.value,
            "text": self.text,
            "payload": self.payload,
        }


@dataclass(frozen=True)
class TrackerConfig:
    off_path_bound_m: float = 50.0
    arrival_radius_m: float = 25.0
    # Consecutive out-of-bound fixes before declaring an off-path deviation.
    off_path_fixes: int = 2


DEFAULT_TRACKER_CONFIG = TrackerConfig()

# Every user-facing string lives here so the wording can be swapped wholesale.
TEMPLATES = {
    "starting": "Journey started. Heading for {destination}.",
    "walk_to_stop": "Walk to stop {stop_name}: {distance_m} m remaining.",
    "walk_to_destination": "Walk to your destination: {distance_m} m remaining.",
    "arriving": "At stop {stop_name}. Next bus: line {line_id} direction {direction} "
                "at {departure}; get off at {exit_name}.",
    "boarded_ok": "You are on the correct bus (line {line_id} direction {direction}). "
                  "{stops_left} stops until {exit_name}.",
    "riding": "{stops_left} stops left. Next stop: {next_stop_name}.",
    "leave_soon": "Leave the bus at the next stop: {exit_name}.",
    "departed": "You got off at {stop_name}.",
    "arrived": "You have arrived at your destination.",
    "wrong_bus": "You boarded the wrong bus: line {observed_line} direction "
                 "{observed_direction} (planned: line {line_id} direction {direction}).",
    "missed_stop": "You missed your exit stop {exit_name}.",
    "wrong_alight": "You got off at {stop_name}, not the planned {exit_name}.",
    "off_path": "You are {distance_m} m off the planned walking route.",
    "replan_prompt": "Recalculate the route from your current position? "
                     "(confirm / delay / refuse)",
    "replan_done": "New route calculated from your current position.",
    "replan_failed": "No route found from your current position.",
    "replan_delayed": "Re-planning delayed by {delay_s} s.",
    "replan_refused": "Re-planning refused; keeping the current route.",
}


@dataclass(frozen=True)
class TrackerState:
    """Progress through one plan. A value; operations return new states."""

    plan: TripPlan
    segment_index: int
    activity: TripActivity
    status: TrackerStatus
    deviation: Optional[Deviation] = None
    pending_replan: Optional[ReplanPrompt] = None
    riding_vehicle: Optional[str] = None
    next_stop: Optional[str] = None
    stops_left: Optional[int] = None
    last_gps: Optional[tuple[GeoPoint, float]] = None
    off_path_count: int = 0
    leave_soon_sent: bool = False
    delay_until: Optional[float] = None

    @property
    def current_segment(self):
        if self.segment_index < len(self.plan.segments):
            return self.plan.segments[self.segment_index]
        return None

    @property
    def arrived(self) -> bool:
        return self.status is TrackerStatus.ARRIVED


def _fmt_time(seconds: float) -> str:
    s = int(round(seconds))
    return f"{s // 3600:02d}:{(s % 3600) // 60:02d}:{s % 60:02d}"


def _msg(activity: TripActivity, severity: Severity, template: str,
         payload: dict) -> NavigationMessage:
    return NavigationMessage(activity, severity, TEMPLATES[template].format(**payload), payload)


def _walk_activity(plan: TripPlan, index: int) -> TripActivity:
    if index + 1 < len(plan.segments):
        return TripActivity.WALKING_TO_STOP
    return TripActivity.WALKING_TO_DESTINATION


def start_tracking(plan: TripPlan, now: float) -> TrackerState:
    """Begin following a plan. An empty plan is immediately complete."""
    if not plan.segments:
        return TrackerState(plan, 0, TripActivity.WALKING_TO_DESTINATION,
                            TrackerStatus.ARRIVED)
    first = plan.segments[0]
    if isinstance(first, WalkSegment):
        activity = TripActivity.STARTING_JOURNEY
    else:
        activity = TripActivity.ARRIVING_AT_STOP
    return TrackerState(plan, 0, activity, TrackerStatus.ON_TRACK)


def _arrival_message(net_free_seg: BusRideSegment, net: Optional[TransitNetwork],
                     stop_names: dict) -> NavigationMessage:
    seg = net_free_seg
    payload = {
        "stop_name": stop_names.get(seg.board_stop, seg.board_stop),
        "line_id": seg.line_id,
        "direction": seg.direction,
        "departure": _fmt_time(seg.scheduled_board),
        "exit_name": stop_names.get(seg.alight_stop, seg.alight_stop),
        "board_stop": seg.board_stop,
        "exit_stop": seg.alight_stop,
        "scheduled_board": seg.scheduled_board,
    }
    return _msg(TripActivity.ARRIVING_AT_STOP, Severity.INFO, "arriving", payload)


def _stop_names(state: TrackerState, net: Optional[TransitNetwork]) -> dict:
    if net is None:
        return {}
    return {sid: s.name for sid, s in net.stops.items()}


def _walk_message(state: TrackerState, seg: WalkSegment, fix: Optional[GeoPoint],
                  net: Optional[TransitNetwork]) -> NavigationMessage:
    activity = _walk_activity(state.plan, state.segment_index)
    remaining = seg.length_m() if fix is None else haversine_m(fix, seg.end)
    payload = {"distance_m": int(round(remaining))}
    if activity is TripActivity.WALKING_TO_STOP:
        nxt = state.plan.segments[state.segment_index + 1]
        names = _stop_names(state, net)
        payload["stop_name"] = names.get(nxt.board_stop, nxt.board_stop)
        payload["stop_id"] = nxt.board_stop
        return _msg(activity, Severity.INFO, "walk_to_stop", payload)
    return _msg(activity, Severity.INFO, "walk_to_destination", payload)


def _raise_deviation(state: TrackerState, kind: DeviationKind, now: float,
                     detail: dict) -> tuple[TrackerState, list[NavigationMessage]]:
    deviation = Deviation(kind, now, detail)
    prompt = ReplanPrompt(now, kind)
    state = replace(state, status=TrackerStatus.DEVIATED, deviation=deviation,
                    pending_replan=prompt, delay_until=None)
    template = {"wrong_bus": "wrong_bus", "missed_stop": "missed_stop",
                "off_path": "off_path"}[kind.value]
    if kind is DeviationKind.MISSED_STOP and "alighted_at_name" in detail:
        template = "wrong_alight"
        alert_payload = {"stop_name": detail["alighted_at_name"],
                         "exit_name": detail["exit_name"], **detail}
    else:
        alert_payload = detail
    msgs = [
        _msg(state.activity, Severity.ALERT, template, alert_payload),
        _msg(state.activity, Severity.ALERT, "replan_prompt",
             {"deviation": kind.value}),
    ]
    return state, msgs


def _maybe_reraise(state: TrackerState, now: float,
                   msgs: list[NavigationMessage]) -> TrackerState:
    if (state.delay_until is not None and now >= state.delay_until
            and state.status is TrackerStatus.DEVIATED and state.pending_replan is None):
        prompt = ReplanPrompt(now, state.deviation.kind)
        msgs.append(_msg(state.activity, Severity.ALERT, "replan_prompt",
                         {"deviation": state.deviation.kind.value}))
        return replace(state, pending_replan=prompt, delay_until=None)
    return state


def _advance(state: TrackerState, now: float, net: Optional[TransitNetwork],
             msgs: list[NavigationMessage]) -> TrackerState:
    """Complete the current segment and enter the next one."""
    idx = state.segment_index + 1
    state = replace(state, segment_index=idx, status=TrackerStatus.ON_TRACK,
                    deviation=None, pending_replan=None, delay_until=None,
                    off_path_count=0, leave_soon_sent=False, riding_vehicle=None,
                    next_stop=None, stops_left=None)
    if idx >= len(state.plan.segments):
        state = replace(state, status=TrackerStatus.ARRIVED)
        msgs.append(_msg(state.activity, Severity.INFO, "arrived", {}))
        return state
    seg = state.plan.segments[idx]
    if isinstance(seg, BusRideSegment):
        state = replace(state, activity=TripActivity.ARRIVING_AT_STOP)
        msgs.append(_arrival_message(seg, net, _stop_names(state, net)))
    else:
        state = replace(state, activity=_walk_activity(state.plan, idx))
        fix = state.last_gps[0] if state.last_gps else None
        msgs.append(_walk_message(state, seg, fix, net))
    return state


def on_gps(state: TrackerState, fix: GeoPoint, now: float,
           config: TrackerConfig = DEFAULT_TRACKER_CONFIG,
           net: Optional[TransitNetwork] = None
           ) -> tuple[TrackerState, list[NavigationMessage]]:
    """Feed one GPS fix. Drives walk progress and off-path detection."""
    msgs: list[NavigationMessage] = []
    state = replace(state, last_gps=(fix, now))
    if state.arrived:
        return state, msgs
    state = _maybe_reraise(state, now, msgs)

    seg = state.current_segment
    if isinstance(seg, BusRideSegment):
        return state, msgs   # position display only while on a bus segment

    if state.activity is TripActivity.STARTING_JOURNEY:
        state = replace(state, activity=_walk_activity(state.plan, state.segment_index))

    if haversine_m(fix, seg.end) <= config.arrival_radius_m:
        return _advance(state, now, net, msgs), msgs

    d_path = seg.path.distance_to_point_m(fix)
    if d_path > config.off_path_bound_m:
        count = state.off_path_count + 1
        state = replace(state, off_path_count=count)
        if count >= config.off_path_fixes and state.status is TrackerStatus.ON_TRACK:
            state, dev_msgs = _raise_deviation(
                state, DeviationKind.OFF_PATH, now,
                {"distance_m": int(round(d_path))})
            msgs.extend(dev_msgs)
    else:
        state = replace(state, off_path_count=0)

    msgs.append(_walk_message(state, seg, fix, net))
    return state, msgs


def on_ride_event(state: TrackerState, event: RideEvent, net: TransitNetwork,
                  now: float, config: TrackerConfig = DEFAULT_TRACKER_CONFIG
                  ) -> tuple[TrackerState, list[NavigationMessage]]:
    """Feed a detector event: a boarding or an alighting."""
    if event.vehicle_id not in net.runs:
        raise NetworkError(f"ride event for unknown vehicle {event.vehicle_id!r}")
    msgs: list[NavigationMessage] = []
    if state.arrived:
        return state, msgs
    state = _maybe_reraise(state, now, msgs)

    if event.kind is EventKind.BOARDED:
        return _on_boarded(state, event, net, now, msgs)
    return _on_alighted(state, event, net, now, msgs)


def _on_boarded(state: TrackerState, event: RideEvent, net: TransitNetwork,
                now: float, msgs: list[NavigationMessage]
                ) -> tuple[TrackerState, list[NavigationMessage]]:
    seg = state.current_segment

    # Boarding while still on a walk leg: accept it when the bus matches the
    # upcoming ride (GPS simply had not confirmed stop arrival yet).
    if isinstance(seg, WalkSegment):
        nxt_idx = state.segment_index + 1
        nxt = (state.plan.segments[nxt_idx]
               if nxt_idx < len(state.plan.segments) else None)
        if (isinstance(nxt, BusRideSegment) and nxt.line_id == event.line_id
                and nxt.direction == event.direction
                and state.status is TrackerStatus.ON_TRACK):
            state = _advance(state, now, net, [])   # silently complete the walk
            seg = state.current_segment
        else:
            if state.status is TrackerStatus.ON_TRACK:
                planned = {"line_id": nxt.line_id if isinstance(nxt, BusRideSegment) else "-",
                           "direction": nxt.direction if isinstance(nxt, BusRideSegment) else "-"}
                state, dev = _raise_deviation(
                    state, DeviationKind.WRONG_BUS, now,
                    {"observed_line": event.line_id,
                     "observed_direction": event.direction, **planned})
                msgs.extend(dev)
            return replace(state, riding_vehicle=event.vehicle_id), msgs

    if not isinstance(seg, BusRideSegment):
        log.warning("boarded event with no bus segment pending")
        return replace(state, riding_vehicle=event.vehicle_id), msgs

    state = replace(state, riding_vehicle=event.vehicle_id)
    if seg.line_id == event.line_id and seg.direction == event.direction:
        names = _stop_names(state, net)
        span = stops_between(net, seg.line_id, seg.direction, seg.board_stop,
                             seg.alight_stop)
        stops_left = len(span) - 1
        state = replace(state, activity=TripActivity.RIDING_BUS,
                        stops_left=stops_left)
        msgs.append(_msg(TripActivity.RIDING_BUS, Severity.INFO, "boarded_ok", {
            "line_id": seg.line_id, "direction": seg.direction,
            "stops_left": stops_left,
            "exit_name": names.get(seg.alight_stop, seg.alight_stop),
            "exit_stop": seg.alight_stop, "vehicle_id": event.vehicle_id,
        }))
        return state, msgs

    state = replace(state, activity=TripActivity.RIDING_BUS)
    if state.status is TrackerStatus.ON_TRACK:
        state, dev = _raise_deviation(state, DeviationKind.WRONG_BUS, now, {
            "observed_line": event.line_id, "observed_direction": event.direction,
            "line_id": seg.line_id, "direction": seg.direction,
        })
        msgs.extend(dev)
    return state, msgs


def _on_alighted(state: TrackerState, event: RideEvent, net: TransitNetwork,
                 now: float, msgs: list[NavigationMessage]
                 ) -> tuple[TrackerState, list[NavigationMessage]]:
    state = replace(state, riding_vehicle=None)
    seg = state.current_segment
    names = _stop_names(state, net)

    if not isinstance(seg, BusRideSegment):
        log.warning("alighted event outside a bus segment")
        return state, msgs

    if state.last_gps is not None:
        at_stop = nearest_stop(net, state.last_gps[0]).stop_id
    else:
        log.warning("alighted with no GPS fix; assuming the planned exit")
        at_stop = seg.alight_stop

    if at_stop == seg.alight_stop and state.status is not TrackerStatus.DEVIATED:
        msgs.append(_msg(TripActivity.DEPARTING_BUS, Severity.INFO, "departed",
                         {"stop_name": names.get(at_stop, at_stop), "stop_id": at_stop}))
        return _advance(state, now, net, msgs), msgs

    if state.status is TrackerStatus.ON_TRACK:
        state, dev = _raise_deviation(state, DeviationKind.MISSED_STOP, now, {
            "alighted_at": at_stop,
            "alighted_at_name": names.get(at_stop, at_stop),
            "exit_name": names.get(seg.alight_stop, seg.alight_stop),
            "exit_stop": seg.alight_stop,
        })
        msgs.extend(dev)
        state = replace(state, activity=TripActivity.ARRIVING_AT_STOP)
        return state, msgs

    # Already deviated (e.g. refused after a wrong bus): just note the exit.
    msgs.append(_msg(TripActivity.DEPARTING_BUS, Severity.INFO, "departed",
                     {"stop_name": names.get(at_stop, at_stop), "stop_id": at_stop}))
    state = replace(state, activity=TripActivity.ARRIVING_AT_STOP)
    return state, msgs


def on_bus_progress(state: TrackerState, next_stop: str, net: TransitNetwork
                    ) -> tuple[TrackerState, list[NavigationMessage]]:
    """Feed the riding vehicle's upcoming stop; detects a missed exit."""
    if state.activity is not TripActivity.RIDING_BUS:
        raise ValueError("bus progress outside a bus ride")
    seg = state.current_segment
    if not isinstance(seg, BusRideSegment):
        raise ValueError("bus progress with no bus segment active")
    pattern = net.pattern(seg.line_id, seg.direction)
    try:
        idx_next = pattern.stop_sequence.index(next_stop)
    except ValueError:
        raise NetworkError(f"stop {next_stop!r} not on line {seg.line_id!r} "
                           f"direction {seg.direction}")
    idx_exit = pattern.stop_sequence.index(seg.alight_stop)
    msgs: list[NavigationMessage] = []
    names = _stop_names(state, net)
    state = replace(state, next_stop=next_stop)

    if idx_next > idx_exit:
        if state.status is TrackerStatus.ON_TRACK:
            now = state.last_gps[1] if state.last_gps else 0.0
            state, dev = _raise_deviation(state, DeviationKind.MISSED_STOP, now, {
                "exit_name": names.get(seg.alight_stop, seg.alight_stop),
                "exit_stop": seg.alight_stop, "next_stop": next_stop,
            })
            msgs.extend(dev)
        return state, msgs

    stops_left = idx_exit - idx_next + 1
    state = replace(state, stops_left=stops_left)
    payload = {
        "stops_left": stops_left, "next_stop": next_stop,
        "next_stop_name": names.get(next_stop, next_stop),
        "exit_name": names.get(seg.alight_stop, seg.alight_stop),
    }
    if state.riding_vehicle and state.riding_vehicle in net.runs:
        i = run_stop_index(net.runs[state.riding_vehicle], next_stop)
        if i is not None:
            payload["next_arrival"] = net.runs[state.riding_vehicle].stop_times[i].arrival
    if stops_left == 1 and not state.leave_soon_sent:
        state = replace(state, leave_soon_sent=True)
        msgs.append(_msg(TripActivity.RIDING_BUS, Severity.ALERT, "leave_soon", payload))
    else:
        msgs.append(_msg(TripActivity.RIDING_BUS, Severity.INFO, "riding", payload))
    return state, msgs


def respond_to_replan(state: TrackerState, choice: ReplanChoice, net: TransitNetwork,
                      now: float, delay_s: float = 60.0,
                      planner_config: Optional[PlannerConfig] = None
                      ) -> tuple[TrackerState, list[NavigationMessage]]:
    """Answer a pending re-plan prompt."""
    if state.pending_replan is None:
        raise ValueError("no pending re-plan prompt")
    msgs: list[NavigationMessage] = []

    if choice is ReplanChoice.REFUSE:
        state = replace(state, pending_replan=None, delay_until=None)
        msgs.append(_msg(state.activity, Severity.INFO, "replan_refused", {}))
        return state, msgs

    if choice is ReplanChoice.DELAY:
        state = replace(state, pending_replan=None, delay_until=now + delay_s)
        msgs.append(_msg(state.activity, Severity.INFO, "replan_delayed",
                         {"delay_s": int(delay_s)}))
        return state, msgs

    position = state.last_gps[0] if state.last_gps else state.plan.origin
    kwargs = {"config": planner_config} if planner_config else {}
    new_plan = replan(net, position, state.plan.destination, now, **kwargs)
    if new_plan is None:
        state = replace(state, pending_replan=None, delay_until=None)
        msgs.append(_msg(state.activity, Severity.ALERT, "replan_failed", {}))
        return state, msgs
    new_state = replace(start_tracking(new_plan, now), last_gps=state.last_gps)
    msgs.append(_msg(new_state.activity, Severity.INFO, "replan_done", {}))
    return new_state, msgs


def current_guidance(state: TrackerState,
                     net: Optional[TransitNetwork] = None) -> list[NavigationMessage]:
    """Idempotent render of everything the passenger should see right now."""
    if state.arrived:
        return [_msg(state.activity, Severity.INFO, "arrived", {})]
    msgs: list[NavigationMessage] = []
    seg = state.current_segment
    names = _stop_names(state, net)

    if state.activity is TripActivity.STARTING_JOURNEY:
        msgs.append(_msg(state.activity, Severity.INFO, "starting", {
            "destination": f"{state.plan.destination.lat:.5f}, {state.plan.destination.lon:.5f}"}))
    elif state.activity in (TripActivity.WALKING_TO_STOP,
                            TripActivity.WALKING_TO_DESTINATION):
        fix = state.last_gps[0] if state.last_gps else None
        msgs.append(_walk_message(state, seg, fix, net))
    elif state.activity is TripActivity.ARRIVING_AT_STOP and isinstance(seg, BusRideSegment):
        msgs.append(_arrival_message(seg, net, names))
    elif state.activity is TripActivity.RIDING_BUS and isinstance(seg, BusRideSegment):
        payload = {
            "stops_left": state.stops_left if state.stops_left is not None else "?",
            "next_stop": state.next_stop or "?",
            "next_stop_name": names.get(state.next_stop, state.next_stop or "?"),
            "exit_name": names.get(seg.alight_stop, seg.alight_stop),
        }
        msgs.append(_msg(TripActivity.RIDING_BUS, Severity.INFO, "riding", payload))

    if state.deviation is not None:
        kind = state.deviation.kind
        template = {"wrong_bus": "wrong_bus", "missed_stop": "missed_stop",
                    "off_path": "off_path"}[kind.value]
        detail = dict(state.deviation.detail)
        if kind is DeviationKind.MISSED_STOP and "alighted_at_name" in detail:
            template = "wrong_alight"
            detail.setdefault("stop_name", detail["alighted_at_name"])
        msgs.append(_msg(state.activity, Severity.ALERT, template, detail))
        if state.pending_replan is not None:
            msgs.append(_msg(state.activity, Severity.ALERT, "replan_prompt",
                             {"deviation": kind.value}))
    return msgs
