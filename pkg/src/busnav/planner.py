"""Multimodal journey planning over the local timetable.

Produces a single plan of alternating walk and bus-ride segments, optimal
by arrival time under a fixed-speed walking model. ``brute_force_oracle``
independently enumerates every itinerary on small networks and is the
reference the search is tested against.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional, Union

from .geo import GeoPoint, Polyline, haversine_m
from .network import NetworkError, TransitNetwork, VehicleRun, stops_between


@dataclass(frozen=True)
class PlannerConfig:
    walk_speed_mps: float = 1.2
    walk_radius_m: float = 500.0
    max_bus_segments: int = 3
    # Points closer than this are treated as the same place.
    coincidence_m: float = 1.0


DEFAULT_CONFIG = PlannerConfig()


@dataclass(frozen=True)
class WalkSegment:
    path: Polyline
    est_duration_s: float

    @property
    def start(self) -> GeoPoint:
        return self.path.start

    @property
    def end(self) -> GeoPoint:
        return self.path.end

    def length_m(self) -> float:
        return self.path.length_m()


@dataclass(frozen=True)
class BusRideSegment:
    line_id: str
    direction: int
    vehicle_id: str
    board_stop: str
    alight_stop: str
    scheduled_board: int
    scheduled_alight: int
    intermediate_stops: int
    board_location: GeoPoint
    alight_location: GeoPoint

    @property
    def start(self) -> GeoPoint:
        return self.board_location

    @property
    def end(self) -> GeoPoint:
        return self.alight_location


Segment = Union[WalkSegment, BusRideSegment]


@dataclass(frozen=True)
class TripPlan:
    origin: GeoPoint
    destination: GeoPoint
    planned_departure: float
    segments: tuple[Segment, ...]

    def arrival_time(self) -> float:
        t = self.planned_departure
        for seg in self.segments:
            if isinstance(seg, WalkSegment):
                t += seg.est_duration_s
            else:
                t = float(seg.scheduled_alight)
        return t

    def bus_segment_count(self) -> int:
        return sum(1 for s in self.segments if isinstance(s, BusRideSegment))


class OracleSizeError(ValueError):
    """The brute-force oracle only handles small networks."""


# --- label search ------------------------------------------------------------

# A label is the lexicographic cost (arrival, bus_count, walk_m, key) of the
# best partial itinerary reaching a (stop, bus_count, last_leg_was_walk) node.
# The key is the serialized leg list, which makes the order total and every
# tie-break deterministic.


@dataclass(frozen=True)
class _Leg:
    kind: str                      # "walk" | "ride"
    target: str                    # stop id
    run: Optional[VehicleRun] = None
    board: Optional[int] = None    # stop_time index
    alight: Optional[int] = None

    def key(self) -> str:
        if self.kind == "walk":
            return f"w:{self.target}"
        return f"b:{self.run.vehicle_id}:{self.board}:{self.alight}"


def plan_trip(net: TransitNetwork, origin: GeoPoint, destination: GeoPoint,
              depart_after: float, config: PlannerConfig = DEFAULT_CONFIG
              ) -> Optional[TripPlan]:
    """Earliest-arrival plan from origin to destination, or None if unreachable.

    Ties are broken by fewer bus segments, then shorter total walk, then the
    lexicographically smallest leg key sequence.
    """
    if haversine_m(origin, destination) <= config.coincidence_m:
        return TripPlan(origin, destination, depart_after, ())

    best: Optional[tuple] = None   # (arrival, buses, walk, keys, legs)

    direct = haversine_m(origin, destination)
    if direct <= config.walk_radius_m:
        best = (depart_after + direct / config.walk_speed_mps, 0, direct, ("w:dest",), ())

    # node -> best (arrival, walk, keys); bus count is part of the node
    labels: dict[tuple[str, int, bool], tuple] = {}
    pq: list[tuple] = []

    for sid, stop in sorted(net.stops.items()):
        d = haversine_m(origin, stop.location)
        if d > config.walk_radius_m:
            continue
        walked = d > config.coincidence_m
        legs = (_Leg("walk", sid),) if walked else ()
        arr = depart_after + (d / config.walk_speed_mps if walked else 0.0)
        node = (sid, 0, walked)
        cost = (arr, d if walked else 0.0, tuple(l.key() for l in legs))
        if node not in labels or cost < labels[node]:
            labels[node] = cost
            heapq.heappush(pq, (arr, 0, cost[1], cost[2], node, legs))

    while pq:
        arr, buses, walk, keys, node, legs = heapq.heappop(pq)
        if labels.get(node) != (arr, walk, keys):
            continue
        sid, _, last_walk = node

        # Finish: walk (or step) from this stop to the destination.
        dd = haversine_m(net.stops[sid].location, destination)
        can_finish = dd <= config.coincidence_m or (not last_walk and dd <= config.walk_radius_m)
        if can_finish:
            final_arr = arr + (dd / config.walk_speed_mps if dd > config.coincidence_m else 0.0)
            fkeys = keys + (("w:dest",) if dd > config.coincidence_m else ())
            cand = (final_arr, buses, walk + (dd if dd > config.coincidence_m else 0.0), fkeys, legs)
            if best is None or cand[:4] < best[:4]:
                best = cand

        # Ride any run that departs from this stop at or after arrival.
        if buses < config.max_bus_segments:
            for vid in sorted(net.runs):
                run = net.runs[vid]
                for bi, st in enumerate(run.stop_times[:-1]):
                    if st.stop_id != sid or st.departure < arr:
                        continue
                    for ai in range(bi + 1, len(run.stop_times)):
                        dst = run.stop_times[ai]
                        leg = _Leg("ride", dst.stop_id, run, bi, ai)
                        _relax(labels, pq, (dst.stop_id, buses + 1, False),
                               float(dst.arrival), buses + 1, walk,
                               keys + (leg.key(),), legs + (leg,))

        # Transfer on foot (never two walks in a row).
        if not last_walk:
            for other_id, other in sorted(net.stops.items()):
                if other_id == sid:
                    continue
                d = haversine_m(net.stops[sid].location, other.location)
                if d > config.walk_radius_m or d <= config.coincidence_m:
                    continue
                leg = _Leg("walk", other_id)
                _relax(labels, pq, (other_id, buses, True),
                       arr + d / config.walk_speed_mps, buses, walk + d,
                       keys + (leg.key(),), legs + (leg,))

    if best is None:
        return None
    return _assemble(net, origin, destination, depart_after, best[4], config)


def _relax(labels: dict, pq: list, node: tuple, arr: float, buses: int,
           walk: float, keys: tuple, legs: tuple) -> None:
    cost = (arr, walk, keys)
    if node not in labels or cost < labels[node]:
        labels[node] = cost
        heapq.heappush(pq, (arr, buses, walk, keys, node, legs))


def _assemble(net: TransitNetwork, origin: GeoPoint, destination: GeoPoint,
              depart_after: float, legs: tuple, config: PlannerConfig) -> TripPlan:
    segments: list[Segment] = []
    here = origin
    for leg in legs:
        if leg.kind == "walk":
            there = net.stops[leg.target].location
            segments.append(_walk(here, there, config))
            here = there
        else:
            run = leg.run
            b, a = run.stop_times[leg.board], run.stop_times[leg.alight]
            segments.append(BusRideSegment(
                line_id=run.line_id, direction=run.direction, vehicle_id=run.vehicle_id,
                board_stop=b.stop_id, alight_stop=a.stop_id,
                scheduled_board=b.departure, scheduled_alight=a.arrival,
                intermediate_stops=leg.alight - leg.board - 1,
                board_location=net.stops[b.stop_id].location,
                alight_location=net.stops[a.stop_id].location,
            ))
            here = net.stops[a.stop_id].location
    if haversine_m(here, destination) > config.coincidence_m:
        segments.append(_walk(here, destination, config))
    return TripPlan(origin, destination, depart_after, tuple(segments))


def _walk(a: GeoPoint, b: GeoPoint, config: PlannerConfig) -> WalkSegment:
    d = haversine_m(a, b)
    return WalkSegment(Polyline((a, b)), d / config.walk_speed_mps)


def replan(net: TransitNetwork, current_position: GeoPoint, destination: GeoPoint,
           now: float, config: PlannerConfig = DEFAULT_CONFIG) -> Optional[TripPlan]:
    """Fresh plan from wherever the passenger is right now."""
    return plan_trip(net, current_position, destination, now, config)


# --- independent oracle ------------------------------------------------------


def brute_force_oracle(net: TransitNetwork, origin: GeoPoint, destination: GeoPoint,
                       depart_after: float, config: PlannerConfig = DEFAULT_CONFIG
                       ) -> Optional[float]:
    """Earliest arrival by exhaustive enumeration of itineraries.

    Recursion over (stop, time, rides used, walked last); every feasible
    boarding and alighting is tried. Kept deliberately simple and separate
    from plan_trip so the two can check each other.
    """
    if len(net.stops) > 12:
        raise OracleSizeError(f"network too large for oracle: {len(net.stops)} stops")
    per_line: dict[str, int] = {}
    for run in net.runs.values():
        per_line[run.line_id] = per_line.get(run.line_id, 0) + 1
    if per_line and max(per_line.values()) > 4:
        raise OracleSizeError("too many runs per line for oracle")

    if haversine_m(origin, destination) <= config.coincidence_m:
        return depart_after

    best = [math.inf]
    direct = haversine_m(origin, destination)
    if direct <= config.walk_radius_m:
        best[0] = depart_after + direct / config.walk_speed_mps

    seen: dict[tuple[str, int, bool], float] = {}

    def visit(stop_id: str, t: float, rides: int, walked_last: bool) -> None:
        key = (stop_id, rides, walked_last)
        if seen.get(key, math.inf) <= t:
            return
        seen[key] = t
        loc = net.stops[stop_id].location
        dd = haversine_m(loc, destination)
        if dd <= config.coincidence_m:
            best[0] = min(best[0], t)
        elif not walked_last and dd <= config.walk_radius_m:
            best[0] = min(best[0], t + dd / config.walk_speed_mps)
        if rides < config.max_bus_segments:
            for run in net.runs.values():
                for bi, st in enumerate(run.stop_times[:-1]):
                    if st.stop_id != stop_id or st.departure < t:
                        continue
                    for ai in range(bi + 1, len(run.stop_times)):
                        visit(run.stop_times[ai].stop_id,
                              float(run.stop_times[ai].arrival), rides + 1, False)
        if not walked_last:
            for other in net.stops.values():
                if other.stop_id == stop_id:
                    continue
                d = haversine_m(loc, other.location)
                if config.coincidence_m < d <= config.walk_radius_m:
                    visit(other.stop_id, t + d / config.walk_speed_mps, rides, True)

    for stop in net.stops.values():
        d = haversine_m(origin, stop.location)
        if d <= config.coincidence_m:
            visit(stop.stop_id, depart_after, 0, False)
        elif d <= config.walk_radius_m:
            visit(stop.stop_id, depart_after + d / config.walk_speed_mps, 0, True)

    return None if math.isinf(best[0]) else best[0]


def plan_payload(plan: TripPlan) -> dict:
    """Wire/file representation of a plan (stable field names)."""
    segs: list[dict] = []
    for seg in plan.segments:
        if isinstance(seg, WalkSegment):
            segs.append({"kind": "walk", "length_m": round(seg.length_m(), 1),
                         "duration_s": round(seg.est_duration_s, 1),
                         "path": [[round(p.lat, 7), round(p.lon, 7)]
                                  for p in seg.path.waypoints]})
        else:
            segs.append({"kind": "bus", "line": seg.line_id,
                         "direction": seg.direction, "vehicle": seg.vehicle_id,
                         "board_stop": seg.board_stop, "alight_stop": seg.alight_stop,
                         "board_time": seg.scheduled_board,
                         "alight_time": seg.scheduled_alight,
                         "intermediate_stops": seg.intermediate_stops})
    return {"origin": [round(plan.origin.lat, 7), round(plan.origin.lon, 7)],
            "destination": [round(plan.destination.lat, 7),
                            round(plan.destination.lon, 7)],
            "departure": plan.planned_departure, "segments": segs,
            "arrival": round(plan.arrival_time(), 1)}


def validate_plan(plan: TripPlan, config: PlannerConfig = DEFAULT_CONFIG) -> None:
    """Raise if a plan violates its structural invariants."""
    segs = plan.segments
    if not segs:
        return
    if haversine_m(segs[0].start, plan.origin) > config.coincidence_m:
        raise ValueError("plan does not start at its origin")
    if haversine_m(segs[-1].end, plan.destination) > config.coincidence_m:
        raise ValueError("plan does not end at its destination")
    for i, (a, b) in enumerate(zip(segs, segs[1:])):
        if haversine_m(a.end, b.start) > config.coincidence_m:
            raise ValueError(f"segments {i} and {i + 1} are not connected")
        if isinstance(a, WalkSegment) and isinstance(b, WalkSegment):
            raise ValueError(f"consecutive walk segments at {i}")
    for seg in segs:
        if isinstance(seg, BusRideSegment) and seg.scheduled_board >= seg.scheduled_alight:
            raise ValueError("bus segment does not move forward in time")
