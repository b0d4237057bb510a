"""Static transit network: stops, lines, timetabled vehicle runs, fleet registry.

The network is immutable after loading and safe to share across threads.
It is described by a YAML document (see ``load_network``); the loader
validates every structural invariant and rejects documents that violate
them, naming the offending entity.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import IO, Any, Iterable, Optional, Union

import yaml

from .geo import GeoPoint, Polyline

_BSSID_RE = re.compile(r"^([0-9a-f]{2}:){5}[0-9a-f]{2}$")

_TOP_LEVEL_KEYS = {"bus_ssid", "stops", "lines", "vehicle_runs"}


class NetworkError(ValueError):
    """Raised for malformed or invariant-violating network documents."""


@dataclass(frozen=True)
class Stop:
    stop_id: str
    name: str
    location: GeoPoint


@dataclass(frozen=True)
class RoutePattern:
    """One direction of a line: the stop order plus the street shape driven."""

    line_id: str
    direction: int
    stop_sequence: tuple[str, ...]
    shape: Polyline


@dataclass(frozen=True)
class Line:
    line_id: str
    directions: tuple[RoutePattern, RoutePattern]


@dataclass(frozen=True)
class StopTime:
    stop_id: str
    arrival: int
    departure: int


@dataclass(frozen=True)
class VehicleRun:
    """One scheduled pass of a vehicle over a route pattern.

    The vehicle's access point has a fixed bssid, unique across the fleet.
    """

    vehicle_id: str
    bssid: str
    line_id: str
    direction: int
    stop_times: tuple[StopTime, ...]


@dataclass(frozen=True)
class VehicleRef:
    vehicle_id: str
    line_id: str
    direction: int


@dataclass(frozen=True)
class TransitNetwork:
    bus_ssid: str
    stops: dict[str, Stop]
    lines: dict[str, Line]
    runs: dict[str, VehicleRun]
    bssid_to_vehicle: dict[str, str] = field(default_factory=dict)

    def pattern(self, line_id: str, direction: int) -> RoutePattern:
        line = self.lines.get(line_id)
        if line is None:
            raise NetworkError(f"unknown line {line_id!r}")
        if direction not in (0, 1):
            raise NetworkError(f"direction must be 0 or 1, got {direction!r}")
        return line.directions[direction]

    def stop(self, stop_id: str) -> Stop:
        s = self.stops.get(stop_id)
        if s is None:
            raise NetworkError(f"unknown stop {stop_id!r}")
        return s


def normalize_bssid(raw: str) -> str:
    b = raw.strip().lower()
    if not _BSSID_RE.match(b):
        raise NetworkError(f"invalid bssid {raw!r} (expected aa:bb:cc:dd:ee:ff)")
    return b


def _req(mapping: dict, key: str, where: str) -> Any:
    if key not in mapping:
        raise NetworkError(f"{where}: missing field {key!r}")
    return mapping[key]


def build_network(doc: dict) -> TransitNetwork:
    """Validate a parsed network document and assemble the network."""
    if not isinstance(doc, dict):
        raise NetworkError("network document must be a mapping")
    unknown = set(doc) - _TOP_LEVEL_KEYS
    if unknown:
        raise NetworkError(f"unknown top-level fields: {sorted(unknown)}")

    bus_ssid = _req(doc, "bus_ssid", "document")
    if not isinstance(bus_ssid, str) or not bus_ssid:
        raise NetworkError("bus_ssid must be a non-empty string")

    stops: dict[str, Stop] = {}
    for raw in _req(doc, "stops", "document") or []:
        sid = str(_req(raw, "id", "stop"))
        if sid in stops:
            raise NetworkError(f"duplicate stop id {sid!r}")
        try:
            loc = GeoPoint(float(_req(raw, "lat", f"stop {sid}")), float(_req(raw, "lon", f"stop {sid}")))
        except ValueError as e:
            raise NetworkError(f"stop {sid!r}: {e}") from e
        stops[sid] = Stop(sid, str(_req(raw, "name", f"stop {sid}")), loc)

    lines: dict[str, Line] = {}
    for raw in _req(doc, "lines", "document") or []:
        lid = str(_req(raw, "id", "line"))
        if lid in lines:
            raise NetworkError(f"duplicate line id {lid!r}")
        raw_dirs = _req(raw, "directions", f"line {lid}")
        if not isinstance(raw_dirs, list) or len(raw_dirs) != 2:
            raise NetworkError(f"line {lid!r} must declare exactly 2 directions")
        patterns: list[RoutePattern] = []
        for want_dir, rd in enumerate(raw_dirs):
            d = int(_req(rd, "direction", f"line {lid}"))
            if d != want_dir:
                raise NetworkError(f"line {lid!r}: directions must be listed as 0 then 1")
            seq = [str(s) for s in _req(rd, "stops", f"line {lid} direction {d}")]
            if len(seq) < 2:
                raise NetworkError(f"line {lid!r} direction {d}: needs at least 2 stops")
            if len(set(seq)) != len(seq):
                raise NetworkError(f"line {lid!r} direction {d}: repeated stop in sequence")
            for sid in seq:
                if sid not in stops:
                    raise NetworkError(f"line {lid!r} direction {d}: dangling stop id {sid!r}")
            shape_pts = [GeoPoint(float(p[0]), float(p[1])) for p in _req(rd, "shape", f"line {lid} direction {d}")]
            try:
                shape = Polyline(tuple(shape_pts))
            except ValueError as e:
                raise NetworkError(f"line {lid!r} direction {d}: bad shape: {e}") from e
            patterns.append(RoutePattern(lid, d, tuple(seq), shape))
        lines[lid] = Line(lid, (patterns[0], patterns[1]))

    runs: dict[str, VehicleRun] = {}
    bssid_to_vehicle: dict[str, str] = {}
    for raw in _req(doc, "vehicle_runs", "document") or []:
        vid = str(_req(raw, "vehicle", "vehicle run"))
        if vid in runs:
            raise NetworkError(f"duplicate vehicle id {vid!r}")
        bssid = normalize_bssid(str(_req(raw, "bssid", f"run {vid}")))
        if bssid in bssid_to_vehicle:
            raise NetworkError(f"duplicate bssid {bssid!r} (vehicles {bssid_to_vehicle[bssid]!r} and {vid!r})")
        lid = str(_req(raw, "line", f"run {vid}"))
        if lid not in lines:
            raise NetworkError(f"run {vid!r}: unknown line {lid!r}")
        d = int(_req(raw, "direction", f"run {vid}"))
        if d not in (0, 1):
            raise NetworkError(f"run {vid!r}: direction must be 0 or 1")
        pattern = lines[lid].directions[d]
        sts: list[StopTime] = []
        for entry in _req(raw, "stop_times", f"run {vid}"):
            sid, arr, dep = str(entry[0]), int(entry[1]), int(entry[2])
            if sid not in stops:
                raise NetworkError(f"run {vid!r}: dangling stop id {sid!r}")
            sts.append(StopTime(sid, arr, dep))
        if len(sts) < 2:
            raise NetworkError(f"run {vid!r}: needs at least 2 stop times")
        flat: list[int] = []
        for st in sts:
            flat.extend((st.arrival, st.departure))
        if any(b <= a for a, b in zip(flat, flat[1:])):
            raise NetworkError(f"run {vid!r}: stop_times not strictly increasing")
        run_seq = tuple(st.stop_id for st in sts)
        if not _is_contiguous_subsequence(run_seq, pattern.stop_sequence):
            raise NetworkError(
                f"run {vid!r}: stops do not follow line {lid!r} direction {d} in order"
            )
        runs[vid] = VehicleRun(vid, bssid, lid, d, tuple(sts))
        bssid_to_vehicle[bssid] = vid

    return TransitNetwork(bus_ssid=bus_ssid, stops=stops, lines=lines, runs=runs,
                          bssid_to_vehicle=bssid_to_vehicle)


def _is_contiguous_subsequence(sub: tuple[str, ...], seq: tuple[str, ...]) -> bool:
    n = len(sub)
    return any(seq[i:i + n] == sub for i in range(len(seq) - n + 1))


def load_network(source: Union[str, IO[str]]) -> TransitNetwork:
    """Load a network from a YAML file path or open stream."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            raw = fh.read()
    else:
        raw = source.read()
    try:
        doc = yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise NetworkError(f"cannot parse network document: {e}") from e
    return build_network(doc)


def network_to_doc(net: TransitNetwork) -> dict:
    """Inverse of build_network; round-trips exactly."""
    return {
        "bus_ssid": net.bus_ssid,
        "stops": [
            {"id": s.stop_id, "name": s.name, "lat": s.location.lat, "lon": s.location.lon}
            for s in net.stops.values()
        ],
        "lines": [
            {
                "id": line.line_id,
                "directions": [
                    {
                        "direction": p.direction,
                        "stops": list(p.stop_sequence),
                        "shape": [[w.lat, w.lon] for w in p.shape.waypoints],
                    }
                    for p in line.directions
                ],
            }
            for line in net.lines.values()
        ],
        "vehicle_runs": [
            {
                "vehicle": r.vehicle_id,
                "bssid": r.bssid,
                "line": r.line_id,
                "direction": r.direction,
                "stop_times": [[st.stop_id, st.arrival, st.departure] for st in r.stop_times],
            }
            for r in net.runs.values()
        ],
    }


def save_network(net: TransitNetwork, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(network_to_doc(net), fh, sort_keys=False)


# --- queries ---------------------------------------------------------------


def stops_between(net: TransitNetwork, line_id: str, direction: int,
                  from_stop: str, to_stop: str) -> list[str]:
    """Inclusive slice of the pattern's stop sequence from from_stop to to_stop."""
    pattern = net.pattern(line_id, direction)
    seq = pattern.stop_sequence
    try:
        i = seq.index(from_stop)
    except ValueError:
        raise NetworkError(f"stop {from_stop!r} not on line {line_id!r} direction {direction}")
    try:
        j = seq.index(to_stop)
    except ValueError:
        raise NetworkError(f"stop {to_stop!r} not on line {line_id!r} direction {direction}")
    if j < i:
        raise NetworkError(
            f"stop {to_stop!r} precedes {from_stop!r} on line {line_id!r} direction {direction}"
        )
    return list(seq[i:j + 1])


def next_departures(net: TransitNetwork, stop_id: str, after: float,
                    limit: int) -> list[tuple[str, str, int, int]]:
    """Upcoming boardable departures from a stop, soonest first.

    Returns (vehicle_id, line_id, direction, departure) tuples. A run's
    final stop is excluded (nothing departs from it). No day wraparound.
    """
    net.stop(stop_id)
    found: list[tuple[int, str, str, int]] = []
    for run in net.runs.values():
        for st in run.stop_times[:-1]:
            if st.stop_id == stop_id and st.departure >= after:
                found.append((st.departure, run.vehicle_id, run.line_id, run.direction))
    found.sort()
    return [(v, l, d, dep) for dep, v, l, d in found[:max(0, limit)]]


def vehicle_for_bssid(net: TransitNetwork, bssid: str) -> Optional[VehicleRef]:
    """Resolve a station id to the vehicle it is mounted on, or None."""
    vid = net.bssid_to_vehicle.get(bssid.strip().lower())
    if vid is None:
        return None
    run = net.runs[vid]
    return VehicleRef(vid, run.line_id, run.direction)


def run_stop_index(run: VehicleRun, stop_id: str) -> Optional[int]:
    for i, st in enumerate(run.stop_times):
        if st.stop_id == stop_id:
            return i
    return None


def nearest_stop(net: TransitNetwork, p: GeoPoint) -> Stop:
    """Closest stop to p; ties broken by stop id for determinism."""
    from .geo import haversine_m

    return min(net.stops.values(), key=lambda s: (haversine_m(p, s.location), s.stop_id))
