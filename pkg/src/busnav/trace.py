"""Line-delimited trace format shared by the simulator, replay, and service.

One JSON object per line with fields (t, kind, payload); records are
non-decreasing in t. Serialization is canonical (sorted keys, no spaces,
pre-rounded floats) so equal runs produce byte-identical files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Union

from .detection import RideEvent, WifiScan
from .geo import GeoPoint

KINDS = ("scan", "gps", "ride_event", "message", "ground_truth")


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class TraceRecord:
    t: float
    kind: str
    payload: dict

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise TraceError(f"unknown record kind {self.kind!r}")


def _num(t: float) -> Union[int, float]:
    return int(t) if float(t).is_integer() else round(float(t), 3)


def canonical_json(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def record_to_line(rec: TraceRecord) -> str:
    return canonical_json({"t": _num(rec.t), "kind": rec.kind, "payload": rec.payload})


def line_to_record(line: str, lineno: int = 0) -> TraceRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise TraceError(f"line {lineno}: not valid JSON: {e}") from e
    if not isinstance(obj, dict) or not {"t", "kind", "payload"} <= set(obj):
        raise TraceError(f"line {lineno}: record needs t, kind, payload")
    if obj["kind"] not in KINDS:
        raise TraceError(f"line {lineno}: unknown record kind {obj['kind']!r}")
    return TraceRecord(float(obj["t"]), obj["kind"], obj["payload"])


def write_trace(path_or_fh: Union[str, IO[str]], records: Iterable[TraceRecord]) -> None:
    if isinstance(path_or_fh, str):
        with open(path_or_fh, "w", encoding="utf-8") as fh:
            _write(fh, records)
    else:
        _write(path_or_fh, records)


def _write(fh: IO[str], records: Iterable[TraceRecord]) -> None:
    for rec in records:
        fh.write(record_to_line(rec) + "\n")


def read_trace(path_or_fh: Union[str, IO[str]]) -> list[TraceRecord]:
    if isinstance(path_or_fh, str):
        with open(path_or_fh, "r", encoding="utf-8") as fh:
            return _read(fh)
    return _read(path_or_fh)


def _read(fh: IO[str]) -> list[TraceRecord]:
    records: list[TraceRecord] = []
    last_t = float("-inf")
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        rec = line_to_record(line, lineno)
        if rec.t < last_t:
            raise TraceError(f"line {lineno}: timestamp {rec.t} goes backwards")
        last_t = rec.t
        records.append(rec)
    return records


# --- payload builders --------------------------------------------------------


def scan_payload(scan: WifiScan) -> dict:
    return {"readings": [
        {"bssid": r.bssid, "rssi": r.rssi, "ssid": r.ssid}
        for r in sorted(scan.readings, key=lambda r: r.bssid)
    ]}


def scan_from_payload(t: float, payload: dict) -> WifiScan:
    from .detection import ApReading

    return WifiScan(t, tuple(
        ApReading(r["bssid"], r["ssid"], int(r["rssi"]))
        for r in payload.get("readings", [])
    ))


def gps_payload(p: GeoPoint) -> dict:
    return {"lat": round(p.lat, 7), "lon": round(p.lon, 7)}


def ride_event_payload(ev: RideEvent) -> dict:
    return {"event": ev.kind.value, "vehicle": ev.vehicle_id,
            "line": ev.line_id, "direction": ev.direction}
