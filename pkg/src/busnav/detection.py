"""Wifi-scan bus ride detection.

A two-stage classifier: a coarse speed estimate from the churn of visible
access points feeds a boarding/alighting state machine keyed on the fleet's
shared network name and per-vehicle station ids. The detector names the
exact vehicle being ridden, not just "on a bus".

All functions are pure: replaying a scan stream reproduces the event log
byte for byte.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .network import TransitNetwork, vehicle_for_bssid

log = logging.getLogger(__name__)

# Boarding: a bus AP this strong means the passenger is at the door.
ENTRY_RSSI_DBM = -60
# Exit counting: readings this weak (or missing) count as "not received".
LOW_RSSI_DBM = -90
# Consecutive low/absent detections required before declaring an exit.
EXIT_STRIKES = 3
# Speed classification: AP-set change rate over this window.
SPEED_WINDOW_S = 30.0
FAST_CHANGE_RATE = 0.10
# The change-rate threshold is only calibrated for busy environments.
MIN_APS_FOR_SPEED = 20
# Dwell boarding: the same vehicle kept appearing for more than a minute.
DWELL_WINDOW_S = 60.0
DWELL_MIN_VISIBILITY = 0.5
# Scans older than this are dropped from the detector's ring buffer.
_RETAIN_S = 90.0


@dataclass(frozen=True)
class ApReading:
    bssid: str
    ssid: str
    rssi: int

    def __post_init__(self) -> None:
        if self.rssi > 0:
            raise ValueError(f"rssi must be <= 0 dBm, got {self.rssi}")


@dataclass(frozen=True)
class WifiScan:
    """One radio scan: at most one reading per station id."""

    timestamp: float
    readings: tuple[ApReading, ...]

    def __post_init__(self) -> None:
        ids = [r.bssid for r in self.readings]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate bssid within one scan")

    def bssids(self) -> frozenset[str]:
        return frozenset(r.bssid for r in self.readings)


class SpeedClass(enum.Enum):
    SLOW = "slow"
    FAST = "fast"
    UNKNOWN = "unknown"


class EventKind(enum.Enum):
    BOARDED = "boarded"
    ALIGHTED = "alighted"


@dataclass(frozen=True)
class RideEvent:
    kind: EventKind
    vehicle_id: str
    line_id: str
    direction: int
    timestamp: float


@dataclass(frozen=True)
class _ScanDigest:
    """What the detector retains of a past scan."""

    timestamp: float
    bssids: frozenset[str]
    bus_vehicles: frozenset[str]


@dataclass(frozen=True)
class RideDetectorState:
    """OnFoot or OnBus(vehicle), plus the rolling evidence windows.

    A plain value: detect_step never mutates its input.
    """

    vehicle_id: Optional[str] = None          # None means on foot
    low_counter: int = 0
    window: tuple[_ScanDigest, ...] = ()
    first_seen: tuple[tuple[str, float], ...] = ()   # candidate vehicle -> first sighting

    @property
    def on_bus(self) -> bool:
        return self.vehicle_id is not None

    @staticmethod
    def initial() -> "RideDetectorState":
        return RideDetectorState()


def classify_speed(scans: Iterable[WifiScan | _ScanDigest]) -> SpeedClass:
    """Coarse speed from AP-set churn over a scan window.

    Unknown when the environment is too sparse to calibrate (20 or fewer
    distinct stations seen); otherwise Fast when the mean pairwise
    symmetric-difference-over-union across consecutive scans exceeds 10%.
    """
    sets = [s.bssids() if isinstance(s, WifiScan) else s.bssids for s in scans]
    union: set[str] = set()
    for s in sets:
        union |= s
    if len(union) <= MIN_APS_FOR_SPEED:
        return SpeedClass.UNKNOWN
    rate = change_rate(sets)
    return SpeedClass.FAST if rate > FAST_CHANGE_RATE else SpeedClass.SLOW


def change_rate(sets: list[frozenset[str]] | list[set[str]]) -> float:
    """Mean Jaccard distance between consecutive AP sets; 0 for < 2 scans."""
    pairs = [(a, b) for a, b in zip(sets, sets[1:])]
    if not pairs:
        return 0.0
    total = 0.0
    for a, b in pairs:
        union = a | b
        total += (len(a ^ b) / len(union)) if union else 0.0
    return total / len(pairs)


def bus_readings(scan: WifiScan, net: TransitNetwork) -> list[tuple[str, int]]:
    """Registered fleet readings in a scan as (vehicle_id, rssi), strongest first.

    Readings carrying the fleet ssid but an unregistered station id are
    excluded and logged; they cannot be attributed to a vehicle.
    """
    out: list[tuple[str, int]] = []
    for r in scan.readings:
        if r.ssid != net.bus_ssid:
            continue
        ref = vehicle_for_bssid(net, r.bssid)
        if ref is None:
            log.warning("bus ssid reading from unregistered bssid %s", r.bssid)
            continue
        out.append((ref.vehicle_id, r.rssi))
    out.sort(key=lambda vr: (-vr[1], vr[0]))
    return out


def detect_step(state: RideDetectorState, scan: WifiScan,
                net: TransitNetwork) -> tuple[RideDetectorState, list[RideEvent]]:
    """Advance the detector by one scan; returns the new state and any events."""
    t = scan.timestamp
    if state.window and t <= state.window[-1].timestamp:
        raise ValueError(f"scan timestamp {t} not after last processed "
                         f"{state.window[-1].timestamp}")

    readings = bus_readings(scan, net)
    digest = _ScanDigest(t, scan.bssids(), frozenset(v for v, _ in readings))
    window = tuple(d for d in state.window if t - d.timestamp <= _RETAIN_S) + (digest,)
    speed = classify_speed(d for d in window if t - d.timestamp <= SPEED_WINDOW_S)

    if not state.on_bus:
        first_seen = _update_first_seen(state.first_seen, window, readings, t)
        boarded = _check_boarding(first_seen, window, readings, speed, t)
        if boarded is None:
            return replace(state, window=window, first_seen=first_seen), []
        run = net.runs[boarded]
        event = RideEvent(EventKind.BOARDED, boarded, run.line_id, run.direction, t)
        return RideDetectorState(vehicle_id=boarded, low_counter=0, window=window,
                                 first_seen=()), [event]

    # On board: only the current vehicle's signal matters.
    current = dict(readings).get(state.vehicle_id)
    if current is not None and current >= LOW_RSSI_DBM:
        low = 0
    elif (current is None or current < LOW_RSSI_DBM) and speed is not SpeedClass.FAST:
        low = state.low_counter + 1
    else:
        low = state.low_counter
    if low >= EXIT_STRIKES:
        run = net.runs[state.vehicle_id]
        event = RideEvent(EventKind.ALIGHTED, state.vehicle_id, run.line_id,
                          run.direction, t)
        return RideDetectorState(vehicle_id=None, low_counter=0, window=window,
                                 first_seen=()), [event]
    return replace(state, low_counter=low, window=window), []


def _update_first_seen(first_seen: tuple[tuple[str, float], ...],
                       window: tuple[_ScanDigest, ...],
                       readings: list[tuple[str, int]],
                       t: float) -> tuple[tuple[str, float], ...]:
    recent = [d for d in window if t - d.timestamp <= DWELL_WINDOW_S]
    alive = set()
    for d in recent:
        alive |= d.bus_vehicles
    kept = {v: ts for v, ts in first_seen if v in alive}
    for v, _ in readings:
        kept.setdefault(v, t)
    return tuple(sorted(kept.items()))


def _check_boarding(first_seen: tuple[tuple[str, float], ...],
                    window: tuple[_ScanDigest, ...],
                    readings: list[tuple[str, int]],
                    speed: SpeedClass, t: float) -> Optional[str]:
    # Passenger at the door: one very strong fleet reading suffices.
    if readings and readings[0][1] > ENTRY_RSSI_DBM:
        return readings[0][0]

    # Dwell: the same vehicle stayed around for over a minute.
    recent = [d for d in window if t - d.timestamp <= DWELL_WINDOW_S]
    candidates = []
    for v, seen_at in first_seen:
        if t - seen_at <= DWELL_WINDOW_S:
            continue
        visible = sum(1 for d in recent if v in d.bus_vehicles)
        if recent and visible / len(recent) >= DWELL_MIN_VISIBILITY:
            candidates.append((seen_at, v))
    if candidates:
        candidates.sort()
        return candidates[0][1]

    # Moving fast with a fleet network in sight: already riding.
    if speed is SpeedClass.FAST and readings:
        return readings[0][0]
    return None


def detect_stream(scans: Iterable[WifiScan], net: TransitNetwork,
                  state: Optional[RideDetectorState] = None
                  ) -> tuple[RideDetectorState, list[RideEvent]]:
    """Run the detector over an ordered scan stream."""
    st = state or RideDetectorState.initial()
    events: list[RideEvent] = []
    for scan in scans:
        st, evs = detect_step(st, scan, net)
        events.extend(evs)
    return st, events
