"""Deterministic simulated city.

Buses follow their timetables along route shapes; one passenger walks,
waits, boards, and alights; the world synthesizes Wifi scans (log-distance
path loss with static per-transmitter shadowing, an in-vehicle attenuation
profile, a hard range cutoff, and random beacon loss) and noisy GPS fixes.

Vehicle positions are pure functions of the clock and the timetable, so a
given (seed, command stream) always reproduces the same world. The engine
only ever sees scans and GPS fixes, never simulator ground truth.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional

from .detection import ApReading, WifiScan
from .geo import GeoPoint, Polyline, from_local_xy, haversine_m, move_toward
from .network import TransitNetwork, VehicleRun

METERS_PER_DEG_LAT = 111_194.9


@dataclass(frozen=True)
class SimConfig:
    seed: int = 1
    tick_s: float = 1.0
    scan_period_s: float = 5.0
    gps_period_s: float = 5.0
    gps_noise_sigma_m: float = 8.0
    ambient_ap_count: int = 60
    # Probability that an in-range reading is lost to beacon collisions.
    dropout_base: float = 0.015
    # Log-distance path loss: rssi = ref - 10 * exponent * log10(d) + shadow.
    ref_power_dbm: float = -40.0
    ambient_exponent: float = 2.4
    bus_exponent: float = 2.8          # -96 dBm at exactly 100 m
    shadow_sigma_db: float = 3.0       # static per transmitter (slow fading)
    # On-board profile: strongly attenuated despite zero distance.
    inbus_low_dbm: float = -93.0
    inbus_high_dbm: float = -87.0
    inbus_noise_db: float = 2.0        # clipped at two sigmas
    rssi_floor_dbm: float = -96.0
    walk_speed_mps: float = 1.2
    board_radius_m: float = 15.0
    ambient_margin_m: float = 30.0

    def __post_init__(self) -> None:
        for name in ("tick_s", "scan_period_s", "gps_period_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dropout_base <= 1.0:
            raise ValueError("dropout_base must be a probability")


class CommandRejected(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class PassengerCommand:
    kind: str                            # walk_toward | wait | board | alight
    target: Optional[GeoPoint] = None
    vehicle: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in ("walk_toward", "wait", "board", "alight"):
            raise ValueError(f"unknown command kind {self.kind!r}")
        if self.kind == "walk_toward" and self.target is None:
            raise ValueError("walk_toward needs a target")
        if self.kind == "board" and self.vehicle is None:
            raise ValueError("board needs a vehicle")


@dataclass(frozen=True)
class Observation:
    t: float
    kind: str                            # scan | gps | ground_truth
    scan: Optional[WifiScan] = None
    point: Optional[GeoPoint] = None
    data: Optional[dict] = None


@dataclass
class _VehicleState:
    run: VehicleRun
    shape: Polyline
    stop_offsets: list[float]            # distance along shape per stop time
    position: Optional[GeoPoint] = None  # None while off duty
    doors_open: bool = False
    next_stop_index: Optional[int] = None
    shadow_db: float = 0.0


@dataclass
class _Passenger:
    position: GeoPoint
    mode: str = "waiting"                # waiting | walking | onboard
    target: Optional[GeoPoint] = None
    vehicle: Optional[str] = None


class SimWorld:
    """Mutable world; advance with step(). Deterministic for a fixed seed."""

    def __init__(self, net: TransitNetwork, config: SimConfig,
                 passenger_start: GeoPoint, start_clock: float = 0.0):
        self.net = net
        self.config = config
        self.clock = float(start_clock)
        self.rng = random.Random(config.seed)
        self.passenger = _Passenger(position=passenger_start)
        self.vehicles: dict[str, _VehicleState] = {}
        for vid in sorted(net.runs):
            run = net.runs[vid]
            shape = net.pattern(run.line_id, run.direction).shape
            offsets = [shape.nearest_offset_m(net.stops[st.stop_id].location)
                       for st in run.stop_times]
            if any(b <= a for a, b in zip(offsets, offsets[1:])):
                raise ValueError(f"run {vid!r}: stops do not advance along the shape")
            self.vehicles[vid] = _VehicleState(
                run=run, shape=shape, stop_offsets=offsets,
                shadow_db=self.rng.gauss(0.0, config.shadow_sigma_db))
        self.ambient_aps = self._place_ambient_aps()
        self._update_vehicles()

    # --- construction -------------------------------------------------------

    def _place_ambient_aps(self) -> list[tuple[str, str, GeoPoint, float]]:
        pts = [s.location for s in self.net.stops.values()]
        for line in self.net.lines.values():
            for pattern in line.directions:
                pts.extend(pattern.shape.waypoints)
        if not pts:
            pts = [self.passenger.position]
        lat0 = min(p.lat for p in pts)
        lat1 = max(p.lat for p in pts)
        lon0 = min(p.lon for p in pts)
        lon1 = max(p.lon for p in pts)
        m = self.config.ambient_margin_m
        dlat = m / METERS_PER_DEG_LAT
        dlon = m / (METERS_PER_DEG_LAT * math.cos(math.radians((lat0 + lat1) / 2)))
        aps = []
        for i in range(self.config.ambient_ap_count):
            p = GeoPoint(self.rng.uniform(lat0 - dlat, lat1 + dlat),
                         self.rng.uniform(lon0 - dlon, lon1 + dlon))
            bssid = f"a2:00:00:00:{i // 256:02x}:{i % 256:02x}"
            aps.append((bssid, f"ambient-{i:03d}", p, self.rng.gauss(0.0, self.config.shadow_sigma_db)))
        return aps

    # --- vehicle kinematics ---------------------------------------------------

    def _update_vehicles(self) -> None:
        t = self.clock
        for vs in self.vehicles.values():
            sts = vs.run.stop_times
            if t < sts[0].arrival or t > sts[-1].departure:
                vs.position = None
                vs.doors_open = False
                vs.next_stop_index = None
                continue
            vs.position, vs.doors_open, vs.next_stop_index = self._locate(vs, t)

    def _locate(self, vs: _VehicleState, t: float) -> tuple[GeoPoint, bool, Optional[int]]:
        # next_stop_index is the stop currently being served while dwelling,
        # and the stop ahead while driving: it only moves past a stop once
        # the doors have closed and the bus has left it.
        sts = vs.run.stop_times
        for i, st in enumerate(sts):
            if st.arrival <= t <= st.departure:
                return vs.shape.point_at_m(vs.stop_offsets[i]), True, i
            if i + 1 < len(sts) and st.departure < t < sts[i + 1].arrival:
                frac = (t - st.departure) / (sts[i + 1].arrival - st.departure)
                dist = vs.stop_offsets[i] + frac * (vs.stop_offsets[i + 1] - vs.stop_offsets[i])
                return vs.shape.point_at_m(dist), False, i + 1
        return vs.shape.point_at_m(vs.stop_offsets[-1]), False, None

    # --- commands -------------------------------------------------------------

    def validate(self, cmd: PassengerCommand) -> None:
        """Raise CommandRejected if cmd is not executable right now."""
        self._validate(cmd)

    def _validate(self, cmd: PassengerCommand) -> None:
        p = self.passenger
        if cmd.kind == "board":
            if p.mode == "onboard":
                raise CommandRejected("already on board")
            vs = self.vehicles.get(cmd.vehicle)
            if vs is None:
                raise CommandRejected(f"unknown vehicle {cmd.vehicle!r}")
            if vs.position is None:
                raise CommandRejected("vehicle not in service")
            if not vs.doors_open:
                raise CommandRejected("doors closed")
            if haversine_m(p.position, vs.position) > self.config.board_radius_m:
                raise CommandRejected("vehicle not close enough to board")
        elif cmd.kind == "alight":
            if p.mode != "onboard":
                raise CommandRejected("not on board")
            vs = self.vehicles[p.vehicle]
            if not vs.doors_open:
                raise CommandRejected("doors closed")

    def _apply(self, cmd: PassengerCommand) -> Optional[dict]:
        p = self.passenger
        if cmd.kind == "walk_toward":
            p.mode, p.target, p.vehicle = "walking", cmd.target, None
            return None
        if cmd.kind == "wait":
            p.mode, p.target = "waiting", None
            return None
        if cmd.kind == "board":
            p.mode, p.vehicle, p.target = "onboard", cmd.vehicle, None
            p.position = self.vehicles[cmd.vehicle].position
            return {"event": "board", "vehicle": cmd.vehicle}
        vehicle = p.vehicle
        p.mode, p.vehicle = "waiting", None
        return {"event": "alight", "vehicle": vehicle}

    # --- stepping ---------------------------------------------------------------

    def step(self, commands: list[PassengerCommand] = ()) -> list[Observation]:
        """Validate and apply commands, advance one tick, emit observations.

        An invalid command raises CommandRejected before anything changes.
        """
        for cmd in commands:
            self._validate(cmd)
        obs: list[Observation] = []
        for cmd in commands:
            truth = self._apply(cmd)
            if truth is not None:
                obs.append(Observation(self.clock, "ground_truth", data=truth))

        self.clock += self.config.tick_s
        self._update_vehicles()
        p = self.passenger
        if p.mode == "onboard":
            vs = self.vehicles[p.vehicle]
            if vs.position is None:
                # run finished with the passenger aboard: deposited at the terminal
                vehicle = p.vehicle
                p.mode, p.vehicle = "waiting", None
                obs.append(Observation(self.clock, "ground_truth",
                                       data={"event": "alight", "vehicle": vehicle,
                                             "forced": True}))
            else:
                p.position = vs.position
        elif p.mode == "walking" and p.target is not None:
            p.position = move_toward(p.position, p.target,
                                     self.config.walk_speed_mps * self.config.tick_s)
            if p.position == p.target:
                p.mode, p.target = "waiting", None

        if self._due(self.config.scan_period_s):
            obs.append(Observation(self.clock, "scan", scan=self.synth_scan()))
        if self._due(self.config.gps_period_s):
            obs.append(Observation(self.clock, "gps", point=self._gps_fix()))
        return obs

    def _due(self, period: float) -> bool:
        ratio = self.clock / period
        return abs(ratio - round(ratio)) < 1e-9

    # --- sensors -------------------------------------------------------------

    def synth_scan(self) -> WifiScan:
        """One radio scan at the passenger's position."""
        cfg = self.config
        pos = self.passenger.position
        readings: list[ApReading] = []
        for bssid, ssid, p, shadow in self.ambient_aps:
            rssi = self._path_loss(haversine_m(pos, p), cfg.ambient_exponent, shadow)
            self._admit(readings, bssid, ssid, rssi)
        for vid in sorted(self.vehicles):
            vs = self.vehicles[vid]
            if vs.position is None:
                continue
            if self.passenger.mode == "onboard" and self.passenger.vehicle == vid:
                noise = self.rng.gauss(0.0, cfg.inbus_noise_db)
                clip = 2.0 * cfg.inbus_noise_db
                rssi = (self.rng.uniform(cfg.inbus_low_dbm, cfg.inbus_high_dbm)
                        + max(-clip, min(clip, noise)))
            else:
                rssi = self._path_loss(haversine_m(pos, vs.position),
                                       cfg.bus_exponent, vs.shadow_db)
            self._admit(readings, vs.run.bssid, self.net.bus_ssid, rssi)
        return WifiScan(self.clock, tuple(readings))

    def _path_loss(self, d: float, exponent: float, shadow: float) -> float:
        return (self.config.ref_power_dbm
                - 10.0 * exponent * math.log10(max(d, 1.0)) + shadow)

    def _admit(self, readings: list[ApReading], bssid: str, ssid: str,
               rssi: float) -> None:
        if rssi < self.config.rssi_floor_dbm:
            return
        if self.rng.random() < self.config.dropout_base:
            return
        readings.append(ApReading(bssid, ssid, int(round(rssi))))

    def _gps_fix(self) -> GeoPoint:
        sigma = self.config.gps_noise_sigma_m
        dx = self.rng.gauss(0.0, sigma)
        dy = self.rng.gauss(0.0, sigma)
        return from_local_xy(self.passenger.position, dx, dy)

    # --- inspection ------------------------------------------------------------

    def vehicle_snapshot(self) -> list[dict]:
        out = []
        for vid in sorted(self.vehicles):
            vs = self.vehicles[vid]
            if vs.position is None:
                continue
            nxt = (vs.run.stop_times[vs.next_stop_index].stop_id
                   if vs.next_stop_index is not None else None)
            out.append({
                "vehicle": vid, "line": vs.run.line_id, "direction": vs.run.direction,
                "lat": round(vs.position.lat, 7), "lon": round(vs.position.lon, 7),
                "doors_open": vs.doors_open, "next_stop": nxt,
            })
        return out

    def vehicle_next_stop(self, vehicle_id: str) -> Optional[str]:
        vs = self.vehicles.get(vehicle_id)
        if vs is None or vs.position is None or vs.next_stop_index is None:
            return None
        return vs.run.stop_times[vs.next_stop_index].stop_id

    def passenger_snapshot(self) -> dict:
        p = self.passenger
        return {
            "lat": round(p.position.lat, 7), "lon": round(p.position.lon, 7),
            "mode": p.mode, "vehicle": p.vehicle,
        }
