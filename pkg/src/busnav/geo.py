"""Geographic primitives: WGS84 points, polylines, and metric helpers.

All distances are meters on a spherical earth. City-scale geometry
(point-to-segment distance, stepping toward a target) is computed in a
local equirectangular frame, which is accurate to well under 0.1% at the
few-kilometre scale this package works at.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True, order=True)
class GeoPoint:
    """A WGS84 coordinate. lat in [-90, 90], lon in [-180, 180]."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat!r}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon!r}")


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance between two points, in meters."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def to_local_xy(origin: GeoPoint, p: GeoPoint) -> tuple[float, float]:
    """Project p into a meters frame centered at origin (x east, y north)."""
    x = math.radians(p.lon - origin.lon) * EARTH_RADIUS_M * math.cos(math.radians(origin.lat))
    y = math.radians(p.lat - origin.lat) * EARTH_RADIUS_M
    return x, y


def from_local_xy(origin: GeoPoint, x: float, y: float) -> GeoPoint:
    lat = origin.lat + math.degrees(y / EARTH_RADIUS_M)
    lon = origin.lon + math.degrees(x / (EARTH_RADIUS_M * math.cos(math.radians(origin.lat))))
    return GeoPoint(lat, lon)


def move_toward(p: GeoPoint, target: GeoPoint, dist_m: float) -> GeoPoint:
    """Step dist_m from p toward target; lands exactly on target if closer."""
    x, y = to_local_xy(p, target)
    span = math.hypot(x, y)
    if span <= dist_m or span == 0.0:
        return target
    f = dist_m / span
    return from_local_xy(p, x * f, y * f)


def point_segment_distance_m(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> float:
    """Distance from p to the segment a-b."""
    ax, ay = 0.0, 0.0
    bx, by = to_local_xy(a, b)
    px, py = to_local_xy(a, p)
    seg2 = (bx - ax) ** 2 + (by - ay) ** 2
    if seg2 == 0.0:
        return math.hypot(px, py)
    t = max(0.0, min(1.0, (px * bx + py * by) / seg2))
    return math.hypot(px - t * bx, py - t * by)


@dataclass(frozen=True)
class Polyline:
    """An ordered path of at least two pairwise-distinct consecutive waypoints."""

    waypoints: tuple[GeoPoint, ...]

    def __post_init__(self) -> None:
        if len(self.waypoints) < 2:
            raise ValueError("polyline needs at least 2 waypoints")
        for i, (u, v) in enumerate(zip(self.waypoints, self.waypoints[1:])):
            if haversine_m(u, v) <= 0.0:
                raise ValueError(f"polyline waypoints {i} and {i + 1} coincide")

    @property
    def start(self) -> GeoPoint:
        return self.waypoints[0]

    @property
    def end(self) -> GeoPoint:
        return self.waypoints[-1]

    def length_m(self) -> float:
        return sum(haversine_m(u, v) for u, v in zip(self.waypoints, self.waypoints[1:]))

    def cumulative_m(self) -> list[float]:
        """Distance along the path at each waypoint; starts at 0."""
        acc = [0.0]
        for u, v in zip(self.waypoints, self.waypoints[1:]):
            acc.append(acc[-1] + haversine_m(u, v))
        return acc

    def point_at_m(self, dist: float) -> GeoPoint:
        """Point at distance dist along the path, clamped to the ends."""
        if dist <= 0.0:
            return self.start
        cum = self.cumulative_m()
        if dist >= cum[-1]:
            return self.end
        for i in range(len(cum) - 1):
            if cum[i + 1] >= dist:
                seg = cum[i + 1] - cum[i]
                f = (dist - cum[i]) / seg
                a, b = self.waypoints[i], self.waypoints[i + 1]
                x, y = to_local_xy(a, b)
                return from_local_xy(a, x * f, y * f)
        return self.end

    def distance_to_point_m(self, p: GeoPoint) -> float:
        """Minimum distance from p to any edge of the path."""
        return min(
            point_segment_distance_m(p, a, b)
            for a, b in zip(self.waypoints, self.waypoints[1:])
        )

    def nearest_offset_m(self, p: GeoPoint) -> float:
        """Distance along the path of the point nearest to p."""
        cum = self.cumulative_m()
        best = (float("inf"), 0.0)
        for i, (a, b) in enumerate(zip(self.waypoints, self.waypoints[1:])):
            bx, by = to_local_xy(a, b)
            px, py = to_local_xy(a, p)
            seg2 = bx * bx + by * by
            t = 0.0 if seg2 == 0.0 else max(0.0, min(1.0, (px * bx + py * by) / seg2))
            d = math.hypot(px - t * bx, py - t * by)
            if d < best[0]:
                best = (d, cum[i] + t * (cum[i + 1] - cum[i]))
        return best[1]
