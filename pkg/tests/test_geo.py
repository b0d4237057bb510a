import math
import random

import pytest

from busnav.geo import (GeoPoint, Polyline, haversine_m, move_toward,
                        point_segment_distance_m, to_local_xy)

EARTH_R = 6_371_000.0


def test_haversine_identity():
    p = GeoPoint(40.4168, -3.7038)
    assert haversine_m(p, p) == 0.0


def test_haversine_one_degree_longitude_at_equator():
    # closed form: R * 1 degree in radians
    expected = EARTH_R * math.radians(1.0)
    got = haversine_m(GeoPoint(0, 0), GeoPoint(0, 1))
    assert got == pytest.approx(expected, rel=1e-3)
    assert got == pytest.approx(111_194.9, rel=1e-3)


def test_haversine_latitude_step():
    expected = EARTH_R * math.radians(0.01)
    got = haversine_m(GeoPoint(40.4168, -3.7038), GeoPoint(40.4268, -3.7038))
    assert got == pytest.approx(expected, rel=1e-3)
    assert got == pytest.approx(1111.9, rel=1e-3)


def test_haversine_symmetry_and_triangle_inequality():
    rng = random.Random(1234)
    for _ in range(1000):
        pts = [GeoPoint(rng.uniform(-80, 80), rng.uniform(-179, 179))
               for _ in range(3)]
        a, b, c = pts
        ab, ba = haversine_m(a, b), haversine_m(b, a)
        assert ab == pytest.approx(ba, rel=1e-6, abs=1e-9)
        ac, cb = haversine_m(a, c), haversine_m(c, b)
        assert ab <= ac + cb + max(1e-6 * ab, 1e-9)


def test_geopoint_validation():
    with pytest.raises(ValueError):
        GeoPoint(91, 0)
    with pytest.raises(ValueError):
        GeoPoint(0, -181)


def test_polyline_requires_distinct_consecutive_points():
    p = GeoPoint(40, -73)
    with pytest.raises(ValueError):
        Polyline((p, p))
    with pytest.raises(ValueError):
        Polyline((p,))


def test_polyline_length_and_interpolation():
    a = GeoPoint(40.0, -73.0)
    b = GeoPoint(40.009, -73.0)  # ~1000.8 m north
    line = Polyline((a, b))
    total = line.length_m()
    assert total == pytest.approx(1000.75, rel=1e-3)
    mid = line.point_at_m(total / 2)
    assert haversine_m(a, mid) == pytest.approx(total / 2, rel=1e-6)
    assert line.point_at_m(-5) == a
    assert line.point_at_m(total + 5) == b


def test_move_toward_lands_on_target():
    a = GeoPoint(40.0, -73.0)
    b = GeoPoint(40.001, -73.0)
    stepped = move_toward(a, b, 1e6)
    assert stepped == b
    part = move_toward(a, b, 50.0)
    assert haversine_m(a, part) == pytest.approx(50.0, rel=1e-3)


def _segment_distance_oracle(p, a, b, steps=20000):
    # dense sampling along the segment, in the local frame of a
    bx, by = to_local_xy(a, b)
    px, py = to_local_xy(a, p)
    best = float("inf")
    for i in range(steps + 1):
        t = i / steps
        best = min(best, math.hypot(px - t * bx, py - t * by))
    return best


def test_point_segment_distance_against_sampling_oracle():
    rng = random.Random(99)
    base = GeoPoint(40.75, -73.99)
    for _ in range(50):
        def rnd():
            return GeoPoint(base.lat + rng.uniform(-0.01, 0.01),
                            base.lon + rng.uniform(-0.01, 0.01))

        p, a, b = rnd(), rnd(), rnd()
        fast = point_segment_distance_m(p, a, b)
        slow = _segment_distance_oracle(p, a, b)
        assert fast == pytest.approx(slow, rel=1e-3, abs=0.05)


def test_polyline_distance_picks_nearest_edge():
    # an L-shaped path; the probe sits near the second edge
    a = GeoPoint(40.7500, -73.9900)
    b = GeoPoint(40.7520, -73.9900)
    c = GeoPoint(40.7520, -73.9880)
    line = Polyline((a, b, c))
    probe = GeoPoint(40.75225, -73.9890)
    d = line.distance_to_point_m(probe)
    expected = point_segment_distance_m(probe, b, c)
    assert d == pytest.approx(expected, abs=1e-6)
