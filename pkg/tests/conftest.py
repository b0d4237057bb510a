import math
import pathlib
import random

import pytest

from busnav.geo import GeoPoint
from busnav.network import build_network, load_network

FIXTURES = pathlib.Path(__file__).parent / "fixtures"
GOLDEN = pathlib.Path(__file__).parent / "golden"

METERS_PER_DEG_LAT = 111_194.9


@pytest.fixture(scope="session")
def gridtown():
    return load_network(str(FIXTURES / "gridtown.yaml"))


@pytest.fixture(scope="session")
def gridtown_path():
    return str(FIXTURES / "gridtown.yaml")


def scenario_path(name: str) -> str:
    return str(FIXTURES / "scenarios" / f"{name}.yaml")


def golden_path(name: str) -> str:
    return str(GOLDEN / f"{name}.events.jsonl")


def offset(p: GeoPoint, east_m: float, north_m: float) -> GeoPoint:
    lat = p.lat + north_m / METERS_PER_DEG_LAT
    lon = p.lon + east_m / (METERS_PER_DEG_LAT * math.cos(math.radians(p.lat)))
    return GeoPoint(lat, lon)


def random_network(seed: int):
    """A small random but valid network for planner/property testing."""
    rng = random.Random(seed)
    n_stops = rng.randint(4, 12)
    base = GeoPoint(40.0 + rng.random(), -74.0 + rng.random())
    stops = []
    for i in range(n_stops):
        p = offset(base, rng.uniform(0, 1500), rng.uniform(0, 1500))
        stops.append({"id": f"st{i:02d}", "name": f"Stop {i}",
                      "lat": round(p.lat, 7), "lon": round(p.lon, 7)})

    def leg_seconds(a, b):
        pa = GeoPoint(a["lat"], a["lon"])
        pb = GeoPoint(b["lat"], b["lon"])
        from busnav.geo import haversine_m

        return max(10, int(haversine_m(pa, pb) / 10.0) + 1)

    lines = []
    runs = []
    n_lines = rng.randint(1, 3)
    vid = 0
    by_id = {s["id"]: s for s in stops}
    for li in range(n_lines):
        size = rng.randint(2, min(5, n_stops))
        seq = rng.sample([s["id"] for s in stops], size)
        shape_fwd = [[by_id[s]["lat"], by_id[s]["lon"]] for s in seq]
        lines.append({
            "id": f"L{li}",
            "directions": [
                {"direction": 0, "stops": seq, "shape": shape_fwd},
                {"direction": 1, "stops": list(reversed(seq)),
                 "shape": list(reversed(shape_fwd))},
            ],
        })
        for _ in range(rng.randint(1, 4)):
            direction = rng.randint(0, 1)
            order = seq if direction == 0 else list(reversed(seq))
            t = rng.randint(0, 3000)
            stop_times = []
            for k, sid in enumerate(order):
                if k > 0:
                    t += leg_seconds(by_id[order[k - 1]], by_id[sid])
                stop_times.append([sid, t, t + 12])
                t += 12
            runs.append({"vehicle": f"veh{vid:02d}",
                         "bssid": f"02:aa:00:00:{vid // 256:02x}:{vid % 256:02x}",
                         "line": f"L{li}", "direction": direction,
                         "stop_times": stop_times})
            vid += 1

    return build_network({
        "bus_ssid": "TestBusNet",
        "stops": stops,
        "lines": lines,
        "vehicle_runs": runs,
    })


def random_point_near(net, rng: random.Random) -> GeoPoint:
    stop = rng.choice(sorted(net.stops.values(), key=lambda s: s.stop_id))
    return offset(stop.location, rng.uniform(-700, 700), rng.uniform(-700, 700))
