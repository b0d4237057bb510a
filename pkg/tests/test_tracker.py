import pytest

from busnav.detection import EventKind, RideEvent
from busnav.geo import GeoPoint, Polyline, haversine_m, point_segment_distance_m
from busnav.planner import plan_trip
from busnav.tracker import (DeviationKind, ReplanChoice, Severity, TrackerStatus,
                            TripActivity, current_guidance, on_bus_progress,
                            on_gps, on_ride_event, respond_to_replan,
                            start_tracking)

from conftest import offset


@pytest.fixture
def happy_plan(gridtown):
    origin = offset(gridtown.stops["s_a"].location, -50, 0)
    dest = offset(gridtown.stops["s_d"].location, 0, -50)
    return plan_trip(gridtown, origin, dest, 2.0)


def boarded(vehicle, line, direction, t=0.0):
    return RideEvent(EventKind.BOARDED, vehicle, line, direction, t)


def alighted(vehicle, line, direction, t=0.0):
    return RideEvent(EventKind.ALIGHTED, vehicle, line, direction, t)


def _to_riding(state, gridtown, t=120.0):
    state, _ = on_ride_event(state, boarded("bus-101", "L1", 0), gridtown, t)
    assert state.activity is TripActivity.RIDING_BUS
    return state


# --- start_tracking -----------------------------------------------------------


def test_empty_plan_is_immediately_arrived(gridtown):
    p = GeoPoint(40.752, -73.989)
    plan = plan_trip(gridtown, p, p, 0.0)
    state = start_tracking(plan, 0.0)
    assert state.status is TrackerStatus.ARRIVED
    msgs = current_guidance(state, gridtown)
    assert len(msgs) == 1 and "arrived" in msgs[0].text


def test_three_segment_plan_starts_at_zero(happy_plan):
    state = start_tracking(happy_plan, 2.0)
    assert state.segment_index == 0
    assert state.activity is TripActivity.STARTING_JOURNEY
    assert state.status is TrackerStatus.ON_TRACK


def test_bus_first_plan_starts_arriving_at_stop(gridtown):
    origin = gridtown.stops["s_a"].location
    dest = offset(gridtown.stops["s_d"].location, 0, -50)
    plan = plan_trip(gridtown, origin, dest, 2.0)
    assert type(plan.segments[0]).__name__ == "BusRideSegment"
    state = start_tracking(plan, 2.0)
    assert state.activity is TripActivity.ARRIVING_AT_STOP


# --- on_gps -------------------------------------------------------------------


def test_on_path_fix_reports_remaining_distance(happy_plan, gridtown):
    state = start_tracking(happy_plan, 2.0)
    fix = happy_plan.origin
    state, msgs = on_gps(state, fix, 5.0, net=gridtown)
    assert state.activity is TripActivity.WALKING_TO_STOP
    assert state.status is TrackerStatus.ON_TRACK
    walk = [m for m in msgs if m.severity is Severity.INFO][-1]
    assert walk.payload["distance_m"] == pytest.approx(50, abs=2)


def test_two_far_fixes_raise_off_path(happy_plan, gridtown):
    state = start_tracking(happy_plan, 2.0)
    walk = happy_plan.segments[0]
    far = offset(walk.path.start, 0, -80)           # 80 m south of the path
    d_oracle = min(point_segment_distance_m(far, a, b)
                   for a, b in zip(walk.path.waypoints, walk.path.waypoints[1:]))
    assert d_oracle > 50
    state, m1 = on_gps(state, far, 5.0, net=gridtown)
    assert state.status is TrackerStatus.ON_TRACK   # first strike only
    state, m2 = on_gps(state, far, 10.0, net=gridtown)
    assert state.status is TrackerStatus.DEVIATED
    assert state.deviation.kind is DeviationKind.OFF_PATH
    assert state.pending_replan is not None
    alerts = [m for m in m2 if m.severity is Severity.ALERT]
    assert len(alerts) == 2                          # deviation + prompt
    assert alerts[0].payload["distance_m"] == pytest.approx(d_oracle, abs=2)


def test_intervening_good_fix_resets_off_path_count(happy_plan, gridtown):
    state = start_tracking(happy_plan, 2.0)
    walk = happy_plan.segments[0]
    far = offset(walk.path.start, 0, -80)
    state, _ = on_gps(state, far, 5.0, net=gridtown)
    state, _ = on_gps(state, walk.path.start, 10.0, net=gridtown)
    state, _ = on_gps(state, far, 15.0, net=gridtown)
    assert state.status is TrackerStatus.ON_TRACK


def test_reaching_walk_end_advances_to_arriving(happy_plan, gridtown):
    state = start_tracking(happy_plan, 2.0)
    stop_loc = gridtown.stops["s_a"].location
    state, msgs = on_gps(state, offset(stop_loc, 5, 5), 40.0, net=gridtown)
    assert state.segment_index == 1
    assert state.activity is TripActivity.ARRIVING_AT_STOP
    arr = msgs[-1]
    assert arr.payload["line_id"] == "L1"
    assert arr.payload["exit_stop"] == "s_d"
    assert arr.payload["scheduled_board"] == 112


def test_gps_during_bus_segment_is_silent(happy_plan, gridtown):
    state = start_tracking(happy_plan, 2.0)
    state, _ = on_gps(state, gridtown.stops["s_a"].location, 40.0, net=gridtown)
    state = _to_riding(state, gridtown)
    state, msgs = on_gps(state, gridtown.stops["s_b"].location, 130.0, net=gridtown)
    assert msgs == []
    assert state.last_gps[1] == 130.0


# --- on_ride_event -------------------------------------------------------------


def test_correct_boarding_reports_stops_left(happy_plan, gridtown):
    state = start_tracking(happy_plan, 2.0)
    state, _ = on_gps(state, gridtown.stops["s_a"].location, 40.0, net=gridtown)
    state, msgs = on_ride_event(state, boarded("bus-101", "L1", 0), gridtown, 120.0)
    assert state.activity is TripActivity.RIDING_BUS
    assert state.status is TrackerStatus.ON_TRACK
    assert msgs[0].payload["stops_left"] == 3
    assert msgs[0].severity is Severity.INFO


def test_wrong_bus_boarding_raises_alert_and_prompt(happy_plan, gridtown):
    state = start_tracking(happy_plan, 2.0)
    state, _ = on_gps(state, gridtown.stops["s_a"].location, 40.0, net=gridtown)
    state, msgs = on_ride_event(state, boarded("bus-201", "L2", 0), gridtown, 120.0)
    assert state.status is TrackerStatus.DEVIATED
    assert state.deviation.kind is DeviationKind.WRONG_BUS
    assert state.pending_replan is not None
    alerts = [m for m in msgs if m.severity is Severity.ALERT]
    assert len(alerts) == 2
    assert alerts[0].payload["observed_line"] == "L2"


def test_wrong_direction_same_line_is_wrong_bus(happy_plan, gridtown):
    state = start_tracking(happy_plan, 2.0)
    state, _ = on_gps(state, gridtown.stops["s_a"].location, 40.0, net=gridtown)
    state, _ = on_ride_event(state, boarded("bus-103", "L1", 1), gridtown, 120.0)
    assert state.deviation.kind is DeviationKind.WRONG_BUS


def test_boarding_during_walk_to_matching_bus_advances(happy_plan, gridtown):
    # GPS never confirmed stop arrival, but the right bus was boarded
    state = start_tracking(happy_plan, 2.0)
    state, _ = on_gps(state, offset(gridtown.stops["s_a"].location, -40, 0),
                      30.0, net=gridtown)
    assert state.activity is TripActivity.WALKING_TO_STOP
    state, msgs = on_ride_event(state, boarded("bus-101", "L1", 0), gridtown, 110.0)
    assert state.activity is TripActivity.RIDING_BUS
    assert state.status is TrackerStatus.ON_TRACK


def test_alighting_at_planned_exit_completes_segment(happy_plan, gridtown):
    state = start_tracking(happy_plan, 2.0)
    state, _ = on_gps(state, gridtown.stops["s_a"].location, 40.0, net=gridtown)
    state = _to_riding(state, gridtown)
    state, _ = on_gps(state, gridtown.stops["s_d"].location, 185.0, net=gridtown)
    state, msgs = on_ride_event(state, alighted("bus-101", "L1", 0), gridtown, 190.0)
    assert state.segment_index == 2
    assert state.activity is TripActivity.WALKING_TO_DESTINATION
    assert any(m.activity is TripActivity.DEPARTING_BUS for m in msgs)


def test_alighting_elsewhere_raises_deviation(happy_plan, gridtown):
    state = start_tracking(happy_plan, 2.0)
    state, _ = on_gps(state, gridtown.stops["s_a"].location, 40.0, net=gridtown)
    state = _to_riding(state, gridtown)
    state, _ = on_gps(state, gridtown.stops["s_b"].location, 140.0, net=gridtown)
    state, msgs = on_ride_event(state, alighted("bus-101", "L1", 0), gridtown, 145.0)
    assert state.status is TrackerStatus.DEVIATED
    assert state.deviation.kind is DeviationKind.MISSED_STOP
    assert state.deviation.detail["alighted_at"] == "s_b"
    assert state.pending_replan is not None


def test_unknown_vehicle_event_is_an_error(happy_plan, gridtown):
    state = start_tracking(happy_plan, 2.0)
    with pytest.raises(Exception, match="unknown vehicle"):
        on_ride_event(state, boarded("ghost", "L1", 0), gridtown, 5.0)


# --- on_bus_progress ------------------------------------------------------------


def _six_stop_net():
    from busnav.network import build_network

    stops = [{"id": f"p{i}", "name": f"P{i}", "lat": 40.75 + 0.0014 * i,
              "lon": -73.99} for i in range(6)]
    seq = [s["id"] for s in stops]
    shape = [[s["lat"], s["lon"]] for s in stops]
    times = []
    t = 100
    for sid in seq:
        times.append([sid, t, t + 12])
        t += 24
    return build_network({
        "bus_ssid": "SixNet", "stops": stops,
        "lines": [{"id": "P", "directions": [
            {"direction": 0, "stops": seq, "shape": shape},
            {"direction": 1, "stops": list(reversed(seq)),
             "shape": list(reversed(shape))},
        ]}],
        "vehicle_runs": [{"vehicle": "pv1", "bssid": "02:0f:00:00:00:01",
                          "line": "P", "direction": 0, "stop_times": times}],
    })


def _riding_six(net, exit_stop="p4"):
    origin = net.stops["p0"].location
    dest = net.stops[exit_stop].location
    plan = plan_trip(net, origin, dest, 0.0)
    ride = plan.segments[0]
    assert ride.alight_stop == exit_stop
    state = start_tracking(plan, 0.0)
    state, _ = on_gps(state, origin, 1.0, net=net)
    state, _ = on_ride_event(state, boarded("pv1", "P", 0), net, 100.0)
    return state


def test_stops_left_arithmetic():
    net = _six_stop_net()
    state = _riding_six(net)                      # exit index 4
    state, msgs = on_bus_progress(state, "p2", net)
    assert state.stops_left == 3
    assert msgs[0].severity is Severity.INFO
    assert msgs[0].payload["stops_left"] == 3


def test_leave_soon_fires_once_at_one_stop_left():
    net = _six_stop_net()
    state = _riding_six(net)
    state, msgs = on_bus_progress(state, "p4", net)
    assert [m.severity for m in msgs] == [Severity.ALERT]
    assert "Leave the bus" in msgs[0].text
    state, again = on_bus_progress(state, "p4", net)
    assert [m.severity for m in again] == [Severity.INFO]   # only once per ride


def test_missed_stop_raised_exactly_past_exit():
    """Brute force over every next-stop position of the six-stop pattern."""
    net = _six_stop_net()
    for idx in range(6):
        state = _riding_six(net)                  # exit index 4
        state, msgs = on_bus_progress(state, f"p{idx}", net)
        if idx > 4:
            assert state.status is TrackerStatus.DEVIATED
            assert state.deviation.kind is DeviationKind.MISSED_STOP
            assert state.pending_replan is not None
        else:
            assert state.status is TrackerStatus.ON_TRACK
            assert state.deviation is None


def test_progress_off_pattern_is_an_error():
    net = _six_stop_net()
    state = _riding_six(net)
    with pytest.raises(Exception, match="not on line"):
        on_bus_progress(state, "nope", net)


def test_progress_requires_riding(happy_plan, gridtown):
    state = start_tracking(happy_plan, 2.0)
    with pytest.raises(ValueError, match="outside a bus ride"):
        on_bus_progress(state, "s_b", gridtown)


# --- respond_to_replan -----------------------------------------------------------


def _deviated_wrong_bus(happy_plan, gridtown):
    state = start_tracking(happy_plan, 2.0)
    state, _ = on_gps(state, gridtown.stops["s_a"].location, 40.0, net=gridtown)
    state, _ = on_ride_event(state, boarded("bus-201", "L2", 0), gridtown, 60.0)
    assert state.pending_replan is not None
    return state


def test_confirm_restarts_on_a_fresh_plan(happy_plan, gridtown):
    state = _deviated_wrong_bus(happy_plan, gridtown)
    state, msgs = respond_to_replan(state, ReplanChoice.CONFIRM, gridtown, 70.0)
    assert state.status is TrackerStatus.ON_TRACK
    assert state.segment_index == 0
    assert state.pending_replan is None
    assert state.plan.planned_departure == 70.0
    assert any("New route" in m.text for m in msgs)


def test_refuse_clears_prompt_keeps_deviation(happy_plan, gridtown):
    state = _deviated_wrong_bus(happy_plan, gridtown)
    state, msgs = respond_to_replan(state, ReplanChoice.REFUSE, gridtown, 70.0)
    assert state.pending_replan is None
    assert state.status is TrackerStatus.DEVIATED
    assert state.deviation is not None


def test_delay_reraises_once_when_still_deviated(happy_plan, gridtown):
    state = _deviated_wrong_bus(happy_plan, gridtown)
    state, _ = respond_to_replan(state, ReplanChoice.DELAY, gridtown, 70.0,
                                 delay_s=60.0)
    assert state.pending_replan is None and state.delay_until == 130.0
    pos = gridtown.stops["s_e"].location
    state, msgs = on_gps(state, pos, 100.0, net=gridtown)
    assert state.pending_replan is None               # not yet
    state, msgs = on_gps(state, pos, 130.0, net=gridtown)
    assert state.pending_replan is not None           # re-raised exactly once
    prompts = [m for m in msgs if "Recalculate" in m.text]
    assert len(prompts) == 1
    state, msgs2 = on_gps(state, pos, 135.0, net=gridtown)
    assert not [m for m in msgs2 if "Recalculate" in m.text]


def test_respond_without_prompt_is_an_error(happy_plan, gridtown):
    state = start_tracking(happy_plan, 2.0)
    with pytest.raises(ValueError, match="no pending"):
        respond_to_replan(state, ReplanChoice.REFUSE, gridtown, 5.0)


# --- current_guidance -------------------------------------------------------------


def test_guidance_is_idempotent(happy_plan, gridtown):
    state = start_tracking(happy_plan, 2.0)
    state, _ = on_gps(state, happy_plan.origin, 5.0, net=gridtown)
    assert current_guidance(state, gridtown) == current_guidance(state, gridtown)


def test_riding_guidance_contains_stops_left(happy_plan, gridtown):
    state = start_tracking(happy_plan, 2.0)
    state, _ = on_gps(state, gridtown.stops["s_a"].location, 40.0, net=gridtown)
    state = _to_riding(state, gridtown)
    state, _ = on_bus_progress(state, "s_b", gridtown)
    msgs = current_guidance(state, gridtown)
    assert msgs[0].payload["stops_left"] == 3


def test_deviated_guidance_has_one_alert_and_one_prompt(happy_plan, gridtown):
    state = _deviated_wrong_bus(happy_plan, gridtown)
    msgs = current_guidance(state, gridtown)
    alerts = [m for m in msgs if m.severity is Severity.ALERT]
    assert len(alerts) == 2
    assert sum(1 for m in alerts if "Recalculate" in m.text) == 1


# --- invariants --------------------------------------------------------------------


def test_segment_index_never_decreases_without_confirm(happy_plan, gridtown):
    state = start_tracking(happy_plan, 2.0)
    seen = [state.segment_index]
    state, _ = on_gps(state, gridtown.stops["s_a"].location, 40.0, net=gridtown)
    seen.append(state.segment_index)
    state = _to_riding(state, gridtown)
    seen.append(state.segment_index)
    state, _ = on_gps(state, gridtown.stops["s_d"].location, 185.0, net=gridtown)
    state, _ = on_ride_event(state, alighted("bus-101", "L1", 0), gridtown, 190.0)
    seen.append(state.segment_index)
    assert seen == sorted(seen)


def test_at_most_one_active_deviation(happy_plan, gridtown):
    state = _deviated_wrong_bus(happy_plan, gridtown)
    first = state.deviation
    # a second wrong-bus boarding while already deviated must not re-raise
    state, msgs = on_ride_event(state, alighted("bus-201", "L2", 0), gridtown, 80.0)
    state, msgs = on_ride_event(state, boarded("bus-103", "L1", 1), gridtown, 90.0)
    assert state.deviation == first
    assert not [m for m in msgs if m.severity is Severity.ALERT]
