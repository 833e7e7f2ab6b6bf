import math
import random

import pytest

from helpers import BSS, FENCE, LAUNCH, greedy_order, random_convex_scenario, to_geo
from uavsim.geodesy import GeoPoint, destination, distance_3d, haversine_2d
from uavsim.geofence import GeofencePolygon
from uavsim.radio import BaseStation
from uavsim.vehicle import (
    EmptyPlan,
    FenceViolation,
    NavParams,
    Phase,
    Stuck,
    UavState,
    Waypoint,
    autonomous_step,
    fixed_flight,
    fixed_trajectory,
    run_autonomous,
)

R = 6_371_000.0
HOME = GeoPoint(35.72, -78.70, 0.0)
BIG_FENCE = GeofencePolygon.rectangle(35.70, -78.72, 35.74, -78.68)


def north_of(p, meters, alt=None):
    q = GeoPoint(p.lat_deg + math.degrees(meters / R), p.lon_deg, p.alt_m)
    return q if alt is None else q.with_alt(alt)


# --- fixed trajectories ------------------------------------------------------

def test_ascent_six_steps_of_five_meters():
    traj = fixed_trajectory([Waypoint(HOME), Waypoint(north_of(HOME, 100))], v=5, tick_s=1, cruise_alt_m=30)
    alts = [p.alt_m for p in traj[:7]]
    assert alts == [0, 5, 10, 15, 20, 25, 30]
    assert all(p.lat_deg == HOME.lat_deg for p in traj[:7])


def test_straight_segment_uniform_spacing():
    end = north_of(HOME, 100)
    flight = fixed_flight([Waypoint(HOME), Waypoint(end)], v=5, tick_s=1, cruise_alt_m=30)
    leg = [p for p, ph in zip(flight.positions, flight.phases) if ph is Phase.NAVIGATE]
    assert len(leg) == 20
    gaps = [distance_3d(a, b) for a, b in zip([HOME.with_alt(30)] + leg, leg)]
    assert all(g == pytest.approx(5.0, abs=1e-6) for g in gaps)
    assert leg[-1] == end.with_alt(30)


def test_coincident_waypoints_are_a_vertical_spike():
    flight = fixed_flight([Waypoint(HOME), Waypoint(HOME)], v=5, tick_s=1, cruise_alt_m=30)
    assert {(p.lat_deg, p.lon_deg) for p in flight} == {(HOME.lat_deg, HOME.lon_deg)}
    assert [ph.value for ph in flight.phases].count("Navigate") == 0
    assert [p.alt_m for p in flight] == [0, 5, 10, 15, 20, 25, 30, 25, 20, 15, 10, 5, 0]


def test_diagonal_legs_never_exceed_step():
    wps = [Waypoint(HOME), Waypoint(GeoPoint(35.7243, -78.6931)), Waypoint(GeoPoint(35.7212, -78.6987))]
    traj = fixed_trajectory(wps, v=5, tick_s=1)
    gaps = [distance_3d(a, b) for a, b in zip(traj, traj[1:])]
    assert max(gaps) <= 5 + 1e-6


def test_hold_adds_hover_samples():
    end = north_of(HOME, 10)
    base = fixed_trajectory([Waypoint(HOME), Waypoint(end)], v=5)
    held = fixed_trajectory([Waypoint(HOME), Waypoint(end, hold_s=3)], v=5)
    assert len(held) == len(base) + 3


def test_empty_plan():
    with pytest.raises(EmptyPlan):
        fixed_trajectory([Waypoint(HOME)], v=5)


def test_fence_check_opt_in():
    fence = GeofencePolygon.rectangle(35.719, -78.701, 35.7205, -78.699)
    wps = [Waypoint(HOME), Waypoint(north_of(HOME, 500))]
    fixed_flight(wps, v=5)  # unchecked by default
    with pytest.raises(FenceViolation):
        fixed_flight(wps, v=5, fence=fence)


# --- single navigator steps --------------------------------------------------

def cruise_state(pos=None, **kw):
    return UavState(position=(pos or HOME).with_alt(30), speed_mps=10.0, **kw)


def test_step_moves_ten_meters_north():
    bs = BaseStation("N", north_of(HOME, 1000, alt=10))
    state, events = autonomous_step(cruise_state(), [bs], BIG_FENCE, NavParams())
    assert haversine_2d(HOME, state.position) == pytest.approx(10.0, abs=1e-9)
    assert state.position.lon_deg == pytest.approx(HOME.lon_deg, abs=1e-12)
    assert state.position.lat_deg > HOME.lat_deg
    assert state.heading == pytest.approx((1.0, 0.0))
    assert state.elapsed_s == 1.0
    assert [e.kind for e in events] == ["moved"]


@pytest.mark.parametrize("target", [None, "B"])
def test_speed_halves_inside_threshold(target):
    bs = BaseStation("B", north_of(HOME, 80, alt=10))
    state, events = autonomous_step(cruise_state(target=target), [bs], BIG_FENCE, NavParams())
    assert state.speed_mps == 5.0
    assert haversine_2d(HOME, state.position) == pytest.approx(5.0, abs=1e-9)
    assert any(e.kind == "speed_changed" for e in events)


def test_speed_floor():
    bs = BaseStation("B", north_of(HOME, 80, alt=10))
    state = cruise_state(target="B")
    state = UavState(state.position, speed_mps=0.6, target="B")
    state, _ = autonomous_step(state, [bs], BIG_FENCE, NavParams())
    assert state.speed_mps == 0.5


def test_exactly_min_safe_distance_marks_visited_without_moving():
    bs = BaseStation("B", destination(HOME, 0.0, 50.0).with_alt(10))
    d = haversine_2d(HOME, bs.position)
    params = NavParams(d_ms_m=d)
    state, events = autonomous_step(cruise_state(), [bs], BIG_FENCE, params)
    assert state.position == HOME.with_alt(30)
    assert state.visited == ("B",)
    assert "visited" in [e.kind for e in events]


def test_step_rejects_wrong_phase_and_empty_targets():
    bs = BaseStation("B", north_of(HOME, 500, alt=10))
    with pytest.raises(ValueError):
        autonomous_step(UavState(HOME, 10.0, phase=Phase.ASCEND), [bs], BIG_FENCE, NavParams())
    with pytest.raises(ValueError):
        autonomous_step(cruise_state(visited=("B",)), [bs], BIG_FENCE, NavParams())


def test_fence_forces_rotation():
    # north edge 5 m ahead, target far to the north-north-east
    fence = GeofencePolygon.rectangle(35.71, -78.72, north_of(HOME, 5).lat_deg, -78.68)
    bs = BaseStation("B", to_geo((HOME.lat_deg, HOME.lon_deg), 300, 1000, 10))
    state, events = autonomous_step(cruise_state(), [bs], fence, NavParams())
    kinds = [e.kind for e in events]
    assert "rotated" in kinds
    assert fence.contains(state.position.lat_deg, state.position.lon_deg)
    assert haversine_2d(HOME, state.position) == pytest.approx(10.0, abs=1e-9)


def test_stuck_after_three_blocked_ticks():
    fence = GeofencePolygon.rectangle(35.71, -78.72, north_of(HOME, 1).lat_deg, -78.68)
    bs = BaseStation("B", north_of(HOME, 2000, alt=10))
    params = NavParams(theta_set_deg=(1.0,))
    state = cruise_state()
    for _ in range(2):
        state, events = autonomous_step(state, [bs], fence, params)
        assert [e.kind for e in events] == ["blocked"]
        assert state.position == HOME.with_alt(30)
    with pytest.raises(Stuck):
        autonomous_step(state, [bs], fence, params)


def test_stuck_mission_carries_partial_flight():
    fence = GeofencePolygon.rectangle(35.71, -78.72, north_of(HOME, 1).lat_deg, -78.68)
    bs = BaseStation("B", north_of(HOME, 2000, alt=10))
    with pytest.raises(Stuck) as info:
        run_autonomous(HOME, [bs], fence, NavParams(theta_set_deg=(1.0,)))
    partial = info.value.flight
    assert partial is not None and len(partial) == 1 + 3 + 2  # ground, ascent, two hovers
    assert all(fence.contains(p.lat_deg, p.lon_deg) for p in partial)


# --- full missions -----------------------------------------------------------

def test_zero_bs_is_vertical_spike():
    flight = run_autonomous(HOME, [], BIG_FENCE, NavParams())
    assert {(p.lat_deg, p.lon_deg) for p in flight} == {(HOME.lat_deg, HOME.lon_deg)}
    assert set(flight.phases) == {Phase.ASCEND, Phase.LAND}
    assert max(p.alt_m for p in flight) == 30


def test_zero_flight_time_skips_navigation():
    flight = run_autonomous(LAUNCH, BSS, FENCE, NavParams(flight_time_s=0))
    assert Phase.NAVIGATE not in flight.phases
    assert flight.visit_order == []
    assert {(p.lat_deg, p.lon_deg) for p in flight} == {(LAUNCH.lat_deg, LAUNCH.lon_deg)}


def test_budget_limits_navigation():
    flight = run_autonomous(LAUNCH, BSS, FENCE, NavParams(flight_time_s=100))
    nav_ticks = [i for i, ph in enumerate(flight.phases) if ph is Phase.NAVIGATE]
    assert nav_ticks[-1] * 1.0 <= 100
    assert flight.navigate_elapsed_s <= 100
    assert len(flight.visit_order) < 3


def test_four_corner_order_matches_greedy_oracle():
    origin = (HOME.lat_deg, HOME.lon_deg)
    corners = [(-600, -500), (600, -500), (600, 500), (-600, 500)]
    bss = [BaseStation(f"C{i}", to_geo(origin, x, y, 10)) for i, (x, y) in enumerate(corners)]
    launch = to_geo(origin, -450, -300)
    sw, ne = to_geo(origin, -800, -700), to_geo(origin, 800, 700)
    fence = GeofencePolygon.rectangle(sw.lat_deg, sw.lon_deg, ne.lat_deg, ne.lon_deg)
    flight = run_autonomous(launch, bss, fence, NavParams(flight_time_s=5000))
    assert flight.visit_order == greedy_order(launch, bss)
    # C3 sits 1000 m from C0, C1 sits 1200 m away
    assert flight.visit_order == ["C0", "C3", "C2", "C1"]


def test_bs_within_threshold_outside_fence_is_visited_at_the_fence():
    edge = north_of(HOME, 400)
    fence = GeofencePolygon.rectangle(35.71, -78.72, edge.lat_deg, -78.68)
    bs = BaseStation("B", north_of(edge, 70, alt=10))
    flight = run_autonomous(HOME, [bs], fence, NavParams())
    assert flight.visit_order == ["B"]
    assert flight.unreachable == []


def test_far_bs_outside_fence_is_abandoned():
    flight = run_autonomous(LAUNCH, BSS, FENCE, NavParams())
    assert flight.visit_order == ["LW1", "LW2", "LW3"]
    assert flight.unreachable == ["LW4"]


def test_mission_invariants():
    params = NavParams()
    flight = run_autonomous(LAUNCH, BSS, FENCE, params)
    assert all(FENCE.contains(p.lat_deg, p.lon_deg) for p in flight)
    steps = [distance_3d(a, b) for a, b in zip(flight.positions, flight.positions[1:])]
    assert max(steps) <= params.v_max_mps + 1e-6
    visits = [e.bs_id for _, e in flight.events if e.kind == "visited"]
    assert len(visits) == len(set(visits))
    assert flight.phases[0] is Phase.ASCEND and flight.phases[-1] is Phase.LAND
    assert flight[-1] == LAUNCH


def test_deterministic():
    a = run_autonomous(LAUNCH, BSS, FENCE, NavParams())
    b = run_autonomous(LAUNCH, BSS, FENCE, NavParams())
    assert a.positions == b.positions and a.events == b.events


def test_speed_never_increases_near_fixed_target():
    params = NavParams()
    state = UavState(LAUNCH.with_alt(30), params.v_max_mps)
    history = []
    while state.pending(BSS) and len(history) < 2000:
        pos = state.position
        d_min = min(haversine_2d(pos, bs.position) for bs in state.pending(BSS))
        state, _ = autonomous_step(state, BSS, FENCE, params)
        history.append((state.target, d_min, state.speed_mps))
    for (t0, _, v0), (t1, d1, v1) in zip(history, history[1:]):
        if t0 is not None and t0 == t1 and d1 <= params.d_th_m:
            assert v1 <= v0


def test_launch_outside_fence_rejected():
    with pytest.raises(FenceViolation):
        run_autonomous(GeoPoint(36.0, -78.0), BSS, FENCE, NavParams())


def test_nav_params_validation():
    with pytest.raises(ValueError):
        NavParams(d_ms_m=100, d_th_m=100)
    with pytest.raises(ValueError):
        NavParams(theta_set_deg=())
    with pytest.raises(ValueError):
        NavParams(v_max_mps=0)


@pytest.mark.parametrize("seed", range(10))
def test_random_convex_missions_stay_legal(seed):
    launch, bss, fence = random_convex_scenario(random.Random(seed))
    flight = run_autonomous(launch, bss, fence, NavParams())
    assert all(fence.contains(p.lat_deg, p.lon_deg) for p in flight)
    assert max(distance_3d(a, b) for a, b in zip(flight.positions, flight.positions[1:])) <= 10 + 1e-6
    assert set(flight.visit_order) | set(flight.unreachable) <= {b.id for b in bss}
