"""UAV trajectories: fixed waypoint routes and the greedy geofenced navigator.

Both generators emit one position per tick. The navigator advances one tick
per call to :func:`autonomous_step`, which makes it easy to drive from the
engine or to unit-test a single decision.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from enum import Enum

from .geodesy import DEFAULT_EARTH, EarthModel, GeoPoint, destination, haversine_2d, interpolate, local_project
from .geofence import GeofencePolygon
from .radio import BaseStation

DEFAULT_THETA_SET_DEG = tuple(
    [a for k in range(15, 180, 15) for a in (float(k), float(-k))] + [180.0]
)

# guards against ceil() overshooting on values like 20.000000000000004;
# small enough that a step never exceeds v * tick by more than 1e-7 m
_CEIL_SLACK = 1e-9
_LENGTH_SLACK_M = 1e-7


class EmptyPlan(ValueError):
    pass


class FenceViolation(ValueError):
    pass


class Stuck(RuntimeError):
    """Navigator could not find a legal step; ``flight`` holds the partial path."""

    def __init__(self, message: str, flight: Flight | None = None):
        super().__init__(message)
        self.flight = flight


class Phase(str, Enum):
    ASCEND = "Ascend"
    NAVIGATE = "Navigate"
    RETURN = "ReturnToLaunch"
    LAND = "Land"
    DONE = "Done"


@dataclass(frozen=True)
class NavParams:
    d_th_m: float = 100.0
    d_ms_m: float = 50.0
    v_max_mps: float = 10.0
    alpha_i_s: float = 1.0
    theta_set_deg: tuple[float, ...] = DEFAULT_THETA_SET_DEG
    flight_time_s: float = 600.0
    min_speed_mps: float = 0.5
    stuck_ticks: int = 3

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta_set_deg", tuple(float(t) for t in self.theta_set_deg))
        if not 0 < self.d_ms_m < self.d_th_m:
            raise ValueError(f"need 0 < d_ms_m < d_th_m, got d_ms_m={self.d_ms_m}, d_th_m={self.d_th_m}")
        if not self.v_max_mps > 0:
            raise ValueError(f"v_max_mps must be positive: {self.v_max_mps}")
        if not self.alpha_i_s > 0:
            raise ValueError(f"alpha_i_s must be positive: {self.alpha_i_s}")
        if not self.flight_time_s >= 0:
            raise ValueError(f"flight_time_s must be non-negative: {self.flight_time_s}")
        if not self.theta_set_deg:
            raise ValueError("theta_set_deg must not be empty")
        if not 0 < self.min_speed_mps <= self.v_max_mps:
            raise ValueError(f"min_speed_mps must be in (0, v_max_mps]: {self.min_speed_mps}")
        if self.stuck_ticks < 1:
            raise ValueError(f"stuck_ticks must be >= 1: {self.stuck_ticks}")


@dataclass(frozen=True)
class Waypoint:
    position: GeoPoint
    hold_s: float = 0.0

    def __post_init__(self) -> None:
        if not self.hold_s >= 0:
            raise ValueError(f"hold_s must be >= 0: {self.hold_s}")


@dataclass(frozen=True)
class NavEvent:
    kind: str  # moved | rotated | speed_changed | visited | abandoned | blocked
    bs_id: str | None = None
    theta_deg: float | None = None
    speed_mps: float | None = None


@dataclass(frozen=True)
class UavState:
    position: GeoPoint
    speed_mps: float
    heading: tuple[float, float] = (1.0, 0.0)  # unit (north, east)
    visited: tuple[str, ...] = ()
    elapsed_s: float = 0.0
    phase: Phase = Phase.NAVIGATE
    target: str | None = None
    unreachable: tuple[str, ...] = ()
    blocked_ticks: int = 0

    def pending(self, bss: Sequence[BaseStation]) -> list[BaseStation]:
        done = set(self.visited) | set(self.unreachable)
        return [bs for bs in bss if bs.id not in done]


@dataclass
class Flight:
    """A trajectory with per-position phase labels.

    Behaves as a sequence of :class:`GeoPoint`.
    """

    positions: list[GeoPoint] = field(default_factory=list)
    phases: list[Phase] = field(default_factory=list)
    events: list[tuple[int, NavEvent]] = field(default_factory=list)
    visit_order: list[str] = field(default_factory=list)
    unreachable: list[str] = field(default_factory=list)
    navigate_elapsed_s: float = 0.0

    def append(self, pos: GeoPoint, phase: Phase) -> None:
        self.positions.append(pos)
        self.phases.append(phase)

    def __len__(self) -> int:
        return len(self.positions)

    def __iter__(self):
        return iter(self.positions)

    def __getitem__(self, i):
        return self.positions[i]


def _steps(length: float, step: float) -> int:
    if length <= 0:
        return 0
    return max(1, math.ceil((length - _LENGTH_SLACK_M) / step))


def _vertical(flight: Flight, at: GeoPoint, to_alt: float, step: float, phase: Phase) -> None:
    n = _steps(abs(to_alt - at.alt_m), step)
    for k in range(1, n + 1):
        alt = to_alt if k == n else at.alt_m + (to_alt - at.alt_m) * k / n
        flight.append(at.with_alt(alt), phase)


def fixed_flight(
    waypoints: Sequence[Waypoint],
    v: float,
    tick_s: float = 1.0,
    cruise_alt_m: float = 30.0,
    earth: EarthModel = DEFAULT_EARTH,
    fence: GeofencePolygon | None = None,
) -> Flight:
    """Take off at the first waypoint, fly the route at cruise altitude, land at the last.

    Each leg is split into ``ceil(length / (v * tick_s))`` equal great-circle
    steps, so no step is longer than ``v * tick_s``. Altitudes of the
    waypoints set the take-off and landing heights only.
    """
    if len(waypoints) < 2:
        raise EmptyPlan(f"fixed plan needs at least 2 waypoints, got {len(waypoints)}")
    if not v > 0 or not tick_s > 0:
        raise ValueError("speed and tick must be positive")
    step = v * tick_s
    flight = Flight()
    launch = waypoints[0].position
    flight.append(launch, Phase.ASCEND)
    _vertical(flight, launch, cruise_alt_m, step, Phase.ASCEND)

    prev = launch.with_alt(cruise_alt_m)
    holds = [math.ceil(wp.hold_s / tick_s - _CEIL_SLACK) for wp in waypoints]
    flight.positions.extend([prev] * holds[0])
    flight.phases.extend([Phase.NAVIGATE] * holds[0])
    for wp, hold in zip(waypoints[1:], holds[1:]):
        nxt = wp.position.with_alt(cruise_alt_m)
        n = _steps(haversine_2d(prev, nxt, earth), step)
        for k in range(1, n + 1):
            flight.append(nxt if k == n else interpolate(prev, nxt, k / n), Phase.NAVIGATE)
        for _ in range(hold):
            flight.append(nxt, Phase.NAVIGATE)
        prev = nxt

    _vertical(flight, prev, waypoints[-1].position.alt_m, step, Phase.LAND)

    if fence is not None:
        for i, p in enumerate(flight.positions):
            if not fence.contains(p.lat_deg, p.lon_deg):
                raise FenceViolation(f"fixed route leaves the geofence at step {i}")
    return flight


def fixed_trajectory(
    waypoints: Sequence[Waypoint],
    v: float,
    tick_s: float = 1.0,
    cruise_alt_m: float = 30.0,
    earth: EarthModel = DEFAULT_EARTH,
) -> list[GeoPoint]:
    return fixed_flight(waypoints, v, tick_s, cruise_alt_m, earth).positions


def _rotate(heading: tuple[float, float], theta_deg: float) -> tuple[float, float]:
    th = math.radians(theta_deg)
    dn, de = heading
    return dn * math.cos(th) - de * math.sin(th), dn * math.sin(th) + de * math.cos(th)


def _heading_to(origin: GeoPoint, target: GeoPoint, earth: EarthModel) -> tuple[float, float]:
    east, north = local_project(origin, target, earth)
    norm = math.hypot(east, north)
    return north / norm, east / norm


def _try_step(
    pos: GeoPoint,
    heading: tuple[float, float],
    length: float,
    fence: GeofencePolygon,
    thetas: Sequence[float],
    earth: EarthModel,
) -> tuple[GeoPoint, tuple[float, float], float] | None:
    """Step along ``heading``, rotating through ``thetas`` until the result is in the fence.

    Returns (new position, heading used, rotation applied) or None if every
    candidate leaves the fence.
    """
    for theta in (0.0, *thetas):
        dn, de = _rotate(heading, theta) if theta else heading
        cand = destination(pos, math.degrees(math.atan2(de, dn)), length, earth)
        if fence.contains(cand.lat_deg, cand.lon_deg):
            return cand, (dn, de), theta
    return None


def autonomous_step(
    state: UavState,
    bss: Sequence[BaseStation],
    fence: GeofencePolygon,
    params: NavParams,
    earth: EarthModel = DEFAULT_EARTH,
    tick_s: float | None = None,
) -> tuple[UavState, list[NavEvent]]:
    """Advance the navigator by one tick toward the nearest pending base station.

    A base station is marked visited once the UAV is within ``d_ms_m`` of it,
    or when the distance stops shrinking inside ``d_th_m``. If the distance
    stops shrinking outside ``d_th_m`` after a fence-forced rotation, the
    station is given up as unreachable and the navigator retargets.
    """
    if state.phase is not Phase.NAVIGATE:
        raise ValueError(f"autonomous_step needs phase Navigate, got {state.phase.value}")
    pending = state.pending(bss)
    if not pending:
        raise ValueError("no unvisited base station left")
    dt = params.alpha_i_s if tick_s is None else tick_s
    pos = state.position
    events: list[NavEvent] = []

    dists = [haversine_2d(pos, bs.position, earth) for bs in pending]
    d_min = min(dists)
    target = pending[dists.index(d_min)]

    speed = state.speed_mps
    if target.id != state.target:
        speed = params.v_max_mps
    if d_min <= params.d_th_m:
        speed = max(speed / 2.0, params.min_speed_mps)
    if speed != state.speed_mps:
        events.append(NavEvent("speed_changed", target.id, speed_mps=speed))

    visited = state.visited
    unreachable = state.unreachable
    next_target: str | None = target.id
    heading = state.heading
    blocked = 0

    if d_min <= params.d_ms_m:
        visited += (target.id,)
        events.append(NavEvent("visited", target.id))
        next_target = None
        new_pos = pos
    else:
        step = min(speed * params.alpha_i_s, d_min)
        moved = _try_step(pos, _heading_to(pos, target.position, earth), step, fence, params.theta_set_deg, earth)
        if moved is None:
            blocked = state.blocked_ticks + 1
            if blocked >= params.stuck_ticks:
                raise Stuck(f"no legal step toward {target.id} for {blocked} consecutive ticks")
            events.append(NavEvent("blocked", target.id))
            new_pos, theta = pos, None
        else:
            new_pos, heading, theta = moved
            if theta:
                events.append(NavEvent("rotated", target.id, theta_deg=theta))
            events.append(NavEvent("moved", target.id))

        d_new = haversine_2d(new_pos, target.position, earth)
        if d_new >= d_min:
            if d_new < params.d_th_m:
                visited += (target.id,)
                events.append(NavEvent("visited", target.id))
                next_target = None
            elif theta:
                unreachable += (target.id,)
                events.append(NavEvent("abandoned", target.id))
                next_target = None

    new_state = replace(
        state,
        position=new_pos,
        speed_mps=speed,
        heading=heading,
        visited=visited,
        unreachable=unreachable,
        elapsed_s=state.elapsed_s + dt,
        target=next_target,
        blocked_ticks=blocked,
    )
    return new_state, events


def _return_to_launch(
    flight: Flight,
    state: UavState,
    launch: GeoPoint,
    fence: GeofencePolygon,
    params: NavParams,
    earth: EarthModel,
) -> GeoPoint:
    step = params.v_max_mps * params.alpha_i_s
    pos = state.position
    home = launch.with_alt(pos.alt_m)
    d0 = haversine_2d(pos, home, earth)
    budget = 4 * _steps(d0, step) + 100
    blocked = 0
    heading = state.heading
    for _ in range(budget):
        d = haversine_2d(pos, home, earth)
        if d == 0.0:
            return pos
        if d <= step:
            # launch is inside the fence by precondition
            pos = home
        else:
            moved = _try_step(pos, _heading_to(pos, home, earth), step, fence, params.theta_set_deg, earth)
            if moved is None:
                blocked += 1
                if blocked >= params.stuck_ticks:
                    raise Stuck("no legal step on the return leg", flight)
            else:
                blocked = 0
                pos, heading, _ = moved
        flight.append(pos, Phase.RETURN)
    raise Stuck("return leg did not converge", flight)


def run_autonomous(
    launch: GeoPoint,
    bss: Sequence[BaseStation],
    fence: GeofencePolygon,
    params: NavParams,
    tick_s: float = 1.0,
    cruise_alt_m: float = 30.0,
    earth: EarthModel = DEFAULT_EARTH,
) -> Flight:
    """Full autonomous mission: ascend, visit base stations greedily, return and land.

    Navigation stops when every base station is visited or given up, or when
    the next tick would exceed ``params.flight_time_s`` (counted from take-off).
    """
    if not fence.contains(launch.lat_deg, launch.lon_deg):
        raise FenceViolation("launch position is outside the geofence")
    if params.alpha_i_s > tick_s:
        raise ValueError("alpha_i_s must not exceed tick_s (one navigator step per tick)")
    if len({bs.id for bs in bss}) != len(bss):
        raise ValueError("base station ids must be unique")

    v_step = params.v_max_mps * tick_s
    flight = Flight()
    flight.append(launch, Phase.ASCEND)
    _vertical(flight, launch, cruise_alt_m, v_step, Phase.ASCEND)

    state = UavState(
        position=flight.positions[-1],
        speed_mps=params.v_max_mps,
        elapsed_s=(len(flight) - 1) * tick_s,
    )
    try:
        while state.pending(bss) and state.elapsed_s + tick_s <= params.flight_time_s + _CEIL_SLACK:
            state, events = autonomous_step(state, bss, fence, params, earth, tick_s)
            flight.append(state.position, Phase.NAVIGATE)
            tick = len(flight) - 1
            flight.events.extend((tick, ev) for ev in events)
            flight.visit_order = list(state.visited)
            flight.unreachable = list(state.unreachable)
            flight.navigate_elapsed_s = state.elapsed_s
    except Stuck as exc:
        raise Stuck(str(exc), flight) from None

    pos = _return_to_launch(flight, state, launch, fence, params, earth)
    _vertical(flight, pos, launch.alt_m, v_step, Phase.LAND)
    return flight
