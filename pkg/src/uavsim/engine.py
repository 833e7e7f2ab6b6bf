"""Mission runner: builds the trajectory, then logs one radio report per tick."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

from .geodesy import DEFAULT_EARTH, EarthModel, GeoPoint, distance_3d
from .geofence import GeofencePolygon
from .radio import BaseStation, LinkSample, RadioConfig, fspl_db, rsrp_dbm, snr_db, throughput_mbps
from .vehicle import Flight, NavParams, Phase, Stuck, Waypoint, fixed_flight, run_autonomous


@dataclass(frozen=True)
class FixedPlan:
    waypoints: tuple[Waypoint, ...]
    v_f_mps: float = 5.0
    cruise_alt_m: float = 30.0
    fence_check: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "waypoints", tuple(self.waypoints))
        if len(self.waypoints) < 2:
            raise ValueError(f"fixed plan needs at least 2 waypoints, got {len(self.waypoints)}")
        if not self.v_f_mps > 0:
            raise ValueError(f"v_f_mps must be positive: {self.v_f_mps}")


@dataclass(frozen=True)
class AutonomousPlan:
    nav: NavParams = field(default_factory=NavParams)
    cruise_alt_m: float = 30.0


MissionPlan = FixedPlan | AutonomousPlan


@dataclass(frozen=True)
class Scenario:
    name: str
    bss: tuple[BaseStation, ...]
    plan: MissionPlan
    launch: GeoPoint
    radio: RadioConfig = field(default_factory=RadioConfig)
    fence: GeofencePolygon | None = None
    earth: EarthModel = DEFAULT_EARTH
    tick_s: float = 1.0
    start_time: datetime = datetime(2024, 1, 1, tzinfo=timezone.utc)

    def __post_init__(self) -> None:
        object.__setattr__(self, "bss", tuple(self.bss))
        if not self.tick_s > 0:
            raise ValueError(f"tick_s must be positive: {self.tick_s}")
        if not self.bss:
            raise ValueError("scenario needs at least one base station")
        ids = [bs.id for bs in self.bss]
        if len(set(ids)) != len(ids):
            raise ValueError(f"base station ids must be unique: {ids}")
        if self.launch.alt_m != 0:
            raise ValueError(f"launch altitude must be 0, got {self.launch.alt_m}")
        if isinstance(self.plan, AutonomousPlan):
            if self.fence is None:
                raise ValueError("autonomous plan requires a geofence")
            if not self.fence.contains(self.launch.lat_deg, self.launch.lon_deg):
                raise ValueError("launch position is outside the geofence")
            if self.plan.nav.alpha_i_s > self.tick_s:
                raise ValueError("nav.alpha_i_s must not exceed tick_s")

    @property
    def bs_ids(self) -> list[str]:
        return [bs.id for bs in self.bss]


@dataclass(frozen=True)
class LogRecord:
    t: datetime
    position: GeoPoint
    samples: dict[str, LinkSample]
    phase: str = Phase.NAVIGATE.value


class SimulationError(RuntimeError):
    """Run aborted; ``records`` holds everything logged before the failure."""

    def __init__(self, message: str, records: list[LogRecord], tick: int | None = None):
        super().__init__(message)
        self.records = records
        self.tick = tick


def log_report(
    position: GeoPoint,
    bss: Sequence[BaseStation],
    radio: RadioConfig,
    t: datetime,
    earth: EarthModel = DEFAULT_EARTH,
    phase: str = Phase.NAVIGATE.value,
) -> LogRecord:
    """One radio report at ``position`` for every base station."""
    samples = {}
    for bs in bss:
        d = distance_3d(position, bs.position, earth)
        loss = fspl_db(d, radio.freq_hz)
        r = rsrp_dbm(bs, radio, d)
        p_rx = r
        gamma = snr_db(p_rx, radio.noise_dbm)
        samples[bs.id] = LinkSample(d, loss, r, p_rx, gamma, throughput_mbps(gamma, radio))
    return LogRecord(t, position, samples, phase)


def trajectory(scenario: Scenario) -> Flight:
    plan = scenario.plan
    if isinstance(plan, FixedPlan):
        wps = list(plan.waypoints)
        first = wps[0].position
        if (first.lat_deg, first.lon_deg) != (scenario.launch.lat_deg, scenario.launch.lon_deg):
            wps.insert(0, Waypoint(scenario.launch))
        return fixed_flight(
            wps,
            plan.v_f_mps,
            scenario.tick_s,
            plan.cruise_alt_m,
            scenario.earth,
            fence=scenario.fence if plan.fence_check else None,
        )
    return run_autonomous(
        scenario.launch,
        scenario.bss,
        scenario.fence,
        plan.nav,
        scenario.tick_s,
        plan.cruise_alt_m,
        scenario.earth,
    )


def _records_for(scenario: Scenario, flight: Flight) -> list[LogRecord]:
    records: list[LogRecord] = []
    for i, (pos, phase) in enumerate(zip(flight.positions, flight.phases)):
        t = scenario.start_time + timedelta(seconds=i * scenario.tick_s)
        try:
            records.append(log_report(pos, scenario.bss, scenario.radio, t, scenario.earth, phase.value))
        except ValueError as exc:
            raise SimulationError(f"tick {i}: {exc}", records, i) from exc
    return records


def run(scenario: Scenario) -> list[LogRecord]:
    """Simulate the whole mission, one :class:`LogRecord` per trajectory position."""
    try:
        flight = trajectory(scenario)
    except Stuck as exc:
        partial = exc.flight or Flight()
        records = _records_for(scenario, partial)
        raise SimulationError(f"tick {len(partial)}: {exc}", records, len(partial)) from exc
    return _records_for(scenario, flight)
