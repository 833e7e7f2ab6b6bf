"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import math
import random

from uavsim.engine import AutonomousPlan, FixedPlan, Scenario
from uavsim.geodesy import EARTH_RADIUS_M, GeoPoint
from uavsim.geofence import GeofencePolygon
from uavsim.radio import BaseStation, RadioConfig
from uavsim.vehicle import NavParams, Waypoint

SITE = (35.7270, -78.6960)

# synthetic stand-in for the four-tower site; LW4 sits ~580 m east of the fence
FENCE = GeofencePolygon.rectangle(35.7225, -78.7026, 35.7315, -78.6894)
LAUNCH = GeoPoint(35.7235, -78.7010, 0.0)
BSS = (
    BaseStation("LW1", GeoPoint(35.7255, -78.6990, 10.0)),
    BaseStation("LW2", GeoPoint(35.7300, -78.6975, 10.0)),
    BaseStation("LW3", GeoPoint(35.7290, -78.6910, 10.0)),
    BaseStation("LW4", GeoPoint(35.7240, -78.6830, 10.0)),
)


def autonomous_scenario(**nav) -> Scenario:
    return Scenario("auto", BSS, AutonomousPlan(NavParams(**nav)), LAUNCH, RadioConfig(), fence=FENCE)


def fixed_scenario() -> Scenario:
    route = [LAUNCH, GeoPoint(35.7255, -78.6995), GeoPoint(35.7295, -78.6975),
             GeoPoint(35.7250, -78.6900), GeoPoint(35.7290, -78.6915), LAUNCH]
    plan = FixedPlan(tuple(Waypoint(p) for p in route), v_f_mps=5.0)
    return Scenario("fixed", BSS, plan, LAUNCH, RadioConfig(), fence=FENCE)


# --- flat-earth helpers (independent of uavsim.geodesy) ---------------------

def to_geo(origin: tuple[float, float], east: float, north: float, alt: float = 0.0) -> GeoPoint:
    lat0, lon0 = origin
    lat = lat0 + math.degrees(north / EARTH_RADIUS_M)
    lon = lon0 + math.degrees(east / (EARTH_RADIUS_M * math.cos(math.radians(lat0))))
    return GeoPoint(lat, lon, alt)


def to_flat(origin: tuple[float, float], p: GeoPoint) -> tuple[float, float]:
    lat0, lon0 = origin
    north = math.radians(p.lat_deg - lat0) * EARTH_RADIUS_M
    east = math.radians(p.lon_deg - lon0) * EARTH_RADIUS_M * math.cos(math.radians(lat0))
    return east, north


def convex_hull(points):
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def inside_convex(hull, p) -> bool:
    """All-half-planes test for a counter-clockwise convex hull (boundary inclusive)."""
    n = len(hull)
    for i in range(n):
        a, b = hull[i], hull[(i + 1) % n]
        if (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) < 0:
            return False
    return True


def random_convex_scenario(rng: random.Random, n_bs: int | None = None, margin_m: float | None = None):
    """Random convex fence (hull of points in an ellipse), launch inside, 2-6 BSs.

    With ``margin_m`` the fence is instead a wide rectangle covering the
    launch and every BS by that margin, so the fence never interferes.
    """
    n_bs = n_bs if n_bs is not None else rng.randint(2, 6)
    origin = (SITE[0] + rng.uniform(-0.05, 0.05), SITE[1] + rng.uniform(-0.05, 0.05))
    if margin_m is None:
        ax, ay = rng.uniform(500, 1500), rng.uniform(500, 1500)
        pts = []
        for _ in range(rng.randint(5, 10)):
            t = rng.uniform(0, 2 * math.pi)
            r = math.sqrt(rng.uniform(0.5, 1.0))
            pts.append((ax * r * math.cos(t), ay * r * math.sin(t)))
        hull = convex_hull(pts)
        while True:
            launch = (rng.uniform(-ax, ax), rng.uniform(-ay, ay))
            if inside_convex(hull, launch):
                break
        bs_xy = [(rng.uniform(-1.3 * ax, 1.3 * ax), rng.uniform(-1.3 * ay, 1.3 * ay)) for _ in range(n_bs)]
        fence = GeofencePolygon.from_vertices(
            [(g.lat_deg, g.lon_deg) for g in (to_geo(origin, x, y) for x, y in hull)]
        )
    else:
        launch = (0.0, 0.0)
        bs_xy = [(rng.uniform(-1500, 1500), rng.uniform(-1500, 1500)) for _ in range(n_bs)]
        xs = [launch[0]] + [b[0] for b in bs_xy]
        ys = [launch[1]] + [b[1] for b in bs_xy]
        sw = to_geo(origin, min(xs) - margin_m, min(ys) - margin_m)
        ne = to_geo(origin, max(xs) + margin_m, max(ys) + margin_m)
        fence = GeofencePolygon.rectangle(sw.lat_deg, sw.lon_deg, ne.lat_deg, ne.lon_deg)
    bss = tuple(BaseStation(f"B{i}", to_geo(origin, x, y, 10.0)) for i, (x, y) in enumerate(bs_xy))
    return to_geo(origin, *launch), bss, fence


def greedy_order(launch: GeoPoint, bss, d_ms: float = 50.0, step: float = 1.0, max_steps: int = 200_000):
    """Brute-force nearest-first pursuit in a flat local frame.

    Each iteration looks at every pending BS, marks the nearest visited if it
    is within ``d_ms``, otherwise moves ``step`` meters straight at it.
    """
    origin = (launch.lat_deg, launch.lon_deg)
    x, y = 0.0, 0.0
    pending = {bs.id: to_flat(origin, bs.position) for bs in bss}
    order = []
    for _ in range(max_steps):
        if not pending:
            return order
        best = min(pending, key=lambda k: (math.hypot(pending[k][0] - x, pending[k][1] - y), list(pending).index(k)))
        bx, by = pending[best]
        d = math.hypot(bx - x, by - y)
        if d <= d_ms:
            order.append(best)
            del pending[best]
            continue
        s = min(step, d)
        x += (bx - x) / d * s
        y += (by - y) / d * s
    raise RuntimeError("greedy oracle did not terminate")
