"""Spherical-earth distances and a small-area metric projection.

Angles are degrees at every public boundary and radians internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Earth's mean radius in meters
EARTH_RADIUS_M = 6_371_000.0

# equirectangular projection is only trusted this close to its origin
MAX_PROJECTION_SPAN_DEG = 1.0


class ProjectionError(ValueError):
    """Point too far from the projection origin."""


@dataclass(frozen=True)
class GeoPoint:
    lat_deg: float
    lon_deg: float
    alt_m: float = 0.0

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat_deg <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat_deg}")
        if not -180.0 <= self.lon_deg <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon_deg}")
        if not self.alt_m >= 0.0:
            raise ValueError(f"altitude must be >= 0: {self.alt_m}")

    def with_alt(self, alt_m: float) -> GeoPoint:
        return GeoPoint(self.lat_deg, self.lon_deg, alt_m)


@dataclass(frozen=True)
class EarthModel:
    radius_m: float = EARTH_RADIUS_M

    def __post_init__(self) -> None:
        if not self.radius_m > 0.0:
            raise ValueError(f"earth radius must be positive: {self.radius_m}")


DEFAULT_EARTH = EarthModel()


def _wrap_deg(delta: float) -> float:
    """Wrap a longitude difference into [-180, 180)."""
    return (delta + 180.0) % 360.0 - 180.0


def haversine_2d(a: GeoPoint, b: GeoPoint, earth: EarthModel = DEFAULT_EARTH) -> float:
    """Great-circle ground distance in meters between two points."""
    phi_a = math.radians(a.lat_deg)
    phi_b = math.radians(b.lat_deg)
    dphi = phi_b - phi_a
    dlam = math.radians(b.lon_deg - a.lon_deg)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi_a) * math.cos(phi_b) * math.sin(dlam / 2.0) ** 2
    # h can creep past 1 by an ulp for antipodal points
    h = min(1.0, h)
    return 2.0 * earth.radius_m * math.asin(math.sqrt(h))


def distance_3d(a: GeoPoint, b: GeoPoint, earth: EarthModel = DEFAULT_EARTH) -> float:
    """Slant distance combining ground distance and altitude difference."""
    d = haversine_2d(a, b, earth)
    h = b.alt_m - a.alt_m
    return math.hypot(d, h)


def local_project(origin: GeoPoint, p: GeoPoint, earth: EarthModel = DEFAULT_EARTH) -> tuple[float, float]:
    """Project ``p`` onto a flat east/north plane centred on ``origin``.

    Longitude is scaled by the cosine of the mean latitude of the two points,
    which keeps the planar norm within ~1e-6 of the haversine distance inside
    0.1 degrees of the origin.

    Returns:
        (east_m, north_m)

    Raises:
        ProjectionError: if ``p`` is more than one degree from ``origin`` in
            latitude or longitude.
    """
    dlat = p.lat_deg - origin.lat_deg
    dlon = _wrap_deg(p.lon_deg - origin.lon_deg)
    if abs(dlat) > MAX_PROJECTION_SPAN_DEG or abs(dlon) > MAX_PROJECTION_SPAN_DEG:
        raise ProjectionError(
            f"point ({p.lat_deg}, {p.lon_deg}) is more than {MAX_PROJECTION_SPAN_DEG} deg "
            f"from origin ({origin.lat_deg}, {origin.lon_deg})"
        )
    north = earth.radius_m * math.radians(dlat)
    east = earth.radius_m * math.radians(dlon) * math.cos(math.radians(origin.lat_deg + dlat / 2.0))
    return east, north


def local_unproject(
    origin: GeoPoint,
    east_m: float,
    north_m: float,
    earth: EarthModel = DEFAULT_EARTH,
    alt_m: float | None = None,
) -> GeoPoint:
    """Inverse of :func:`local_project`."""
    dlat = math.degrees(north_m / earth.radius_m)
    lat = origin.lat_deg + dlat
    scale = earth.radius_m * math.cos(math.radians(origin.lat_deg + dlat / 2.0))
    lon = origin.lon_deg + math.degrees(east_m / scale)
    lon = _wrap_deg(lon)
    return GeoPoint(lat, lon, origin.alt_m if alt_m is None else alt_m)


def destination(p: GeoPoint, bearing_deg: float, distance_m: float, earth: EarthModel = DEFAULT_EARTH) -> GeoPoint:
    """Point reached by travelling ``distance_m`` along a great circle.

    Bearing is clockwise from north. Altitude is carried over from ``p``.
    """
    delta = distance_m / earth.radius_m
    theta = math.radians(bearing_deg)
    phi1 = math.radians(p.lat_deg)
    lam1 = math.radians(p.lon_deg)
    sin_phi2 = math.sin(phi1) * math.cos(delta) + math.cos(phi1) * math.sin(delta) * math.cos(theta)
    phi2 = math.asin(max(-1.0, min(1.0, sin_phi2)))
    lam2 = lam1 + math.atan2(
        math.sin(theta) * math.sin(delta) * math.cos(phi1),
        math.cos(delta) - math.sin(phi1) * sin_phi2,
    )
    return GeoPoint(math.degrees(phi2), _wrap_deg(math.degrees(lam2)), p.alt_m)


def interpolate(a: GeoPoint, b: GeoPoint, fraction: float) -> GeoPoint:
    """Point at ``fraction`` of the great-circle arc from ``a`` to ``b``.

    Altitude is interpolated linearly. Equal fractions of the arc give equal
    haversine spacing, which is what the fixed-route generator relies on.
    """
    if fraction <= 0.0:
        return a
    if fraction >= 1.0:
        return b
    alt = a.alt_m + (b.alt_m - a.alt_m) * fraction
    phi1, lam1 = math.radians(a.lat_deg), math.radians(a.lon_deg)
    phi2, lam2 = math.radians(b.lat_deg), math.radians(b.lon_deg)
    ang = haversine_2d(a, b, EarthModel(1.0))
    if ang == 0.0:
        return GeoPoint(a.lat_deg, a.lon_deg, alt)
    s = math.sin(ang)
    wa = math.sin((1.0 - fraction) * ang) / s
    wb = math.sin(fraction * ang) / s
    x = wa * math.cos(phi1) * math.cos(lam1) + wb * math.cos(phi2) * math.cos(lam2)
    y = wa * math.cos(phi1) * math.sin(lam1) + wb * math.cos(phi2) * math.sin(lam2)
    z = wa * math.sin(phi1) + wb * math.sin(phi2)
    lat = math.degrees(math.atan2(z, math.hypot(x, y)))
    lon = math.degrees(math.atan2(y, x))
    return GeoPoint(lat, lon, alt)
