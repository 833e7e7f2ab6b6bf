"""KML polygon geofences and point containment."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

# relative tolerance for treating a point as lying on an edge
_EDGE_EPS = 1e-12


class MalformedKml(ValueError):
    pass


@dataclass(frozen=True)
class GeofencePolygon:
    """Closed polygon given as ``(lat_deg, lon_deg)`` vertices.

    Closure is implicit: the last vertex connects back to the first.
    """

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        verts = tuple((float(lat), float(lon)) for lat, lon in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise ValueError(f"geofence needs at least 3 vertices, got {len(verts)}")
        if verts[0] == verts[-1]:
            raise ValueError("geofence must not repeat its first vertex at the end")
        for i in range(len(verts) - 1):
            if verts[i] == verts[i + 1]:
                raise ValueError(f"consecutive duplicate vertex at index {i}")

    @classmethod
    def from_vertices(cls, vertices) -> GeofencePolygon:
        """Build a fence, dropping a closing duplicate and repeated vertices."""
        cleaned: list[tuple[float, float]] = []
        for lat, lon in vertices:
            v = (float(lat), float(lon))
            if not cleaned or cleaned[-1] != v:
                cleaned.append(v)
        while len(cleaned) > 1 and cleaned[0] == cleaned[-1]:
            cleaned.pop()
        return cls(tuple(cleaned))

    @classmethod
    def rectangle(cls, south: float, west: float, north: float, east: float) -> GeofencePolygon:
        return cls(((south, west), (south, east), (north, east), (north, west)))

    def contains(self, lat_deg: float, lon_deg: float) -> bool:
        return contains(self, lat_deg, lon_deg)


def contains(fence: GeofencePolygon, lat_deg: float, lon_deg: float) -> bool:
    """Even-odd ray casting in the (lon, lat) plane; edges count as inside.

    Everything is written in differences relative to an edge's first vertex,
    so translating fence and point together does not change the answer.
    """
    x, y = lon_deg, lat_deg
    verts = fence.vertices
    n = len(verts)
    inside = False
    j = n - 1
    for i in range(n):
        yi, xi = verts[i]
        yj, xj = verts[j]
        ex, ey = xj - xi, yj - yi
        px, py = x - xi, y - yi
        cross = ex * py - ey * px
        scale = (abs(ex) + abs(ey)) * (abs(px) + abs(py))
        if abs(cross) <= _EDGE_EPS * scale:
            # collinear: on the edge if within its bounding box
            if min(0.0, ex) <= px <= max(0.0, ex) and min(0.0, ey) <= py <= max(0.0, ey):
                return True
        if (yi > y) != (yj > y):
            if px < ex * py / ey:
                inside = not inside
        j = i
    return inside


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _children(elem: ET.Element, name: str) -> list[ET.Element]:
    return [c for c in elem if _local(c.tag) == name]


def _parse_coordinates(text: str) -> list[tuple[float, float]]:
    out = []
    for token in text.split():
        parts = token.split(",")
        if len(parts) not in (2, 3):
            raise MalformedKml(f"bad coordinate tuple: {token!r}")
        try:
            lon, lat = float(parts[0]), float(parts[1])
        except ValueError:
            raise MalformedKml(f"bad coordinate tuple: {token!r}") from None
        out.append((lat, lon))
    return out


def parse_kml_geofence(kml_text: str) -> GeofencePolygon:
    """Extract the outer ring of the first ``<Polygon>`` in a KML document.

    KML coordinates are ``lon,lat[,alt]``; altitude is discarded and the
    returned vertices are ``(lat, lon)``. Polygons with holes are rejected.
    """
    try:
        root = ET.fromstring(kml_text)
    except ET.ParseError as exc:
        raise MalformedKml(f"invalid XML: {exc}") from None

    polygon = next((e for e in root.iter() if _local(e.tag) == "Polygon"), None)
    if polygon is None:
        raise MalformedKml("no <Polygon> element found")
    if _children(polygon, "innerBoundaryIs"):
        raise MalformedKml("polygons with inner boundaries (holes) are not supported")
    outer = _children(polygon, "outerBoundaryIs")
    if not outer:
        raise MalformedKml("<Polygon> has no <outerBoundaryIs>")
    coords = next((e for e in outer[0].iter() if _local(e.tag) == "coordinates"), None)
    if coords is None or not (coords.text or "").strip():
        raise MalformedKml("<outerBoundaryIs> has no coordinates")

    try:
        return GeofencePolygon.from_vertices(_parse_coordinates(coords.text))
    except ValueError as exc:
        if isinstance(exc, MalformedKml):
            raise
        raise MalformedKml(str(exc)) from None


def load_kml(path: str | Path) -> GeofencePolygon:
    return parse_kml_geofence(Path(path).read_text(encoding="utf-8"))
