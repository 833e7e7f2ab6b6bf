"""Scenario JSON loading and validation.

Every problem is raised as :class:`ScenarioError` whose message names the
offending field, so the CLI can report it and exit with the validation code.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .engine import AutonomousPlan, FixedPlan, Scenario
from .geodesy import EarthModel, GeoPoint
from .geofence import GeofencePolygon, MalformedKml, load_kml
from .radio import BaseStation, CqiTable, RadioConfig
from .vehicle import NavParams, Waypoint

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    pass


def _num(obj: dict, key: str, where: str, default: Any = ...) -> float:
    if key not in obj:
        if default is ...:
            raise ScenarioError(f"{where}.{key} is required")
        return default
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ScenarioError(f"{where}.{key} must be a number, got {val!r}")
    return float(val)


def _point(obj: Any, where: str) -> GeoPoint:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where} must be an object with lat_deg/lon_deg/alt_m")
    try:
        return GeoPoint(_num(obj, "lat_deg", where), _num(obj, "lon_deg", where), _num(obj, "alt_m", where, 0.0))
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _fence(obj: Any, base_dir: Path) -> GeofencePolygon | None:
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise ScenarioError("fence must be an object with 'kml_path' or 'vertices'")
    try:
        if "kml_path" in obj:
            path = Path(obj["kml_path"])
            if not path.is_absolute():
                path = base_dir / path
            return load_kml(path)
        if "vertices" in obj:
            return GeofencePolygon.from_vertices(obj["vertices"])
    except OSError as exc:
        raise ScenarioError(f"fence: cannot read KML: {exc}") from None
    except (MalformedKml, ValueError, TypeError) as exc:
        raise ScenarioError(f"fence: {exc}") from None
    raise ScenarioError("fence must have 'kml_path' or 'vertices'")


def _radio(obj: dict) -> RadioConfig:
    kwargs: dict[str, Any] = {}
    for key in ("freq_hz", "noise_dbm", "g_rx_dbi", "bandwidth_mhz"):
        if key in obj:
            kwargs[key] = _num(obj, key, "radio")
    if "cqi_table" in obj:
        rows = obj["cqi_table"]
        if not isinstance(rows, list):
            raise ScenarioError("radio.cqi_table must be an array of {snr_db, efficiency}")
        try:
            kwargs["cqi_table"] = CqiTable.from_pairs(
                (_num(r, "snr_db", f"radio.cqi_table[{i}]"), _num(r, "efficiency", f"radio.cqi_table[{i}]"))
                for i, r in enumerate(rows)
            )
        except ScenarioError:
            raise
        except (ValueError, TypeError) as exc:
            raise ScenarioError(f"radio.cqi_table: {exc}") from None
    try:
        return RadioConfig(**kwargs)
    except ValueError as exc:
        raise ScenarioError(f"radio: {exc}") from None


def _bss(items: Any) -> list[BaseStation]:
    if not isinstance(items, list) or not items:
        raise ScenarioError("bss must be a non-empty array")
    out = []
    for i, b in enumerate(items):
        where = f"bss[{i}]"
        if not isinstance(b, dict) or not isinstance(b.get("id"), str) or not b["id"]:
            raise ScenarioError(f"{where}.id must be a non-empty string")
        out.append(
            BaseStation(
                id=b["id"],
                position=_point(b.get("position"), f"{where}.position"),
                p_tx_dbm=_num(b, "p_tx_dbm", where, 10.0),
                g_tx_dbi=_num(b, "g_tx_dbi", where, 10.0),
                offset_db=_num(b, "offset_db", where, 0.0),
            )
        )
    return out


def _plan(obj: Any):
    if not isinstance(obj, dict):
        raise ScenarioError("plan must be an object")
    kind = obj.get("type")
    cruise = _num(obj, "cruise_alt_m", "plan", 30.0)
    try:
        if kind == "fixed":
            wps = obj.get("waypoints")
            if not isinstance(wps, list):
                raise ScenarioError("plan.waypoints must be an array")
            waypoints = [
                Waypoint(_point(w.get("position", w) if isinstance(w, dict) else w, f"plan.waypoints[{i}]"),
                         _num(w, "hold_s", f"plan.waypoints[{i}]", 0.0))
                for i, w in enumerate(wps)
            ]
            return FixedPlan(
                tuple(waypoints),
                v_f_mps=_num(obj, "v_f_mps", "plan", 5.0),
                cruise_alt_m=cruise,
                fence_check=bool(obj.get("fence_check", False)),
            )
        if kind == "autonomous":
            nav = obj.get("nav", {})
            if not isinstance(nav, dict):
                raise ScenarioError("plan.nav must be an object")
            kwargs: dict[str, Any] = {}
            for key in ("d_th_m", "d_ms_m", "v_max_mps", "alpha_i_s", "flight_time_s", "min_speed_mps"):
                if key in nav:
                    kwargs[key] = _num(nav, key, "plan.nav")
            if "stuck_ticks" in nav:
                kwargs["stuck_ticks"] = int(_num(nav, "stuck_ticks", "plan.nav"))
            if "theta_set_deg" in nav:
                if not isinstance(nav["theta_set_deg"], list):
                    raise ScenarioError("plan.nav.theta_set_deg must be an array")
                kwargs["theta_set_deg"] = tuple(nav["theta_set_deg"])
            return AutonomousPlan(NavParams(**kwargs), cruise_alt_m=cruise)
    except ScenarioError:
        raise
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"plan: {exc}") from None
    raise ScenarioError(f"plan.type must be 'fixed' or 'autonomous', got {kind!r}")


def scenario_from_dict(doc: Any, base_dir: str | Path = ".") -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
    try:
        start = datetime.fromisoformat(str(doc.get("start_time", "2024-01-01T00:00:00+00:00")).replace("Z", "+00:00"))
    except ValueError:
        raise ScenarioError(f"start_time is not ISO-8601: {doc.get('start_time')!r}") from None
    if start.tzinfo is None:
        start = start.replace(tzinfo=timezone.utc)
    earth_doc = doc.get("earth", {})
    try:
        earth = EarthModel(_num(earth_doc, "radius_m", "earth", 6_371_000.0))
        return Scenario(
            name=str(doc.get("name", "scenario")),
            bss=tuple(_bss(doc.get("bss"))),
            plan=_plan(doc.get("plan")),
            launch=_point(doc.get("launch"), "launch"),
            radio=_radio(doc.get("radio", {})),
            fence=_fence(doc.get("fence"), Path(base_dir)),
            earth=earth,
            tick_s=_num(doc, "tick_s", "scenario", 1.0),
            start_time=start,
        )
    except ScenarioError:
        raise
    except (ValueError, TypeError, AttributeError) as exc:
        raise ScenarioError(str(exc)) from None


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from None
    return scenario_from_dict(doc, path.parent)
