"""Compare simulated RSRP against an emulation log and fit per-radio offsets."""

from __future__ import annotations

import bisect
import csv
import io
import json
import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

from .engine import LogRecord, Scenario
from .geodesy import DEFAULT_EARTH, EarthModel, GeoPoint, distance_3d

PLOT_KINDS = ("rsrp_vs_time", "rsrp_vs_distance", "throughput_vs_time")
ALIGN_MODES = ("time", "distance")


class NoOverlap(ValueError):
    pass


class InsufficientData(ValueError):
    pass


class MappingError(ValueError):
    pass


@dataclass(frozen=True)
class TracePoint:
    """One row of an RSRP trace: time in seconds, per-BS RSRP and optional 3D distance."""

    t_s: float
    rsrp: dict[str, float]
    dist: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class AlignedPair:
    sim_rsrp_dbm: float
    emu_rsrp_dbm: float
    bs_id: str
    align_key: float


@dataclass(frozen=True)
class BsStats:
    n_pairs: int
    rmse_db: float
    mae_db: float
    bias_db: float
    pearson_r: float | None

    def as_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "rmse_db": self.rmse_db,
            "mae_db": self.mae_db,
            "bias_db": self.bias_db,
            "pearson_r": "n/a" if self.pearson_r is None else self.pearson_r,
        }


@dataclass(frozen=True)
class ComparisonReport:
    per_bs: dict[str, BsStats]
    overall: BsStats | None
    insufficient: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "per_bs": {k: v.as_dict() for k, v in self.per_bs.items()},
            "overall": None if self.overall is None else self.overall.as_dict(),
            "insufficient_data": list(self.insufficient),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=False) + "\n"


def _epoch(t: datetime) -> float:
    if t.tzinfo is None:
        t = t.replace(tzinfo=timezone.utc)
    return t.timestamp()


def trace_from_records(records: Sequence[LogRecord]) -> list[TracePoint]:
    return [
        TracePoint(
            _epoch(r.t),
            {k: s.rsrp_dbm for k, s in r.samples.items()},
            {k: s.distance_3d_m for k, s in r.samples.items()},
        )
        for r in records
    ]


def _as_trace(log) -> list[TracePoint]:
    items = list(log)
    if items and isinstance(items[0], LogRecord):
        return trace_from_records(items)
    return items


# --- emulation adapter -------------------------------------------------------

@dataclass(frozen=True)
class ColumnMap:
    """Which columns of an emulation CSV hold what.

    ``rsrp`` maps BS id to column name. Distances come either from
    ``distance`` columns or are computed from the UAV position columns and
    ``bs_positions``.
    """

    timestamp: str
    rsrp: dict[str, str]
    lat: str | None = None
    lon: str | None = None
    alt: str | None = None
    distance: dict[str, str] = field(default_factory=dict)
    bs_positions: dict[str, GeoPoint] = field(default_factory=dict)
    time_format: str = "iso"  # iso | seconds
    time_offset_s: float = 0.0

    @classmethod
    def from_dict(cls, doc: dict) -> ColumnMap:
        if not isinstance(doc, dict):
            raise MappingError("column map must be a JSON object")
        if not isinstance(doc.get("timestamp"), str):
            raise MappingError("column map needs a 'timestamp' column name")
        rsrp = doc.get("rsrp")
        if not isinstance(rsrp, dict) or not rsrp:
            raise MappingError("column map needs a non-empty 'rsrp' object {bs_id: column}")
        fmt = doc.get("time_format", "iso")
        if fmt not in ("iso", "seconds"):
            raise MappingError(f"time_format must be 'iso' or 'seconds', got {fmt!r}")
        try:
            positions = {
                k: GeoPoint(float(v["lat_deg"]), float(v["lon_deg"]), float(v.get("alt_m", 0.0)))
                for k, v in doc.get("bs_positions", {}).items()
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise MappingError(f"bad bs_positions entry: {exc}") from None
        return cls(
            timestamp=doc["timestamp"],
            rsrp=dict(rsrp),
            lat=doc.get("lat"),
            lon=doc.get("lon"),
            alt=doc.get("alt"),
            distance=dict(doc.get("distance", {})),
            bs_positions=positions,
            time_format=fmt,
            time_offset_s=float(doc.get("time_offset_s", 0.0)),
        )


def load_column_map(path: str | Path) -> ColumnMap:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MappingError(f"cannot read column map: {exc}") from None
    return ColumnMap.from_dict(doc)


def _float_or_nan(s: str) -> float:
    try:
        return float(s)
    except ValueError:
        return math.nan


def parse_emulation_csv(text: str, cmap: ColumnMap, earth: EarthModel = DEFAULT_EARTH) -> list[TracePoint]:
    reader = csv.DictReader(io.StringIO(text))
    cols = reader.fieldnames or []
    needed = [cmap.timestamp, *cmap.rsrp.values(), *cmap.distance.values()]
    if cmap.bs_positions:
        needed += [c for c in (cmap.lat, cmap.lon, cmap.alt) if c]
    missing = [c for c in needed if c not in cols]
    if missing:
        raise MappingError(f"emulation CSV lacks mapped columns: {missing}")
    out = []
    for n, row in enumerate(reader, start=2):
        raw_t = row[cmap.timestamp]
        try:
            if cmap.time_format == "seconds":
                t = float(raw_t)
            else:
                t = _epoch(datetime.fromisoformat(raw_t.replace("Z", "+00:00")))
        except ValueError:
            raise MappingError(f"line {n}: bad timestamp {raw_t!r}") from None
        rsrp = {bs: _float_or_nan(row[c]) for bs, c in cmap.rsrp.items()}
        dist = {bs: _float_or_nan(row[c]) for bs, c in cmap.distance.items()}
        if cmap.bs_positions and cmap.lat and cmap.lon:
            try:
                uav = GeoPoint(float(row[cmap.lat]), float(row[cmap.lon]), float(row[cmap.alt]) if cmap.alt else 0.0)
            except ValueError:
                uav = None
            if uav is not None:
                for bs, p in cmap.bs_positions.items():
                    dist.setdefault(bs, distance_3d(uav, p, earth))
        out.append(TracePoint(t + cmap.time_offset_s, rsrp, dist))
    if not out:
        raise MappingError("emulation CSV has no rows")
    return out


def read_emulation_csv(path: str | Path, cmap: ColumnMap, earth: EarthModel = DEFAULT_EARTH) -> list[TracePoint]:
    return parse_emulation_csv(Path(path).read_text(encoding="utf-8"), cmap, earth)


# --- alignment ---------------------------------------------------------------

def _finite(*xs: float) -> bool:
    return all(math.isfinite(x) for x in xs)


def _align_time(sim: list[TracePoint], emu: list[TracePoint], tol: float) -> list[AlignedPair]:
    emu = sorted(emu, key=lambda p: p.t_s)
    times = [p.t_s for p in emu]
    pairs = []
    for s in sim:
        i = bisect.bisect_left(times, s.t_s)
        best = None
        for j in (i - 1, i):
            if 0 <= j < len(emu):
                dt = abs(emu[j].t_s - s.t_s)
                if best is None or dt < best[0]:
                    best = (dt, emu[j])
        if best is None or best[0] > tol:
            continue
        e = best[1]
        for bs in sorted(set(s.rsrp) & set(e.rsrp)):
            if _finite(s.rsrp[bs], e.rsrp[bs]):
                pairs.append(AlignedPair(s.rsrp[bs], e.rsrp[bs], bs, s.t_s))
    return pairs


def _bucket_means(trace: list[TracePoint], width: float) -> dict[str, dict[int, float]]:
    acc: dict[str, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for p in trace:
        for bs, r in p.rsrp.items():
            d = p.dist.get(bs, math.nan)
            if _finite(r, d):
                acc[bs][math.floor(d / width)].append(r)
    return {bs: {k: math.fsum(v) / len(v) for k, v in b.items()} for bs, b in acc.items()}


def _align_distance(sim: list[TracePoint], emu: list[TracePoint], width: float) -> list[AlignedPair]:
    if not width > 0:
        raise ValueError("distance alignment needs a positive bucket width")
    sb, eb = _bucket_means(sim, width), _bucket_means(emu, width)
    pairs = []
    for bs in sorted(set(sb) & set(eb)):
        for k in sorted(set(sb[bs]) & set(eb[bs])):
            pairs.append(AlignedPair(sb[bs][k], eb[bs][k], bs, (k + 0.5) * width))
    return pairs


def align(sim, emu, mode: str = "time", tolerance: float = 0.5) -> list[AlignedPair]:
    """Pair simulated and emulated RSRP samples.

    ``mode="time"`` joins each simulated sample with the nearest emulated
    timestamp within ``tolerance`` seconds. ``mode="distance"`` buckets both
    logs by 3D distance per BS (bucket width ``tolerance`` meters) and pairs
    bucket means.

    Both ``sim`` and ``emu`` may be lists of :class:`LogRecord` or of
    :class:`TracePoint`.
    """
    mode = mode.removeprefix("by_")
    if mode not in ALIGN_MODES:
        raise ValueError(f"unknown alignment mode {mode!r}")
    s, e = _as_trace(sim), _as_trace(emu)
    if not s or not e:
        raise ValueError("both logs must be non-empty")
    pairs = _align_time(s, e, tolerance) if mode == "time" else _align_distance(s, e, tolerance)
    if not pairs:
        raise NoOverlap(f"no {mode}-aligned pairs within tolerance {tolerance}")
    return pairs


# --- metrics -----------------------------------------------------------------

def _pearson(x: Sequence[float], y: Sequence[float]) -> float | None:
    mx = math.fsum(x) / len(x)
    my = math.fsum(y) / len(y)
    dx = [a - mx for a in x]
    dy = [b - my for b in y]
    sxx = math.fsum(a * a for a in dx)
    syy = math.fsum(b * b for b in dy)
    if sxx == 0.0 or syy == 0.0:
        return None
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def _stats(sim: Sequence[float], emu: Sequence[float]) -> BsStats:
    err = [s - e for s, e in zip(sim, emu)]
    n = len(err)
    rmse = math.sqrt(math.fsum(e * e for e in err) / n)
    mae = math.fsum(abs(e) for e in err) / n
    bias = math.fsum(err) / n
    # guaranteed mathematically; allow for rounding only
    slack = 1e-12 * max(1.0, rmse)
    assert rmse + slack >= mae and mae + slack >= abs(bias), (rmse, mae, bias)
    return BsStats(n, rmse, mae, bias, _pearson(sim, emu))


def _group(pairs: Iterable[AlignedPair]) -> dict[str, list[AlignedPair]]:
    groups: dict[str, list[AlignedPair]] = defaultdict(list)
    for p in pairs:
        groups[p.bs_id].append(p)
    return {k: groups[k] for k in sorted(groups)}


def compare(pairs: Sequence[AlignedPair]) -> ComparisonReport:
    """RMSE, MAE, bias (mean sim - emu) and Pearson r per BS and overall.

    Base stations with fewer than two pairs are listed under ``insufficient``.
    """
    per_bs = {}
    insufficient = []
    for bs, ps in _group(pairs).items():
        if len(ps) < 2:
            insufficient.append(bs)
            continue
        per_bs[bs] = _stats([p.sim_rsrp_dbm for p in ps], [p.emu_rsrp_dbm for p in ps])
    usable = [p for p in pairs if p.bs_id in per_bs]
    overall = _stats([p.sim_rsrp_dbm for p in usable], [p.emu_rsrp_dbm for p in usable]) if usable else None
    return ComparisonReport(per_bs, overall, tuple(insufficient))


def fit_offsets(pairs: Sequence[AlignedPair]) -> dict[str, float]:
    """Least-squares additive offset per BS: mean of (emu - sim)."""
    groups = _group(pairs)
    short = [bs for bs, ps in groups.items() if len(ps) < 2]
    if short or not groups:
        raise InsufficientData(f"need at least 2 pairs per base station: {short or 'no pairs'}")
    return {bs: math.fsum(p.emu_rsrp_dbm - p.sim_rsrp_dbm for p in ps) / len(ps) for bs, ps in groups.items()}


def apply_offsets(scenario: Scenario, offsets: dict[str, float]) -> Scenario:
    """Return a copy of ``scenario`` with fitted offsets added to each BS."""
    bss = tuple(replace(bs, offset_db=bs.offset_db + offsets.get(bs.id, 0.0)) for bs in scenario.bss)
    return replace(scenario, bss=bss)


# --- plot export -------------------------------------------------------------

@dataclass(frozen=True)
class PlotSeries:
    columns: tuple[str, str]
    rows: list[tuple[float, float]]

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        lines += [f"{x:.6f},{y:.6f}" for x, y in self.rows]
        return "\n".join(lines) + "\n"


def export_plot_series(records: Sequence[LogRecord], kind: str) -> dict[str, PlotSeries]:
    """Per-BS (x, y) tables ready for external plotting."""
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {', '.join(PLOT_KINDS)}")
    if not records:
        raise ValueError("log is empty")
    t0 = records[0].t
    out = {}
    for bs in records[0].samples:
        if kind == "rsrp_vs_time":
            rows = [((r.t - t0).total_seconds(), r.samples[bs].rsrp_dbm) for r in records]
            cols = ("t_s", "rsrp_dbm")
        elif kind == "throughput_vs_time":
            rows = [((r.t - t0).total_seconds(), r.samples[bs].throughput_mbps) for r in records]
            cols = ("t_s", "thr_mbps")
        else:
            rows = sorted((r.samples[bs].distance_3d_m, r.samples[bs].rsrp_dbm) for r in records)
            cols = ("dist3d_m", "rsrp_dbm")
        out[bs] = PlotSeries(cols, rows)
    return out


def write_plot_series(series: dict[str, PlotSeries], outdir: str | Path, kind: str) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for bs, s in series.items():
        p = outdir / f"{kind}_{bs}.csv"
        p.write_bytes(s.to_csv().encode("utf-8"))
        paths.append(p)
    return paths
