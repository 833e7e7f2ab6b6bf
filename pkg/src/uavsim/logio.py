"""Simulation log CSV: writer and reader.

Columns are ``t_iso,phase,lat_deg,lon_deg,alt_m`` followed by five columns
per base station in scenario order. Floats use fixed notation with six
decimals; lines end with ``\\n``.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Sequence
from datetime import datetime
from pathlib import Path

from .engine import LogRecord
from .geodesy import GeoPoint
from .radio import LinkSample

BASE_COLUMNS = ("t_iso", "phase", "lat_deg", "lon_deg", "alt_m")
# (column prefix, LinkSample attribute)
BS_COLUMNS = (
    ("dist3d_m_", "distance_3d_m"),
    ("fspl_db_", "fspl_db"),
    ("rsrp_dbm_", "rsrp_dbm"),
    ("snr_db_", "snr_db"),
    ("thr_mbps_", "throughput_mbps"),
)


class LogFormatError(ValueError):
    pass


def _f(x: float) -> str:
    s = f"{x:.6f}"
    return "0.000000" if s == "-0.000000" else s


def header(bs_ids: Sequence[str]) -> list[str]:
    cols = list(BASE_COLUMNS)
    for bs in bs_ids:
        cols.extend(prefix + bs for prefix, _ in BS_COLUMNS)
    return cols


def format_log(records: Sequence[LogRecord], bs_ids: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header(bs_ids))
    for rec in records:
        p = rec.position
        row = [rec.t.isoformat(), rec.phase, _f(p.lat_deg), _f(p.lon_deg), _f(p.alt_m)]
        for bs in bs_ids:
            s = rec.samples[bs]
            row.extend(_f(getattr(s, attr)) for _, attr in BS_COLUMNS)
        w.writerow(row)
    return buf.getvalue()


def write_log(path: str | Path, records: Sequence[LogRecord], bs_ids: Sequence[str]) -> None:
    Path(path).write_bytes(format_log(records, bs_ids).encode("utf-8"))


def bs_ids_from_header(cols: Sequence[str]) -> list[str]:
    if tuple(cols[: len(BASE_COLUMNS)]) != BASE_COLUMNS:
        raise LogFormatError(f"log header must start with {','.join(BASE_COLUMNS)}")
    rest = cols[len(BASE_COLUMNS):]
    if len(rest) % len(BS_COLUMNS):
        raise LogFormatError("per-base-station columns come in groups of five")
    ids = []
    for i in range(0, len(rest), len(BS_COLUMNS)):
        group = rest[i:i + len(BS_COLUMNS)]
        bs = group[0][len(BS_COLUMNS[0][0]):]
        if [prefix + bs for prefix, _ in BS_COLUMNS] != list(group):
            raise LogFormatError(f"malformed column group starting at {group[0]!r}")
        ids.append(bs)
    return ids


def parse_log(text: str) -> tuple[list[LogRecord], list[str]]:
    """Parse a log CSV back into records; p_rx is restored as the RSRP."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise LogFormatError("log file is empty")
    ids = bs_ids_from_header(rows[0])
    if len(rows) < 2:
        raise LogFormatError("log file has a header but no records")
    records = []
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != len(rows[0]):
            raise LogFormatError(f"line {n}: expected {len(rows[0])} fields, got {len(row)}")
        try:
            t = datetime.fromisoformat(row[0])
            pos = GeoPoint(float(row[2]), float(row[3]), float(row[4]))
            vals = [float(v) for v in row[len(BASE_COLUMNS):]]
        except ValueError as exc:
            raise LogFormatError(f"line {n}: {exc}") from None
        samples = {}
        for k, bs in enumerate(ids):
            d, loss, r, snr, thr = vals[k * 5:(k + 1) * 5]
            samples[bs] = LinkSample(d, loss, r, r, snr, thr)
        records.append(LogRecord(t, pos, samples, row[1]))
    return records, ids


def read_log(path: str | Path) -> tuple[list[LogRecord], list[str]]:
    return parse_log(Path(path).read_text(encoding="utf-8"))
