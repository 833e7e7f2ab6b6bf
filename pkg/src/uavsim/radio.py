"""LTE downlink link abstraction: free-space loss, RSRP, SNR and CQI throughput."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

from .geodesy import GeoPoint

# FSPL diverges as D -> 0; anything closer than this is a scenario bug
MIN_DIST_M = 1.0

# 3GPP TS 36.213 Table 7.2.3-1 (4-bit CQI), efficiency in bit/s/Hz
LTE_CQI_EFFICIENCY = (
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770,
    1.1758, 1.4766, 1.9141, 2.4063, 2.7305,
    3.3223, 3.9023, 4.5234, 5.1152, 5.5547,
)
LTE_CQI_SNR_DB = (
    -6.7, -4.7, -2.3, 0.2, 2.4,
    4.3, 5.9, 8.1, 10.3, 11.7,
    14.1, 16.3, 18.7, 21.0, 22.7,
)


class DegenerateDistance(ValueError):
    pass


@dataclass(frozen=True)
class CqiRow:
    snr_threshold_db: float
    cqi: int
    efficiency: float


@dataclass(frozen=True)
class CqiTable:
    rows: tuple[CqiRow, ...]

    def __post_init__(self) -> None:
        rows = tuple(self.rows)
        object.__setattr__(self, "rows", rows)
        if len(rows) != 15:
            raise ValueError(f"CQI table needs 15 rows, got {len(rows)}")
        for pos, row in enumerate(rows, start=1):
            if row.cqi != pos:
                raise ValueError(f"CQI index {row.cqi} at row {pos}")
        for prev, cur in zip(rows, rows[1:]):
            if not cur.snr_threshold_db > prev.snr_threshold_db:
                raise ValueError(f"SNR thresholds must strictly increase (CQI {cur.cqi})")
            if not cur.efficiency > prev.efficiency:
                raise ValueError(f"efficiencies must strictly increase (CQI {cur.cqi})")

    @classmethod
    def from_pairs(cls, pairs) -> CqiTable:
        """Build from ordered ``(snr_db, efficiency)`` pairs; CQI is the position."""
        return cls(tuple(CqiRow(float(s), i, float(e)) for i, (s, e) in enumerate(pairs, start=1)))

    @property
    def thresholds(self) -> list[float]:
        return [r.snr_threshold_db for r in self.rows]

    def lookup(self, snr_db: float) -> CqiRow | None:
        """Highest row whose threshold is at or below ``snr_db``."""
        idx = bisect.bisect_right(self.thresholds, snr_db)
        return self.rows[idx - 1] if idx else None

    @property
    def max_efficiency(self) -> float:
        return self.rows[-1].efficiency


DEFAULT_CQI_TABLE = CqiTable.from_pairs(zip(LTE_CQI_SNR_DB, LTE_CQI_EFFICIENCY))


@dataclass(frozen=True)
class BaseStation:
    id: str
    position: GeoPoint
    p_tx_dbm: float = 10.0
    g_tx_dbi: float = 10.0
    offset_db: float = 0.0


@dataclass(frozen=True)
class RadioConfig:
    freq_hz: float = 3.41e9
    noise_dbm: float = -90.0
    g_rx_dbi: float = 2.0
    bandwidth_mhz: float = 1.4
    cqi_table: CqiTable = field(default=DEFAULT_CQI_TABLE)

    def __post_init__(self) -> None:
        if not self.freq_hz > 0:
            raise ValueError(f"freq_hz must be positive: {self.freq_hz}")
        if not self.bandwidth_mhz > 0:
            raise ValueError(f"bandwidth_mhz must be positive: {self.bandwidth_mhz}")

    @property
    def max_throughput_mbps(self) -> float:
        return self.bandwidth_mhz * self.cqi_table.max_efficiency


@dataclass(frozen=True)
class LinkSample:
    distance_3d_m: float
    fspl_db: float
    rsrp_dbm: float
    p_rx_dbm: float
    snr_db: float
    throughput_mbps: float


def fspl_db(distance_m: float, freq_hz: float) -> float:
    """Free-space path loss in dB for distance in meters and frequency in Hz."""
    if not freq_hz > 0:
        raise ValueError(f"freq_hz must be positive: {freq_hz}")
    if not distance_m >= MIN_DIST_M:
        raise DegenerateDistance(f"distance {distance_m} m is below the {MIN_DIST_M} m minimum")
    return 20.0 * math.log10(distance_m) + 20.0 * math.log10(freq_hz) - 147.55


def rsrp_dbm(bs: BaseStation, cfg: RadioConfig, distance_m: float) -> float:
    return bs.p_tx_dbm + bs.g_tx_dbi - fspl_db(distance_m, cfg.freq_hz) + cfg.g_rx_dbi + bs.offset_db


def snr_db(rsrp: float, noise_dbm: float) -> float:
    # received power is taken to be the RSRP, so SNR is a plain dB difference
    return rsrp - noise_dbm


def throughput_mbps(snr: float, cfg: RadioConfig) -> float:
    row = cfg.cqi_table.lookup(snr)
    if row is None:
        return 0.0
    return cfg.bandwidth_mhz * row.efficiency
