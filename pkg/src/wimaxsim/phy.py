"""PHY profile: modulation and coding schemes for a 5 MHz OFDM carrier.

The default MCS table lists the seven modulation/coding combinations of the
profile together with their minimum usable SINR and the net DL/UL data rates.
Rates scale with information bits per symbol: DL is about 3.17 Mbps per
bit/symbol and UL about 2.28 Mbps per bit/symbol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

MODULATIONS = ("QPSK", "16QAM", "64QAM")
DIRECTIONS = ("DL", "UL")

#: Modulated bits carried by one subcarrier symbol.
MODULATION_BITS = {"QPSK": 2, "16QAM": 4, "64QAM": 6}


@dataclass(frozen=True)
class McsProfile:
    """One modulation-and-coding table row.

    bits_per_symbol counts information bits (modulated bits times the coding
    rate): 64QAM with rate 3/4 coding carries 6 * 3/4 = 4.5 bits per symbol.
    """

    modulation: str
    coding: str
    bits_per_symbol: float
    min_sinr_db: float
    dl_rate_mbps: float
    ul_rate_mbps: float

    def __post_init__(self) -> None:
        if self.modulation not in MODULATIONS:
            raise ValueError(f"unknown modulation {self.modulation!r}")
        rate = Fraction(self.coding)
        if not 0 < rate < 1:
            raise ValueError(f"coding rate must be in (0, 1), got {self.coding!r}")
        if self.bits_per_symbol <= 0.0:
            raise ValueError("bits_per_symbol must be positive")
        if not 0.0 < self.ul_rate_mbps < self.dl_rate_mbps:
            raise ValueError("rates must satisfy 0 < UL < DL")

    @property
    def coding_rate(self) -> float:
        return float(Fraction(self.coding))

    @property
    def name(self) -> str:
        return f"{self.modulation} {self.coding}"


def default_mcs_table() -> tuple[McsProfile, ...]:
    """The seven-entry table of the 5 MHz profile, ordered by minimum SINR."""
    rows = [
        ("QPSK", "1/2", 1.0, 5.0, 3.17, 2.28),
        ("QPSK", "3/4", 1.5, 8.0, 4.75, 3.43),
        ("16QAM", "1/2", 2.0, 10.5, 6.34, 4.57),
        ("16QAM", "3/4", 3.0, 14.0, 9.5, 6.85),
        ("64QAM", "1/2", 3.0, 16.0, 9.5, 6.85),
        ("64QAM", "2/3", 4.0, 18.0, 12.6, 9.14),
        ("64QAM", "3/4", 4.5, 20.0, 14.26, 10.28),
    ]
    return tuple(McsProfile(*row) for row in rows)


def validate_mcs_table(table: Sequence[McsProfile]) -> list[str]:
    """Return a list of ordering violations (empty when the table is valid).

    A usable table is strictly increasing in min_sinr_db and non-decreasing
    in dl_rate_mbps (two entries may share a rate at different robustness
    levels, as 16QAM 3/4 and 64QAM 1/2 do), so `select_mcs` can walk the
    table and treat the last affordable row as the best one.
    """
    problems = []
    if not table:
        problems.append("MCS table is empty")
    for prev, cur in zip(table, table[1:]):
        if cur.min_sinr_db <= prev.min_sinr_db:
            problems.append(
                f"min_sinr_db not strictly increasing at {cur.name} "
                f"({cur.min_sinr_db} after {prev.min_sinr_db})"
            )
        if cur.dl_rate_mbps < prev.dl_rate_mbps:
            problems.append(
                f"dl_rate_mbps decreasing at {cur.name} "
                f"({cur.dl_rate_mbps} after {prev.dl_rate_mbps})"
            )
    return problems


@dataclass(frozen=True)
class PhyProfile:
    """Carrier-level configuration: bandwidth, MAC frame length, MCS table."""

    channel_bandwidth_mhz: float = 5.0
    frame_duration_ms: float = 5.0
    mcs_table: tuple[McsProfile, ...] = field(default_factory=default_mcs_table)

    def __post_init__(self) -> None:
        if self.channel_bandwidth_mhz <= 0.0:
            raise ValueError("channel bandwidth must be positive")
        if self.frame_duration_ms <= 0.0:
            raise ValueError("frame duration must be positive")
        problems = validate_mcs_table(self.mcs_table)
        if problems:
            raise ValueError("invalid MCS table: " + "; ".join(problems))


def select_mcs(
    table: Sequence[McsProfile], sinr_db: float
) -> Optional[McsProfile]:
    """Pick the highest-rate entry whose SINR threshold is met (inclusive).

    Returns None when the SINR is below every threshold: the link is in
    outage and carries nothing.
    """
    best = None
    for row in table:
        if row.min_sinr_db <= sinr_db:
            best = row
    return best


def rate_bps(mcs: McsProfile, direction: str) -> float:
    """Net data rate in bit/s for one direction ("DL" or "UL")."""
    if direction == "DL":
        return mcs.dl_rate_mbps * 1e6
    if direction == "UL":
        return mcs.ul_rate_mbps * 1e6
    raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")


def tx_time(payload_bytes: int, mcs: McsProfile, direction: str = "DL") -> float:
    """Serialization time in seconds for a payload at the MCS net rate."""
    if payload_bytes < 0:
        raise ValueError(f"payload must be >= 0, got {payload_bytes} bytes")
    return payload_bytes * 8.0 / rate_bps(mcs, direction)


def frame_capacity_bits(
    mcs: McsProfile, frame_duration_ms: float, direction: str = "DL"
) -> int:
    """Whole bits one MAC frame can carry at the MCS net rate."""
    if frame_duration_ms <= 0.0:
        raise ValueError("frame duration must be positive")
    return int(math.floor(rate_bps(mcs, direction) * frame_duration_ms / 1000.0))
