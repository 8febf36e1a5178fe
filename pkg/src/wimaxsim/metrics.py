"""Per-packet outcomes and the derived quality metrics.

Loss ratio counts dropped packets against resolved ones (dropped plus
delivered); packets still queued or on the wire when the run ends are
reported separately and excluded from every mean. End-to-end delay is the
sum of the four per-packet components (processing, queueing, transmission,
propagation). Jitter compares each delivery against a playout schedule
anchored at the stream's first delivery and spaced by the nominal media
frame interval; the mean of |jitter| is the headline figure and an
RFC 3550-style smoothed interarrival jitter is reported alongside it.
Throughput is delivered payload bits over the observation window.

Acceptability gates: loss ratio <= 1e-3 (inclusive), mean end-to-end delay
< 400 ms (strict) and mean jitter < 50 ms (strict). Throughput carries no
gate; it is reported for inspection only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from statistics import fmean
from typing import Iterable, Mapping, Optional, Sequence

STATUS_DELIVERED = "delivered"
STATUS_DROPPED = "dropped"
STATUS_IN_FLIGHT = "in_flight"

REASON_OVERFLOW = "BufferOverflow"
REASON_DEADLINE = "DeadlineExpired"
REASON_OUTAGE = "LinkOutage"
DROP_REASONS = (REASON_OVERFLOW, REASON_DEADLINE, REASON_OUTAGE)

PLR_ACCEPTABLE = 1e-3
E2E_ACCEPTABLE_MS = 400.0
JITTER_ACCEPTABLE_MS = 50.0

PACKETS_CSV_HEADER = (
    "packet_id,flow,status,reason,created_ms,delivered_ms,d_proc,d_queue,d_trans,d_prop"
)
TIMESERIES_CSV_HEADER = "t_s,throughput_bps,drops,mean_e2e_ms,mean_jitter_ms"


@dataclass(frozen=True)
class PacketOutcome:
    """Final fate of one packet plus its delay decomposition when delivered."""

    packet_id: int
    flow_id: str
    frame_index: int
    size_bytes: int
    status: str
    reason: Optional[str] = None
    created_ms: float = 0.0
    delivered_ms: Optional[float] = None
    d_proc_ms: Optional[float] = None
    d_queue_ms: Optional[float] = None
    d_trans_ms: Optional[float] = None
    d_prop_ms: Optional[float] = None

    def __post_init__(self) -> None:
        if self.status not in (STATUS_DELIVERED, STATUS_DROPPED, STATUS_IN_FLIGHT):
            raise ValueError(f"unknown status {self.status!r}")
        if self.status == STATUS_DROPPED and self.reason not in DROP_REASONS:
            raise ValueError(f"dropped packet needs a reason, got {self.reason!r}")
        if self.status == STATUS_DELIVERED and self.delivered_ms is None:
            raise ValueError("delivered packet needs a delivery time")


def packet_loss_ratio(lost: int, received: int) -> float:
    """Lost over (lost + received); 0.0 when nothing was resolved."""
    if lost < 0 or received < 0:
        raise ValueError("counts must be >= 0")
    total = lost + received
    return lost / total if total else 0.0


def e2e_delay_ms(outcome: PacketOutcome) -> float:
    """Sum of the four delay components of a delivered packet."""
    if outcome.status != STATUS_DELIVERED:
        raise ValueError("end-to-end delay is defined for delivered packets only")
    return (
        outcome.d_proc_ms + outcome.d_queue_ms + outcome.d_trans_ms + outcome.d_prop_ms
    )


def packet_jitter_ms(t_actual_ms: float, t_expected_ms: float) -> float:
    """Signed deviation of a delivery from its playout schedule slot."""
    return t_actual_ms - t_expected_ms


def throughput_bps(delivered_bytes: int, window_s: float) -> float:
    """Delivered payload bits per second over the window."""
    if window_s <= 0.0:
        raise ValueError("window must be positive")
    if delivered_bytes < 0:
        raise ValueError("byte count must be >= 0")
    return 8.0 * delivered_bytes / window_s


def acceptability(plr: float, mean_e2e_ms: float, mean_jitter_ms: float) -> dict:
    return {
        "plr_ok": plr <= PLR_ACCEPTABLE,
        "e2e_ok": mean_e2e_ms < E2E_ACCEPTABLE_MS,
        "jitter_ok": mean_jitter_ms < JITTER_ACCEPTABLE_MS,
    }


def percentile_nearest_rank(values: Sequence[float], fraction: float) -> float:
    """Nearest-rank percentile of a non-empty sample; 0.0 for empty input."""
    if not values:
        return 0.0
    ordered = sorted(values)
    rank = math.ceil(fraction * len(ordered))
    rank = min(max(rank, 1), len(ordered))
    return ordered[rank - 1]


def jitter_series(
    delivered: Sequence[PacketOutcome], nominal_interval_ms: float
) -> list[float]:
    """Signed jitter per delivered packet of one flow, in delivery order.

    The expected time of a packet is the flow's first delivery plus the
    nominal interval times the packet's media-frame offset from that first
    delivery. Anchoring on the frame index (rather than a running delivery
    counter) keeps losses from compressing the schedule.
    """
    if nominal_interval_ms <= 0.0:
        raise ValueError("nominal interval must be positive")
    if not delivered:
        return []
    anchor = delivered[0]
    series = []
    for outcome in delivered:
        expected = anchor.delivered_ms + nominal_interval_ms * (
            outcome.frame_index - anchor.frame_index
        )
        series.append(packet_jitter_ms(outcome.delivered_ms, expected))
    return series


def rfc3550_jitter_ms(delivered: Sequence[PacketOutcome]) -> float:
    """Smoothed interarrival jitter (J += (|D| - J) / 16) of one flow."""
    estimate = 0.0
    for prev, cur in zip(delivered, delivered[1:]):
        transit_delta = (cur.delivered_ms - prev.delivered_ms) - (
            cur.created_ms - prev.created_ms
        )
        estimate += (abs(transit_delta) - estimate) / 16.0
    return estimate


@dataclass(frozen=True)
class FlowReport:
    flow_id: str
    sent: int
    delivered: int
    in_flight: int
    dropped: dict
    plr: float
    mean_e2e_ms: float
    mean_jitter_ms: float
    rfc3550_jitter_ms: float
    throughput_bps: float
    delivered_bytes: int
    dropped_bytes: int

    def to_dict(self) -> dict:
        return {
            "sent": self.sent,
            "delivered": self.delivered,
            "in_flight": self.in_flight,
            "dropped": dict(self.dropped),
            "plr": self.plr,
            "mean_e2e_ms": self.mean_e2e_ms,
            "mean_jitter_ms": self.mean_jitter_ms,
            "rfc3550_jitter_ms": self.rfc3550_jitter_ms,
            "throughput_bps": self.throughput_bps,
            "delivered_bytes": self.delivered_bytes,
            "dropped_bytes": self.dropped_bytes,
        }


@dataclass(frozen=True)
class MetricsReport:
    """Aggregate report of one run; serializes deterministically."""

    duration_s: float
    sent: int
    delivered: int
    in_flight: int
    dropped: dict
    plr: float
    mean_e2e_ms: float
    p99_e2e_ms: float
    mean_jitter_ms: float
    rfc3550_jitter_ms: float
    throughput_bps: float
    dropped_bps: float
    delivered_bytes: int
    dropped_bytes: int
    acceptability: dict
    flows: dict
    link: dict

    def dropped_total(self) -> int:
        return self.dropped["total"]

    def to_dict(self) -> dict:
        return {
            "duration_s": self.duration_s,
            "sent": self.sent,
            "delivered": self.delivered,
            "in_flight": self.in_flight,
            "dropped": dict(self.dropped),
            "plr": self.plr,
            "mean_e2e_ms": self.mean_e2e_ms,
            "p99_e2e_ms": self.p99_e2e_ms,
            "mean_jitter_ms": self.mean_jitter_ms,
            "rfc3550_jitter_ms": self.rfc3550_jitter_ms,
            "throughput_bps": self.throughput_bps,
            "dropped_bps": self.dropped_bps,
            "delivered_bytes": self.delivered_bytes,
            "dropped_bytes": self.dropped_bytes,
            "acceptability": dict(self.acceptability),
            "flows": {fid: flow.to_dict() for fid, flow in sorted(self.flows.items())},
            "link": dict(self.link),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _delivered_sorted(outcomes: Iterable[PacketOutcome]) -> list[PacketOutcome]:
    kept = [o for o in outcomes if o.status == STATUS_DELIVERED]
    kept.sort(key=lambda o: (o.delivered_ms, o.packet_id))
    return kept


def build_flow_report(
    flow_id: str,
    outcomes: Sequence[PacketOutcome],
    nominal_interval_ms: float,
    duration_s: float,
) -> FlowReport:
    delivered = _delivered_sorted(outcomes)
    dropped = [o for o in outcomes if o.status == STATUS_DROPPED]
    in_flight = sum(1 for o in outcomes if o.status == STATUS_IN_FLIGHT)
    by_reason = {reason: 0 for reason in DROP_REASONS}
    for outcome in dropped:
        by_reason[outcome.reason] += 1
    by_reason["total"] = len(dropped)
    delays = [e2e_delay_ms(o) for o in delivered]
    jitters = jitter_series(delivered, nominal_interval_ms)
    delivered_bytes = sum(o.size_bytes for o in delivered)
    return FlowReport(
        flow_id=flow_id,
        sent=len(outcomes),
        delivered=len(delivered),
        in_flight=in_flight,
        dropped=by_reason,
        plr=packet_loss_ratio(len(dropped), len(delivered)),
        mean_e2e_ms=fmean(delays) if delays else 0.0,
        mean_jitter_ms=fmean(abs(j) for j in jitters) if jitters else 0.0,
        rfc3550_jitter_ms=rfc3550_jitter_ms(delivered),
        throughput_bps=throughput_bps(delivered_bytes, duration_s),
        delivered_bytes=delivered_bytes,
        dropped_bytes=sum(o.size_bytes for o in dropped),
    )


def build_report(
    outcomes: Sequence[PacketOutcome],
    flow_intervals: Mapping[str, float],
    duration_s: float,
    link: Optional[dict] = None,
) -> MetricsReport:
    """Aggregate a packet log into the run report.

    flow_intervals maps flow id to the stream's nominal media-frame interval
    in ms (the playout spacing used by the jitter schedule). Every flow that
    appears in the log must have an interval.
    """
    if duration_s <= 0.0:
        raise ValueError("duration must be positive")
    by_flow: dict[str, list[PacketOutcome]] = {fid: [] for fid in flow_intervals}
    for outcome in outcomes:
        if outcome.flow_id not in by_flow:
            raise ValueError(f"no nominal interval for flow {outcome.flow_id!r}")
        by_flow[outcome.flow_id].append(outcome)

    flow_reports = {
        fid: build_flow_report(fid, flow_outcomes, flow_intervals[fid], duration_s)
        for fid, flow_outcomes in by_flow.items()
    }

    delivered = _delivered_sorted(outcomes)
    delays = [e2e_delay_ms(o) for o in delivered]
    all_jitters: list[float] = []
    for fid, flow_outcomes in by_flow.items():
        all_jitters.extend(
            jitter_series(_delivered_sorted(flow_outcomes), flow_intervals[fid])
        )
    by_reason = {reason: 0 for reason in DROP_REASONS}
    dropped_bytes = 0
    for outcome in outcomes:
        if outcome.status == STATUS_DROPPED:
            by_reason[outcome.reason] += 1
            dropped_bytes += outcome.size_bytes
    by_reason["total"] = sum(by_reason[r] for r in DROP_REASONS)

    delivered_bytes = sum(o.size_bytes for o in delivered)
    plr = packet_loss_ratio(by_reason["total"], len(delivered))
    mean_e2e = fmean(delays) if delays else 0.0
    mean_jitter = fmean(abs(j) for j in all_jitters) if all_jitters else 0.0
    total_delivered = sum(f.delivered for f in flow_reports.values())
    rfc_mean = (
        sum(f.rfc3550_jitter_ms * f.delivered for f in flow_reports.values())
        / total_delivered
        if total_delivered
        else 0.0
    )
    return MetricsReport(
        duration_s=duration_s,
        sent=len(outcomes),
        delivered=len(delivered),
        in_flight=sum(1 for o in outcomes if o.status == STATUS_IN_FLIGHT),
        dropped=by_reason,
        plr=plr,
        mean_e2e_ms=mean_e2e,
        p99_e2e_ms=percentile_nearest_rank(delays, 0.99),
        mean_jitter_ms=mean_jitter,
        rfc3550_jitter_ms=rfc_mean,
        throughput_bps=throughput_bps(delivered_bytes, duration_s),
        dropped_bps=8.0 * dropped_bytes / duration_s,
        delivered_bytes=delivered_bytes,
        dropped_bytes=dropped_bytes,
        acceptability=acceptability(plr, mean_e2e, mean_jitter),
        flows=flow_reports,
        link=dict(link or {}),
    )


def timeseries_rows(
    outcomes: Sequence[PacketOutcome],
    flow_intervals: Mapping[str, float],
    duration_s: float,
) -> list[dict]:
    """Per-second rows: throughput, drop count, mean delay, mean |jitter|.

    Deliveries are binned by delivery time; drops by packet creation time
    (the drop itself has no timestamp in the outcome record).
    """
    n_bins = math.ceil(duration_s)
    bytes_per_bin = [0] * n_bins
    drops_per_bin = [0] * n_bins
    delays_per_bin: list[list[float]] = [[] for _ in range(n_bins)]
    jitters_per_bin: list[list[float]] = [[] for _ in range(n_bins)]

    def bin_of(t_ms: float) -> Optional[int]:
        index = int(t_ms // 1000.0)
        return index if 0 <= index < n_bins else None

    by_flow: dict[str, list[PacketOutcome]] = {}
    for outcome in outcomes:
        by_flow.setdefault(outcome.flow_id, []).append(outcome)
        if outcome.status == STATUS_DROPPED:
            index = bin_of(outcome.created_ms)
            if index is not None:
                drops_per_bin[index] += 1
    for fid, flow_outcomes in by_flow.items():
        delivered = _delivered_sorted(flow_outcomes)
        jitters = jitter_series(delivered, flow_intervals[fid])
        for outcome, jitter in zip(delivered, jitters):
            index = bin_of(outcome.delivered_ms)
            if index is None:
                continue
            bytes_per_bin[index] += outcome.size_bytes
            delays_per_bin[index].append(e2e_delay_ms(outcome))
            jitters_per_bin[index].append(abs(jitter))

    rows = []
    for second in range(n_bins):
        delays = delays_per_bin[second]
        jitters = jitters_per_bin[second]
        rows.append(
            {
                "t_s": second,
                "throughput_bps": 8.0 * bytes_per_bin[second],
                "drops": drops_per_bin[second],
                "mean_e2e_ms": fmean(delays) if delays else 0.0,
                "mean_jitter_ms": fmean(jitters) if jitters else 0.0,
            }
        )
    return rows


def write_timeseries_csv(rows: Sequence[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(TIMESERIES_CSV_HEADER + "\n")
        for row in rows:
            fh.write(
                f"{row['t_s']},{row['throughput_bps']!r},{row['drops']},"
                f"{row['mean_e2e_ms']!r},{row['mean_jitter_ms']!r}\n"
            )


def write_packets_csv(outcomes: Sequence[PacketOutcome], path) -> None:
    def cell(value) -> str:
        if value is None:
            return ""
        return repr(value) if isinstance(value, float) else str(value)

    with open(path, "w", encoding="utf-8") as fh:
        fh.write(PACKETS_CSV_HEADER + "\n")
        for o in sorted(outcomes, key=lambda o: o.packet_id):
            fields = (
                o.packet_id,
                o.flow_id,
                o.status,
                o.reason or "",
                o.created_ms,
                o.delivered_ms,
                o.d_proc_ms,
                o.d_queue_ms,
                o.d_trans_ms,
                o.d_prop_ms,
            )
            fh.write(",".join(cell(f) for f in fields) + "\n")
