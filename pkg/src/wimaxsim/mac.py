"""MAC layer: scheduling service classes, QoS parameters and per-frame grants.

Five downlink scheduling services are modeled with strict class priority
UGS > ertPS > rtPS > nrtPS > BE. Grants are computed once per MAC frame:

* UGS gets a fixed grant of max_sustained_rate * frame_duration whether or
  not it has backlog; an unused grant is wasted (CBR semantics).
* ertPS, rtPS and nrtPS are polled: each is granted min(backlog, remaining
  capacity), but every such flow is first topped up to its
  min_reserved_rate * frame_duration share before any lower class is served.
* BE shares whatever is left.
* Every grant, of any class, is additionally capped at
  max_sustained_rate * frame_duration.

Grants are expressed in (fractional) bits so a packet may be split across
frame boundaries; a packet completes when its last bit is granted. Queues
are per-flow FIFO with a byte-capacity admission check, and flows with a
max_latency bound expire waiting packets whose deadline has passed. A packet
whose transmission has already started is committed and is not expired.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Deque, Mapping, Optional, Sequence

DEFAULT_QUEUE_CAPACITY_BYTES = 2_000_000
DEFAULT_MAX_LATENCY_MS = 400.0
DEFAULT_TOLERATED_JITTER_MS = 50.0
DEFAULT_TRAFFIC_PRIORITY = 0


class ServiceClass(str, Enum):
    UGS = "UGS"
    ERTPS = "ertPS"
    RTPS = "rtPS"
    NRTPS = "nrtPS"
    BE = "BE"


#: Strict scheduling priority, 0 served first.
CLASS_RANK = {
    ServiceClass.UGS: 0,
    ServiceClass.ERTPS: 1,
    ServiceClass.RTPS: 2,
    ServiceClass.NRTPS: 3,
    ServiceClass.BE: 4,
}

#: QoS parameters each class understands; anything else is a config error.
QOS_APPLICABILITY: Mapping[ServiceClass, frozenset] = {
    ServiceClass.UGS: frozenset(
        {"max_sustained_rate_bps", "max_latency_ms", "tolerated_jitter_ms"}
    ),
    ServiceClass.ERTPS: frozenset(
        {"max_sustained_rate_bps", "min_reserved_rate_bps", "max_latency_ms"}
    ),
    ServiceClass.RTPS: frozenset(
        {"max_sustained_rate_bps", "min_reserved_rate_bps", "max_latency_ms"}
    ),
    ServiceClass.NRTPS: frozenset(
        {"max_sustained_rate_bps", "min_reserved_rate_bps", "traffic_priority"}
    ),
    ServiceClass.BE: frozenset({"max_sustained_rate_bps", "traffic_priority"}),
}

QOS_FIELDS = (
    "max_sustained_rate_bps",
    "min_reserved_rate_bps",
    "max_latency_ms",
    "tolerated_jitter_ms",
    "traffic_priority",
)


@dataclass(frozen=True)
class QosParams:
    """QoS parameter set of one service flow; inapplicable fields stay None."""

    max_sustained_rate_bps: float
    min_reserved_rate_bps: Optional[float] = None
    max_latency_ms: Optional[float] = None
    tolerated_jitter_ms: Optional[float] = None
    traffic_priority: Optional[int] = None


def validate_flow(service_class: ServiceClass, qos: QosParams) -> list[str]:
    """Check a QoS set against the class applicability matrix.

    Returns human-readable violations; an empty list means the flow is valid.
    """
    problems = []
    applicable = QOS_APPLICABILITY[service_class]
    for name in QOS_FIELDS:
        value = getattr(qos, name)
        if name in applicable and value is None:
            problems.append(f"{service_class.value} requires {name}")
        if name not in applicable and value is not None:
            problems.append(f"{service_class.value} does not take {name}")
    if qos.max_sustained_rate_bps is not None and qos.max_sustained_rate_bps <= 0:
        problems.append("max_sustained_rate_bps must be positive")
    if qos.min_reserved_rate_bps is not None:
        if qos.min_reserved_rate_bps < 0:
            problems.append("min_reserved_rate_bps must be >= 0")
        elif qos.min_reserved_rate_bps > qos.max_sustained_rate_bps:
            problems.append("min_reserved_rate_bps must not exceed max_sustained_rate_bps")
    if qos.max_latency_ms is not None and qos.max_latency_ms <= 0:
        problems.append("max_latency_ms must be positive")
    if qos.tolerated_jitter_ms is not None and qos.tolerated_jitter_ms <= 0:
        problems.append("tolerated_jitter_ms must be positive")
    if qos.traffic_priority is not None and qos.traffic_priority < 0:
        problems.append("traffic_priority must be >= 0")
    return problems


def qos_for_class(
    service_class: ServiceClass,
    max_sustained_rate_bps: float,
    *,
    min_reserved_rate_bps: Optional[float] = None,
    max_latency_ms: Optional[float] = None,
    tolerated_jitter_ms: Optional[float] = None,
    traffic_priority: Optional[int] = None,
) -> QosParams:
    """Build a valid QosParams for a class from a full parameter template.

    Keeps exactly the applicable fields, filling required ones that the
    template leaves unset with conservative defaults. This is what lets one
    flow definition be re-run under every scheduling class.
    """
    template = {
        "max_sustained_rate_bps": max_sustained_rate_bps,
        "min_reserved_rate_bps": min_reserved_rate_bps,
        "max_latency_ms": max_latency_ms,
        "tolerated_jitter_ms": tolerated_jitter_ms,
        "traffic_priority": traffic_priority,
    }
    defaults = {
        "min_reserved_rate_bps": 0.0,
        "max_latency_ms": DEFAULT_MAX_LATENCY_MS,
        "tolerated_jitter_ms": DEFAULT_TOLERATED_JITTER_MS,
        "traffic_priority": DEFAULT_TRAFFIC_PRIORITY,
    }
    kwargs = {}
    for name in QOS_FIELDS:
        if name in QOS_APPLICABILITY[service_class]:
            value = template[name]
            if value is None and name in defaults:
                value = defaults[name]
            kwargs[name] = value
        elif name != "max_sustained_rate_bps":
            kwargs[name] = None
    return QosParams(**kwargs)


@dataclass
class Packet:
    """One MAC SDU: a slice of a media frame after MTU packetization."""

    id: int
    flow_id: str
    size_bytes: int
    created_at_ms: float
    fragment_of_frame: int
    enqueued_at_ms: float = 0.0
    deadline_ms: Optional[float] = None

    def __post_init__(self) -> None:
        if self.size_bytes <= 0:
            raise ValueError(f"packet size must be positive, got {self.size_bytes}")


@dataclass
class ServiceFlow:
    """A downlink service flow: class, QoS and its FIFO queue state."""

    id: str
    service_class: ServiceClass
    qos: QosParams
    queue_capacity_bytes: int = DEFAULT_QUEUE_CAPACITY_BYTES
    queue: Deque[Packet] = field(default_factory=deque)
    queued_bytes: int = 0
    # Bits of the head packet already granted in earlier frames; > 0 marks
    # the head as in service (committed, exempt from deadline expiry).
    head_bits_sent: float = 0.0

    def __post_init__(self) -> None:
        if self.queue_capacity_bytes <= 0:
            raise ValueError("queue capacity must be positive")

    def backlog_bits(self) -> float:
        return 8 * self.queued_bytes - self.head_bits_sent


def enqueue_packet(flow: ServiceFlow, packet: Packet, now_ms: float) -> bool:
    """Admit a packet to the flow queue; False means a buffer-overflow drop.

    On admission the packet is stamped with its enqueue time and, for
    latency-bounded classes, its expiry deadline.
    """
    if flow.queued_bytes + packet.size_bytes > flow.queue_capacity_bytes:
        return False
    packet.enqueued_at_ms = now_ms
    if flow.qos.max_latency_ms is not None:
        packet.deadline_ms = now_ms + flow.qos.max_latency_ms
    flow.queue.append(packet)
    flow.queued_bytes += packet.size_bytes
    return True


def expire_deadlines(flow: ServiceFlow, now_ms: float) -> list[Packet]:
    """Drop waiting packets whose deadline has passed (deadline < now).

    Deadlines within a flow are non-decreasing (same latency bound, FIFO
    arrivals), so expired packets form a prefix of the waiting queue. The
    head packet is skipped while it is mid-transmission.
    """
    queue = flow.queue
    start = 1 if flow.head_bits_sent > 0.0 else 0
    expired: list[Packet] = []
    while len(queue) > start:
        candidate = queue[start]
        if candidate.deadline_ms is None or candidate.deadline_ms >= now_ms:
            break
        del queue[start]
        flow.queued_bytes -= candidate.size_bytes
        expired.append(candidate)
    return expired


def schedule_frame(
    flows: Sequence[ServiceFlow],
    capacity_bits: int,
    frame_duration_ms: float,
) -> dict[str, float]:
    """Grant DL capacity for one MAC frame; returns flow id -> granted bits.

    Classes are always served in strict priority order regardless of how the
    input list interleaves them; list order only decides the order of flows
    within a class (callers rotate it for round-robin fairness). The grant
    total never exceeds capacity_bits.
    """
    if capacity_bits < 0:
        raise ValueError("capacity must be >= 0")
    if frame_duration_ms <= 0.0:
        raise ValueError("frame duration must be positive")
    grants = {flow.id: 0.0 for flow in flows}
    remaining = float(capacity_bits)

    # Fixed grants: UGS consumes its share whether it has backlog or not.
    for flow in flows:
        if flow.service_class is not ServiceClass.UGS:
            continue
        grant = flow.qos.max_sustained_rate_bps * frame_duration_ms / 1000.0
        if remaining < grant:
            grant = remaining
        grants[flow.id] = grant
        remaining -= grant

    # Reserved-rate guarantees of every polled class come before any
    # best-effort top-up of a higher class.
    for rank in (ServiceClass.ERTPS, ServiceClass.RTPS, ServiceClass.NRTPS):
        for flow in flows:
            if flow.service_class is not rank:
                continue
            cap = flow.qos.max_sustained_rate_bps * frame_duration_ms / 1000.0
            reserve = (flow.qos.min_reserved_rate_bps or 0.0) * frame_duration_ms / 1000.0
            grant = flow.backlog_bits()
            if reserve < grant:
                grant = reserve
            if cap < grant:
                grant = cap
            if remaining < grant:
                grant = remaining
            grants[flow.id] = grant
            remaining -= grant

    # Top the polled classes up to their backlog, highest class first.
    for rank in (ServiceClass.ERTPS, ServiceClass.RTPS, ServiceClass.NRTPS):
        for flow in flows:
            if flow.service_class is not rank:
                continue
            cap = flow.qos.max_sustained_rate_bps * frame_duration_ms / 1000.0
            extra = flow.backlog_bits() - grants[flow.id]
            headroom = cap - grants[flow.id]
            if headroom < extra:
                extra = headroom
            if remaining < extra:
                extra = remaining
            grants[flow.id] += extra
            remaining -= extra

    # BE shares the leftover.
    for flow in flows:
        if flow.service_class is not ServiceClass.BE:
            continue
        cap = flow.qos.max_sustained_rate_bps * frame_duration_ms / 1000.0
        grant = flow.backlog_bits()
        if cap < grant:
            grant = cap
        if remaining < grant:
            grant = remaining
        grants[flow.id] = grant
        remaining -= grant

    return grants
