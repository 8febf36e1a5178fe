"""Scenario assembly and the frame-by-frame downlink run loop.

A scenario pins one cell with a static subscriber link, a MAC frame clock,
and a set of downlink service flows fed by media traces. Running it:

1. resolves the link budget once (geometry never moves, so SINR and the
   modulation choice are constants of the run),
2. packetizes every media frame and replays the packets through the wired
   segment between the streaming server and the base station,
3. hands flat arrays to the MAC kernel, which walks the frame clock and
   records each packet's fate,
4. assembles the per-packet delay decomposition and the metrics report.

Two kernels implement step 3: a compiled extension (`_mac_core`) and a
pure-Python reference (`_mac_core_py`). They are written to produce
bit-identical outputs; ``kernel="auto"`` prefers the compiled one.
"""

from __future__ import annotations

import math
import os
import random
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import mac, metrics, phy, propagation, traffic
from ._mac_core_py import (
    DELIVERED,
    DROP_DEADLINE,
    DROP_OUTAGE,
    DROP_OVERFLOW,
    IN_FLIGHT,
)

KERNEL_CHOICES = ("auto", "c", "python")
KERNEL_ENV_VAR = "WIMAXSIM_KERNEL"

_DROP_REASON = {
    DROP_OVERFLOW: metrics.REASON_OVERFLOW,
    DROP_DEADLINE: metrics.REASON_DEADLINE,
    DROP_OUTAGE: metrics.REASON_OUTAGE,
}


@dataclass(frozen=True)
class CellConfig:
    """Cell geometry; the subscriber sits at a fixed distance from the BS."""

    radius_km: float = 0.2
    bs_count: int = 7
    ss_distance_m: float = 150.0


@dataclass(frozen=True)
class WiredPath:
    """Streaming-server-to-BS segment: a chain of store-and-forward elements.

    Each of the ``element_count`` elements adds one processing and one
    propagation hop; the base station adds a final processing stage.
    """

    element_count: int = 2
    per_element_proc_ms: float = 0.05
    per_element_prop_ms: float = 0.25

    @property
    def proc_delay_ms(self) -> float:
        return (self.element_count + 1) * self.per_element_proc_ms

    @property
    def prop_delay_ms(self) -> float:
        return self.element_count * self.per_element_prop_ms

    def ingress_delay_ms(self) -> float:
        """Total wired latency a packet sees before reaching the BS queue."""
        return self.proc_delay_ms + self.prop_delay_ms


@dataclass(frozen=True)
class McsMode:
    """Modulation strategy: adapt to SINR, or pin one table entry.

    A pinned entry still obeys its SINR threshold (packets transmit but are
    lost below it) unless ``force`` is set, which delivers regardless.
    """

    mode: str = "adaptive"
    modulation: Optional[str] = None
    coding: Optional[str] = None
    force: bool = False


@dataclass(frozen=True)
class FlowSpec:
    """One downlink service flow: class, QoS contract, queue, media source."""

    id: str
    service_class: mac.ServiceClass
    qos: mac.QosParams
    source: dict
    queue_capacity_bytes: int = mac.DEFAULT_QUEUE_CAPACITY_BYTES


@dataclass(frozen=True)
class Scenario:
    duration_s: float
    seed: int
    cell: CellConfig
    phy_profile: phy.PhyProfile
    mcs_mode: McsMode
    budget: propagation.LinkBudget
    wired: WiredPath
    flows: tuple[FlowSpec, ...]
    traces: dict[str, traffic.MediaTrace]
    mtu_payload_bytes: int = traffic.DEFAULT_MTU_PAYLOAD_BYTES


@dataclass(frozen=True)
class LinkState:
    """Resolved link: one SINR, one modulation choice, one frame capacity."""

    sinr_db: float
    path_loss_db: float
    mcs: Optional[phy.McsProfile]
    outage: bool
    capacity_bits: int
    deliver_status: int


@dataclass(frozen=True)
class RunResult:
    scenario: Scenario
    backend: str
    link: LinkState
    outcomes: tuple[metrics.PacketOutcome, ...]
    report: metrics.MetricsReport


class ScenarioError(ValueError):
    """Aggregated configuration problems; ``problems`` lists them all."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def find_mcs(table, modulation: str, coding: str) -> Optional[phy.McsProfile]:
    """Locate a table entry by modulation name and coding-rate string."""
    for row in table:
        if row.modulation == modulation and row.coding == coding:
            return row
    return None


def load_kernel(kernel: str = "auto"):
    """Return (module, name) for the requested MAC kernel.

    "auto" consults the WIMAXSIM_KERNEL environment variable, then prefers
    the compiled extension, falling back to the pure-Python reference.
    """
    choice = kernel
    if choice == "auto":
        choice = os.environ.get(KERNEL_ENV_VAR, "").strip().lower() or "auto"
    if choice not in KERNEL_CHOICES:
        raise ValueError(f"kernel must be one of {KERNEL_CHOICES}, got {kernel!r}")
    if choice == "python":
        from . import _mac_core_py

        return _mac_core_py, "python"
    if choice == "c":
        from . import _mac_core

        return _mac_core, "c"
    try:
        from . import _mac_core

        return _mac_core, "c"
    except ImportError:
        from . import _mac_core_py

        return _mac_core_py, "python"


def _coerce_qos(raw: dict) -> mac.QosParams:
    values = {}
    for name in mac.QOS_FIELDS:
        if name in raw and raw[name] is not None:
            value = raw[name]
            values[name] = int(value) if name == "traffic_priority" else float(value)
    return mac.QosParams(**values)


def _resolve_source(
    flow_id: str,
    index: int,
    src: dict,
    duration_s: float,
    seed: int,
    base_dir: str,
    problems: list,
) -> Optional[traffic.MediaTrace]:
    kind = src.get("type")
    try:
        if kind == "trace":
            path = src.get("path")
            if not path:
                problems.append(f"{flow_id}: trace source needs a path")
                return None
            path = str(path)
            if not os.path.isabs(path):
                path = os.path.join(str(base_dir), path)
            media = str(src.get("kind", "video"))
            default_fps = (
                traffic.DEFAULT_VIDEO_FPS if media == "video" else traffic.DEFAULT_AUDIO_FPS
            )
            fps = float(src.get("fps", default_fps))
            return traffic.load_trace(path, kind=media, nominal_fps=fps, label=flow_id)
        if kind == "cbr":
            return traffic.synthesize_cbr(
                duration_s,
                float(src.get("fps", traffic.DEFAULT_AUDIO_FPS)),
                int(src.get("frame_bytes", traffic.DEFAULT_AUDIO_FRAME_BYTES)),
                kind=str(src.get("kind", "audio")),
                label=flow_id,
            )
        if kind == "vbr":
            return traffic.synthesize_codec_trace(
                str(src.get("codec", "MPEG-4")),
                duration_s,
                float(src.get("mean_rate_bps", 0.0)),
                int(src.get("seed", seed + index)),
                fps=float(src.get("fps", traffic.DEFAULT_VIDEO_FPS)),
            )
        problems.append(f"{flow_id}: unknown source type {kind!r}")
    except (OSError, ValueError) as exc:
        problems.append(f"{flow_id}: {exc}")
    return None


def build_scenario(config: dict, base_dir: str = ".") -> Scenario:
    """Validate a config dict and resolve it into a runnable Scenario.

    Collects every problem it can find and raises ScenarioError with the
    full list, so a bad config is fixable in one pass.
    """
    problems: list[str] = []
    cfg = dict(config or {})

    duration_s = float(cfg.get("duration_s", 10.0))
    if duration_s <= 0.0:
        problems.append(f"duration_s must be positive, got {duration_s}")
    seed = int(cfg.get("seed", 0))
    mtu = int(cfg.get("mtu_payload_bytes", traffic.DEFAULT_MTU_PAYLOAD_BYTES))
    if mtu <= 0:
        problems.append(f"mtu_payload_bytes must be positive, got {mtu}")

    cell_cfg = dict(cfg.get("cell") or {})
    cell = CellConfig(
        radius_km=float(cell_cfg.get("radius_km", CellConfig.radius_km)),
        bs_count=int(cell_cfg.get("bs_count", CellConfig.bs_count)),
        ss_distance_m=float(cell_cfg.get("ss_distance_m", CellConfig.ss_distance_m)),
    )
    if cell.radius_km <= 0.0:
        problems.append(f"cell radius must be positive, got {cell.radius_km} km")
    if cell.bs_count < 1:
        problems.append(f"cell needs at least one BS, got {cell.bs_count}")
    if not 0.0 < cell.ss_distance_m <= cell.radius_km * 1000.0:
        problems.append(
            f"subscriber distance {cell.ss_distance_m} m must lie inside "
            f"the {cell.radius_km} km cell radius"
        )

    phy_cfg = dict(cfg.get("phy") or {})
    phy_kwargs = {
        "channel_bandwidth_mhz": float(phy_cfg.get("channel_bandwidth_mhz", 5.0)),
        "frame_duration_ms": float(phy_cfg.get("frame_duration_ms", 5.0)),
    }
    if phy_cfg.get("mcs_table") is not None:
        try:
            phy_kwargs["mcs_table"] = tuple(
                phy.McsProfile(**row) for row in phy_cfg["mcs_table"]
            )
        except (TypeError, ValueError) as exc:
            problems.append(f"phy: bad mcs_table row: {exc}")
    try:
        phy_profile = phy.PhyProfile(**phy_kwargs)
    except ValueError as exc:
        problems.append(f"phy: {exc}")
        phy_profile = phy.PhyProfile()

    mcs_cfg = dict(cfg.get("mcs") or {})
    mcs_mode = McsMode(
        mode=str(mcs_cfg.get("mode", "adaptive")),
        modulation=mcs_cfg.get("modulation"),
        coding=mcs_cfg.get("coding"),
        force=bool(mcs_cfg.get("force", False)),
    )
    if mcs_mode.mode not in ("adaptive", "fixed"):
        problems.append(f"mcs mode must be adaptive or fixed, got {mcs_mode.mode!r}")
    elif mcs_mode.mode == "fixed":
        if find_mcs(phy_profile.mcs_table, mcs_mode.modulation, mcs_mode.coding) is None:
            problems.append(
                f"mcs: no table entry for {mcs_mode.modulation!r} {mcs_mode.coding!r}"
            )

    link_cfg = dict(cfg.get("link") or {})
    pl_cfg = dict(link_cfg.get("path_loss") or {"model": "erceg_suburban"})
    shadow_sigma = float(pl_cfg.get("shadow_sigma_db", 0.0) or 0.0)
    if shadow_sigma < 0.0:
        problems.append(f"shadow_sigma_db must be >= 0, got {shadow_sigma}")
    try:
        model = propagation.model_from_config(pl_cfg)
    except (TypeError, ValueError) as exc:
        problems.append(f"path_loss: {exc}")
        model = propagation.ErcegSuburban()
    if shadow_sigma > 0.0 and isinstance(model, propagation.ErcegSuburban):
        # One static shadowing draw per scenario; the link never moves.
        draw = random.Random(seed).gauss(0.0, shadow_sigma)
        model = replace(model, shadow_s_db=model.shadow_s_db + draw)
    if (
        isinstance(model, propagation.ErcegSuburban)
        and cell.ss_distance_m < propagation.ERCEG_REFERENCE_DISTANCE_M
    ):
        problems.append(
            f"the suburban model holds for d >= "
            f"{propagation.ERCEG_REFERENCE_DISTANCE_M:g} m, "
            f"got {cell.ss_distance_m} m"
        )
    try:
        budget = propagation.LinkBudget(
            tx_power_dbm=float(link_cfg.get("tx_power_dbm", 20.0)),
            carrier_freq_mhz=float(link_cfg.get("carrier_freq_mhz", 3500.0)),
            bandwidth_hz=float(
                link_cfg.get("bandwidth_hz", phy_profile.channel_bandwidth_mhz * 1e6)
            ),
            noise_figure_db=float(link_cfg.get("noise_figure_db", 7.0)),
            model=model,
        )
    except ValueError as exc:
        problems.append(f"link: {exc}")
        budget = propagation.LinkBudget(20.0, 3500.0, 5e6, 7.0, model)

    wired_cfg = dict(cfg.get("wired") or {})
    wired = WiredPath(
        element_count=int(wired_cfg.get("element_count", WiredPath.element_count)),
        per_element_proc_ms=float(
            wired_cfg.get("per_element_proc_ms", WiredPath.per_element_proc_ms)
        ),
        per_element_prop_ms=float(
            wired_cfg.get("per_element_prop_ms", WiredPath.per_element_prop_ms)
        ),
    )
    if wired.element_count < 0:
        problems.append(f"wired element_count must be >= 0, got {wired.element_count}")
    if wired.per_element_proc_ms < 0.0 or wired.per_element_prop_ms < 0.0:
        problems.append("wired per-element delays must be >= 0")

    flow_cfgs = cfg.get("flows") or []
    if not flow_cfgs:
        problems.append("flows: at least one flow is required")
    flows: list[FlowSpec] = []
    traces: dict[str, traffic.MediaTrace] = {}
    seen_ids: set[str] = set()
    for i, fc in enumerate(flow_cfgs):
        fc = dict(fc or {})
        flow_id = str(fc.get("id") or "")
        if not flow_id:
            problems.append(f"flows[{i}]: missing id")
            flow_id = f"flow{i}"
        if flow_id in seen_ids:
            problems.append(f"flows[{i}]: duplicate id {flow_id!r}")
            continue
        seen_ids.add(flow_id)
        try:
            service_class = mac.ServiceClass(str(fc.get("service_class", "")))
        except ValueError:
            problems.append(
                f"{flow_id}: unknown service class {fc.get('service_class')!r}"
            )
            continue
        qos_cfg = dict(fc.get("qos") or {})
        unknown = sorted(set(qos_cfg) - set(mac.QOS_FIELDS))
        if unknown:
            problems.append(f"{flow_id}: unknown qos fields {unknown}")
        try:
            qos = _coerce_qos(qos_cfg)
        except (TypeError, ValueError) as exc:
            problems.append(f"{flow_id}: bad qos value: {exc}")
            continue
        for msg in mac.validate_flow(service_class, qos):
            problems.append(f"{flow_id}: {msg}")
        queue_cap = int(
            fc.get("queue_capacity_bytes", mac.DEFAULT_QUEUE_CAPACITY_BYTES)
        )
        if queue_cap <= 0:
            problems.append(
                f"{flow_id}: queue_capacity_bytes must be positive, got {queue_cap}"
            )
        source = dict(fc.get("source") or {})
        trace = _resolve_source(
            flow_id, i, source, duration_s, seed, base_dir, problems
        )
        if trace is not None:
            traces[flow_id] = trace
        flows.append(
            FlowSpec(
                id=flow_id,
                service_class=service_class,
                qos=qos,
                source=source,
                queue_capacity_bytes=queue_cap,
            )
        )

    if problems:
        raise ScenarioError(problems)
    return Scenario(
        duration_s=duration_s,
        seed=seed,
        cell=cell,
        phy_profile=phy_profile,
        mcs_mode=mcs_mode,
        budget=budget,
        wired=wired,
        flows=tuple(flows),
        traces=traces,
        mtu_payload_bytes=mtu,
    )


def resolve_link(scenario: Scenario) -> LinkState:
    """Evaluate the static link once: SINR, modulation choice, capacity.

    Adaptive mode in outage carries nothing (capacity 0). A pinned entry in
    outage still transmits at its nominal rate but every packet is lost on
    the air unless the pin is forced.
    """
    distance = scenario.cell.ss_distance_m
    budget = scenario.budget
    loss_db = propagation.path_loss_db(budget.model, distance, budget.carrier_freq_mhz)
    sinr_db = propagation.compute_sinr(budget, distance)
    profile = scenario.phy_profile
    mode = scenario.mcs_mode
    if mode.mode == "fixed":
        row = find_mcs(profile.mcs_table, mode.modulation, mode.coding)
        if row is None:
            raise ValueError(
                f"no MCS table entry for {mode.modulation!r} {mode.coding!r}"
            )
        outage = sinr_db < row.min_sinr_db
        deliver = DROP_OUTAGE if outage and not mode.force else DELIVERED
        capacity = phy.frame_capacity_bits(row, profile.frame_duration_ms)
        return LinkState(sinr_db, loss_db, row, outage, capacity, deliver)
    row = phy.select_mcs(profile.mcs_table, sinr_db)
    if row is None:
        return LinkState(sinr_db, loss_db, None, True, 0, DELIVERED)
    capacity = phy.frame_capacity_bits(row, profile.frame_duration_ms)
    return LinkState(sinr_db, loss_db, row, False, capacity, DELIVERED)


def build_service_order(flows) -> list:
    """Group flows for the scheduler's round-robin rotation.

    Groups are ordered by class rank, then by descending traffic priority
    (nrtPS and BE form one subgroup per priority value); members keep their
    configuration order. Returns [(class_rank, [flow_index, ...]), ...].
    """
    def prio(ix: int) -> int:
        return flows[ix].qos.traffic_priority or 0

    order = sorted(
        range(len(flows)),
        key=lambda ix: (mac.CLASS_RANK[flows[ix].service_class], -prio(ix), ix),
    )
    groups: list = []
    last_key = None
    for ix in order:
        key = (mac.CLASS_RANK[flows[ix].service_class], prio(ix))
        if key == last_key:
            groups[-1][1].append(ix)
        else:
            groups.append((key[0], [ix]))
            last_key = key
    return groups


def flow_intervals(scenario: Scenario) -> dict:
    """Nominal media-frame interval in ms per flow id (the jitter schedule)."""
    return {
        spec.id: 1000.0 / scenario.traces[spec.id].nominal_fps
        for spec in scenario.flows
    }


def frame_count(duration_ms: float, frame_ms: float) -> int:
    """Number of frame boundaries k*frame_ms strictly below duration_ms."""
    n = int(math.ceil(duration_ms / frame_ms))
    while n > 0 and (n - 1) * frame_ms >= duration_ms:
        n -= 1
    while n * frame_ms < duration_ms:
        n += 1
    return n


def run(scenario: Scenario, kernel: str = "auto") -> RunResult:
    """Run a scenario through the MAC kernel and assemble the report."""
    core, backend = load_kernel(kernel)
    link = resolve_link(scenario)
    profile = scenario.phy_profile
    frame_ms = profile.frame_duration_ms
    duration_ms = scenario.duration_s * 1000.0
    n_frames = frame_count(duration_ms, frame_ms)

    records = []  # (created_ms, flow_index, media_frame_index, size_bytes)
    for ix, spec in enumerate(scenario.flows):
        trace = scenario.traces[spec.id].truncated(scenario.duration_s)
        for frame in trace.frames:
            for pkt in traffic.packetize(
                frame, scenario.mtu_payload_bytes, flow_id=spec.id
            ):
                records.append((pkt.created_at_ms, ix, frame.index, pkt.size_bytes))
    records.sort(key=lambda r: (r[0], r[1]))

    n = len(records)
    created = np.array([r[0] for r in records], dtype=np.float64)
    flow_of = np.array([r[1] for r in records], dtype=np.int32)
    sizes = np.array([r[3] for r in records], dtype=np.int64)
    arrival = created + scenario.wired.ingress_delay_ms()

    flows = scenario.flows
    latency = np.array(
        [
            -1.0 if f.qos.max_latency_ms is None else f.qos.max_latency_ms
            for f in flows
        ],
        dtype=np.float64,
    )
    queue_cap = np.array([f.queue_capacity_bytes for f in flows], dtype=np.int64)
    max_sustained = np.array(
        [f.qos.max_sustained_rate_bps for f in flows], dtype=np.float64
    )
    min_reserved = np.array(
        [f.qos.min_reserved_rate_bps or 0.0 for f in flows], dtype=np.float64
    )
    ranks = np.array([mac.CLASS_RANK[f.service_class] for f in flows], dtype=np.int32)

    groups = build_service_order(flows)
    members = np.array(
        [ix for _, member_ixs in groups for ix in member_ixs], dtype=np.int32
    )
    offsets = np.zeros(len(groups) + 1, dtype=np.int32)
    for g, (_, member_ixs) in enumerate(groups):
        offsets[g + 1] = offsets[g] + len(member_ixs)
    group_class = np.array([rank for rank, _ in groups], dtype=np.int32)

    status = np.full(n, IN_FLIGHT, dtype=np.int8)
    done_ms = np.zeros(n, dtype=np.float64)
    rate = phy.rate_bps(link.mcs, "DL") if link.mcs is not None else 1.0

    core.simulate_mac(
        arrival,
        sizes,
        flow_of,
        latency,
        queue_cap,
        max_sustained,
        min_reserved,
        ranks,
        members,
        offsets,
        group_class,
        n_frames,
        frame_ms,
        duration_ms,
        rate,
        link.capacity_bits,
        link.deliver_status,
        status,
        done_ms,
    )

    proc_ms = scenario.wired.proc_delay_ms
    wired_prop_ms = scenario.wired.prop_delay_ms
    radio_prop_ms = (
        scenario.cell.ss_distance_m / propagation.SPEED_OF_LIGHT_M_S * 1000.0
    )
    outcomes = []
    for i in range(n):
        fate = int(status[i])
        size_i = int(sizes[i])
        flow_id = flows[int(flow_of[i])].id
        frame_index = records[i][2]
        created_i = float(created[i])
        if fate == DELIVERED:
            d_trans = phy.tx_time(size_i, link.mcs) * 1000.0
            finished = float(done_ms[i])
            d_queue = finished - float(arrival[i]) - d_trans
            if d_queue < 0.0:  # sub-ns float residue from fragment summation
                d_queue = 0.0
            outcomes.append(
                metrics.PacketOutcome(
                    packet_id=i,
                    flow_id=flow_id,
                    frame_index=frame_index,
                    size_bytes=size_i,
                    status=metrics.STATUS_DELIVERED,
                    created_ms=created_i,
                    delivered_ms=finished + radio_prop_ms,
                    d_proc_ms=proc_ms,
                    d_queue_ms=d_queue,
                    d_trans_ms=d_trans,
                    d_prop_ms=wired_prop_ms + radio_prop_ms,
                )
            )
        elif fate == IN_FLIGHT:
            outcomes.append(
                metrics.PacketOutcome(
                    packet_id=i,
                    flow_id=flow_id,
                    frame_index=frame_index,
                    size_bytes=size_i,
                    status=metrics.STATUS_IN_FLIGHT,
                    created_ms=created_i,
                )
            )
        else:
            outcomes.append(
                metrics.PacketOutcome(
                    packet_id=i,
                    flow_id=flow_id,
                    frame_index=frame_index,
                    size_bytes=size_i,
                    status=metrics.STATUS_DROPPED,
                    reason=_DROP_REASON[fate],
                    created_ms=created_i,
                )
            )

    intervals = flow_intervals(scenario)
    link_info = {
        "mode": scenario.mcs_mode.mode,
        "forced": scenario.mcs_mode.force,
        "distance_m": scenario.cell.ss_distance_m,
        "sinr_db": link.sinr_db,
        "path_loss_db": link.path_loss_db,
        "mcs": link.mcs.name if link.mcs is not None else None,
        "outage": link.outage,
        "capacity_bits_per_frame": link.capacity_bits,
    }
    report = metrics.build_report(
        outcomes, intervals, scenario.duration_s, link=link_info
    )
    return RunResult(
        scenario=scenario,
        backend=backend,
        link=link,
        outcomes=tuple(outcomes),
        report=report,
    )
