"""Deterministic downlink streaming simulator for fixed broadband-wireless cells.

The package models one cell of a fixed wireless access network carrying
video-on-demand traffic: a link budget picks the modulation and coding for a
static subscriber, media traces become MAC-frame-scheduled packets, and every
run ends in a reproducible metrics report.
"""

from .engine import (
    CellConfig,
    McsMode,
    RunResult,
    Scenario,
    ScenarioError,
    WiredPath,
    build_scenario,
    load_kernel,
    resolve_link,
    run,
)
from .mac import QosParams, ServiceClass, qos_for_class
from .metrics import MetricsReport, PacketOutcome, build_report
from .phy import McsProfile, PhyProfile, default_mcs_table, select_mcs
from .propagation import LinkBudget, compute_sinr, noise_floor_dbm, path_loss_db
from .traffic import MediaTrace, load_trace, packetize, synthesize_codec_trace

__version__ = "0.1.0"

__all__ = [
    "CellConfig",
    "LinkBudget",
    "McsMode",
    "McsProfile",
    "MediaTrace",
    "MetricsReport",
    "PacketOutcome",
    "PhyProfile",
    "QosParams",
    "RunResult",
    "Scenario",
    "ScenarioError",
    "ServiceClass",
    "WiredPath",
    "__version__",
    "build_report",
    "build_scenario",
    "compute_sinr",
    "default_mcs_table",
    "load_kernel",
    "load_trace",
    "noise_floor_dbm",
    "packetize",
    "path_loss_db",
    "qos_for_class",
    "resolve_link",
    "run",
    "select_mcs",
    "synthesize_codec_trace",
]
