"""Media traffic sources: frame traces, CBR synthesis and MTU packetization.

The canonical trace format is CSV with the header ``index,t_ms,size_bytes,kind``.
Lines starting with ``#`` are comments. An empty ``t_ms`` cell means the
frame timestamp is derived from the nominal frame rate as index * 1000 / fps.
Timestamps must be non-decreasing and sizes positive.

`synthesize_vbr` produces deterministic, seeded variable-bitrate traces with
a GOP-like size pattern and a slowly varying scene level. Presets are tuned
per codec label so the same mean rate comes with different burstiness, which
is what separates the codecs in scenario studies.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .mac import Packet

TRACE_HEADER = ("index", "t_ms", "size_bytes", "kind")
FRAME_KINDS = ("video", "audio")

DEFAULT_MTU_PAYLOAD_BYTES = 1460
DEFAULT_VIDEO_FPS = 30.0
DEFAULT_AUDIO_FPS = 21.6
DEFAULT_AUDIO_FRAME_BYTES = 741


@dataclass(frozen=True)
class FrameRecord:
    """One media frame: trace index, timestamp, payload size, stream kind."""

    index: int
    t_ms: float
    size_bytes: int
    kind: str

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError(f"frame index must be >= 0, got {self.index}")
        if self.t_ms < 0.0:
            raise ValueError(f"frame time must be >= 0, got {self.t_ms}")
        if self.size_bytes <= 0:
            raise ValueError(f"frame size must be positive, got {self.size_bytes}")
        if self.kind not in FRAME_KINDS:
            raise ValueError(f"frame kind must be one of {FRAME_KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class MediaTrace:
    """An ordered sequence of frames plus the stream's nominal frame rate."""

    frames: tuple[FrameRecord, ...]
    nominal_fps: float
    label: str = ""

    def __post_init__(self) -> None:
        if self.nominal_fps <= 0.0:
            raise ValueError("nominal fps must be positive")

    def duration_ms(self) -> float:
        return self.frames[-1].t_ms if self.frames else 0.0

    def total_bytes(self) -> int:
        return sum(f.size_bytes for f in self.frames)

    def mean_rate_bps(self, duration_s: float) -> float:
        if duration_s <= 0.0:
            raise ValueError("duration must be positive")
        return 8.0 * self.total_bytes() / duration_s

    def truncated(self, duration_s: float) -> "MediaTrace":
        """Frames with t_ms strictly inside the run window."""
        limit_ms = duration_s * 1000.0
        kept = tuple(f for f in self.frames if f.t_ms < limit_ms)
        return MediaTrace(kept, self.nominal_fps, self.label)


def load_trace(
    path: str | Path,
    kind: str,
    nominal_fps: float,
    label: str = "",
) -> MediaTrace:
    """Read a canonical trace CSV.

    Malformed input raises ValueError naming the offending line; an empty
    trace (no frame rows) is also an error.
    """
    path = Path(path)
    if kind not in FRAME_KINDS:
        raise ValueError(f"kind must be one of {FRAME_KINDS}, got {kind!r}")
    frames: list[FrameRecord] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header_seen = False
        for lineno, row in enumerate(reader, start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if not header_seen:
                if tuple(cell.strip() for cell in row) != TRACE_HEADER:
                    raise ValueError(
                        f"{path}:{lineno}: expected header {','.join(TRACE_HEADER)}"
                    )
                header_seen = True
                continue
            if len(row) != len(TRACE_HEADER):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(TRACE_HEADER)} fields, got {len(row)}"
                )
            try:
                index = int(row[0])
                t_ms = float(row[1]) if row[1].strip() else index * 1000.0 / nominal_fps
                size_bytes = int(row[2])
                row_kind = row[3].strip()
                frame = FrameRecord(index, t_ms, size_bytes, row_kind)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if row_kind != kind:
                raise ValueError(
                    f"{path}:{lineno}: frame kind {row_kind!r} does not match "
                    f"declared kind {kind!r}"
                )
            if index != len(frames):
                raise ValueError(
                    f"{path}:{lineno}: frame indexes must run 0,1,2,...; "
                    f"expected {len(frames)}, got {index}"
                )
            if frames and frame.t_ms < frames[-1].t_ms:
                raise ValueError(
                    f"{path}:{lineno}: timestamps must be non-decreasing "
                    f"({frame.t_ms} after {frames[-1].t_ms})"
                )
            frames.append(frame)
    if not header_seen:
        raise ValueError(f"{path}: missing trace header")
    if not frames:
        raise ValueError(f"{path}: trace holds no frames")
    return MediaTrace(tuple(frames), nominal_fps, label or path.stem)


def dump_trace(trace: MediaTrace, path: str | Path) -> None:
    """Write a trace in canonical form (the exact form `load_trace` reads)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for frame in trace.frames:
            writer.writerow(
                [frame.index, repr(frame.t_ms), frame.size_bytes, frame.kind]
            )


def synthesize_cbr(
    duration_s: float,
    fps: float,
    frame_size_bytes: int,
    kind: str = "audio",
    label: str = "",
) -> MediaTrace:
    """Constant-bitrate source: equal frames at t = k / fps for t < duration."""
    if duration_s <= 0.0:
        raise ValueError("duration must be positive")
    if fps <= 0.0:
        raise ValueError("fps must be positive")
    frames = []
    k = 0
    while k / fps < duration_s:
        frames.append(FrameRecord(k, k * 1000.0 / fps, frame_size_bytes, kind))
        k += 1
    return MediaTrace(tuple(frames), fps, label or f"cbr-{kind}")


#: VBR generator presets per codec label: same target rate, different shape.
#: peak_boost scales intra-coded frames, scene_sigma drives the slow level
#: modulation; larger values mean burstier traffic.
CODEC_PRESETS = {
    "MPEG-4": {"gop": 12, "peak_boost": 2.8, "scene_sigma": 0.35},
    "AVC": {"gop": 12, "peak_boost": 4.0, "scene_sigma": 0.5},
    "SVC": {"gop": 12, "peak_boost": 2.0, "scene_sigma": 0.2},
}


def synthesize_vbr(
    duration_s: float,
    fps: float,
    mean_rate_bps: float,
    seed: int,
    *,
    gop: int = 12,
    peak_boost: float = 2.8,
    scene_sigma: float = 0.35,
    kind: str = "video",
    label: str = "vbr",
) -> MediaTrace:
    """Deterministic VBR source with a GOP pattern and scene-level drift.

    Raw sizes follow intra/predicted/bidirectional multipliers modulated by a
    lognormal AR(1) scene level, then get rescaled so the trace carries
    exactly duration * rate / 8 bytes (up to per-frame integer rounding).
    """
    if mean_rate_bps <= 0.0:
        raise ValueError("mean rate must be positive")
    if gop < 1:
        raise ValueError("gop must be >= 1")
    rng = random.Random(seed)
    count = 0
    while count / fps < duration_s:
        count += 1
    weights = []
    scene = 0.0
    rho = 0.95
    for k in range(count):
        scene = rho * scene + math.sqrt(1.0 - rho * rho) * rng.gauss(0.0, scene_sigma)
        if k % gop == 0:
            type_mult = peak_boost
        elif k % 3 == 0:
            type_mult = 1.0
        else:
            type_mult = 0.6
        weights.append(type_mult * math.exp(scene))
    total_weight = sum(weights)
    target_bytes = mean_rate_bps * duration_s / 8.0
    frames = []
    for k, weight in enumerate(weights):
        size = max(1, round(target_bytes * weight / total_weight))
        frames.append(FrameRecord(k, k * 1000.0 / fps, size, kind))
    return MediaTrace(tuple(frames), fps, label)


def synthesize_codec_trace(
    codec: str,
    duration_s: float,
    mean_rate_bps: float,
    seed: int,
    fps: float = DEFAULT_VIDEO_FPS,
) -> MediaTrace:
    """VBR trace using the named codec preset."""
    if codec not in CODEC_PRESETS:
        raise ValueError(f"unknown codec {codec!r}; presets: {sorted(CODEC_PRESETS)}")
    preset = CODEC_PRESETS[codec]
    return synthesize_vbr(
        duration_s,
        fps,
        mean_rate_bps,
        seed,
        gop=preset["gop"],
        peak_boost=preset["peak_boost"],
        scene_sigma=preset["scene_sigma"],
        label=codec,
    )


def packetize(
    frame: FrameRecord,
    mtu_payload_bytes: int = DEFAULT_MTU_PAYLOAD_BYTES,
    *,
    flow_id: str = "",
    id_start: int = 0,
) -> list[Packet]:
    """Split a frame into MTU-sized packets plus a short tail.

    ceil(size / mtu) packets are produced, every one full-size except
    possibly the last; byte totals are conserved exactly. Packets inherit
    the frame timestamp as their creation time.
    """
    if mtu_payload_bytes <= 0:
        raise ValueError("MTU payload size must be positive")
    packets = []
    remaining = frame.size_bytes
    next_id = id_start
    while remaining > 0:
        chunk = mtu_payload_bytes if remaining > mtu_payload_bytes else remaining
        packets.append(
            Packet(
                id=next_id,
                flow_id=flow_id,
                size_bytes=chunk,
                created_at_ms=frame.t_ms,
                fragment_of_frame=frame.index,
            )
        )
        remaining -= chunk
        next_id += 1
    return packets
