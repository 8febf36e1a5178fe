"""Command-line front end.

Subcommands:

* ``run``        one scenario -> report.json, timeseries.csv, optional packets.csv
* ``matrix``     sweep a study family across the MCS table -> matrix.csv + cells
* ``plot-data``  pivot a matrix.csv into a plotting-friendly grid
* ``validate``   check a config and report every problem
* ``gen-traces`` write the bundled synthetic codec traces as CSV files

Every artifact is deterministic: the same config, seed, and duration produce
byte-identical output regardless of which MAC kernel is compiled in.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import copy
import csv
import dataclasses
import json
import os
import sys

from . import engine, mac, metrics, phy, traffic

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2

FAMILIES = ("codec", "path_loss", "service_class")
MATRIX_HEADER = (
    "family",
    "mcs",
    "axis_value",
    "mean_jitter_ms",
    "mean_e2e_ms",
    "dropped_bps",
    "throughput_bps",
    "status",
)
MATRIX_METRICS = ("mean_jitter_ms", "mean_e2e_ms", "dropped_bps", "throughput_bps")

SERVICE_CLASS_AXIS = tuple(cls.value for cls in mac.ServiceClass)
PATH_LOSS_AXIS = ("free_space", "erceg_suburban", "pedestrian", "vehicular")
CODEC_AXIS = ("MPEG-4", "AVC", "SVC")


def load_config(path: str) -> dict:
    """Read a JSON config, resolving trace paths against the config's dir."""
    with open(path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError(f"{path}: top-level config must be a JSON object")
    base = os.path.dirname(os.path.abspath(path))
    for fc in cfg.get("flows") or []:
        src = (fc or {}).get("source") or {}
        trace_path = src.get("path")
        if src.get("type") == "trace" and trace_path and not os.path.isabs(str(trace_path)):
            src["path"] = os.path.join(base, str(trace_path))
    return cfg


def _write_json(payload: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _summary_line(result: engine.RunResult) -> str:
    r = result.report
    mcs = r.link.get("mcs") or "outage"
    return (
        f"backend={result.backend} mcs=\"{mcs}\" "
        f"sinr_db={r.link['sinr_db']:.2f} plr={r.plr:.6f} "
        f"mean_e2e_ms={r.mean_e2e_ms:.3f} mean_jitter_ms={r.mean_jitter_ms:.3f} "
        f"throughput_bps={r.throughput_bps:.0f}"
    )


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.duration is not None:
        cfg["duration_s"] = args.duration
    try:
        scenario = engine.build_scenario(cfg)
    except engine.ScenarioError as exc:
        for problem in exc.problems:
            print(f"config: {problem}", file=sys.stderr)
        return EXIT_USAGE
    result = engine.run(scenario, kernel=args.kernel)

    os.makedirs(args.out, exist_ok=True)
    _write_json(cfg, os.path.join(args.out, "config.json"))
    with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(result.report.to_json())
    rows = metrics.timeseries_rows(
        result.outcomes, engine.flow_intervals(scenario), scenario.duration_s
    )
    metrics.write_timeseries_csv(rows, os.path.join(args.out, "timeseries.csv"))
    if args.packets_log:
        metrics.write_packets_csv(
            result.outcomes, os.path.join(args.out, "packets.csv")
        )
    print(_summary_line(result))
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    try:
        scenario = engine.build_scenario(cfg)
    except engine.ScenarioError as exc:
        for problem in exc.problems:
            print(f"config: {problem}", file=sys.stderr)
        return EXIT_USAGE
    link = engine.resolve_link(scenario)
    mcs = link.mcs.name if link.mcs is not None else "outage"
    print(
        f"ok: {len(scenario.flows)} flows, duration_s={scenario.duration_s:g}, "
        f"sinr_db={link.sinr_db:.2f}, mcs=\"{mcs}\""
    )
    return EXIT_OK


def cmd_gen_traces(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    for codec in CODEC_AXIS:
        trace = traffic.synthesize_codec_trace(
            codec, args.duration, args.mean_rate, args.seed, fps=args.fps
        )
        name = codec.lower().replace("-", "") + ".csv"
        path = os.path.join(args.out, name)
        traffic.dump_trace(trace, path)
        print(
            f"wrote {path}: frames={len(trace.frames)} "
            f"mean_rate_bps={trace.mean_rate_bps(args.duration):.0f}"
        )
    return EXIT_OK


def _slug(text: str) -> str:
    return str(text).replace("/", "_").replace(" ", "-")


def _vbr_flows(cfg: dict) -> list[dict]:
    return [
        fc
        for fc in cfg.get("flows") or []
        if ((fc or {}).get("source") or {}).get("type") == "vbr"
    ]


_SOURCE_DEFAULT_KIND = {"vbr": "video", "cbr": "audio", "trace": "video"}


def _flow_kind(fc: dict) -> str:
    src = (fc or {}).get("source") or {}
    return str(src.get("kind", _SOURCE_DEFAULT_KIND.get(src.get("type"), "video")))


def _remap_flow_class(fc: dict, service_class: mac.ServiceClass) -> None:
    template = dict(fc.get("qos") or {})
    qos = mac.qos_for_class(
        service_class,
        float(template.get("max_sustained_rate_bps", 0.0)),
        min_reserved_rate_bps=template.get("min_reserved_rate_bps"),
        max_latency_ms=template.get("max_latency_ms"),
        tolerated_jitter_ms=template.get("tolerated_jitter_ms"),
        traffic_priority=template.get("traffic_priority"),
    )
    fc["service_class"] = service_class.value
    fc["qos"] = {
        key: value
        for key, value in dataclasses.asdict(qos).items()
        if value is not None
    }


def _pin_mcs(cfg: dict, row: phy.McsProfile) -> None:
    cfg["mcs"] = {"mode": "fixed", "modulation": row.modulation, "coding": row.coding}


def matrix_cells(cfg: dict, family: str, expand_codec_mcs: bool) -> list[dict]:
    """Expand one study family into per-cell configs.

    codec          vary the VBR codec preset (base MCS setting, or the whole
                   table with --expand-codec-mcs)
    path_loss      pin each MCS table entry under each propagation model
    service_class  pin each MCS table entry and carry the video flows (the
                   service under study) on each scheduling class; non-video
                   flows keep their configured class
    """
    table = phy.default_mcs_table()
    cells: list[dict] = []

    def add(mcs_label: str, axis: str, patched: dict) -> None:
        cells.append(
            {
                "family": family,
                "mcs_label": mcs_label,
                "axis": axis,
                "config": patched,
                "dir": f"{family}/{_slug(mcs_label)}__{_slug(axis)}",
            }
        )

    if family == "codec":
        if not _vbr_flows(cfg):
            raise ValueError("codec family needs at least one flow with a vbr source")
        mcs_rows = list(table) if expand_codec_mcs else [None]
        for row in mcs_rows:
            for codec in CODEC_AXIS:
                patched = copy.deepcopy(cfg)
                for fc in _vbr_flows(patched):
                    fc["source"]["codec"] = codec
                if row is not None:
                    _pin_mcs(patched, row)
                add(row.name if row is not None else "adaptive", codec, patched)
        return cells

    if family == "path_loss":
        for row in table:
            for model in PATH_LOSS_AXIS:
                patched = copy.deepcopy(cfg)
                _pin_mcs(patched, row)
                patched.setdefault("link", {})["path_loss"] = {"model": model}
                add(row.name, model, patched)
        return cells

    if family == "service_class":
        for row in table:
            for cls_name in SERVICE_CLASS_AXIS:
                patched = copy.deepcopy(cfg)
                _pin_mcs(patched, row)
                for fc in patched.get("flows") or []:
                    if _flow_kind(fc) == "video":
                        _remap_flow_class(fc, mac.ServiceClass(cls_name))
                add(row.name, cls_name, patched)
        return cells

    raise ValueError(f"unknown family {family!r}; choices: {FAMILIES}")


def _run_cell(cell: dict) -> dict:
    """Worker for one matrix cell; failures become status text, not crashes."""
    try:
        scenario = engine.build_scenario(cell["config"])
        result = engine.run(scenario, kernel=cell["kernel"])
        report = result.report
        return {
            "error": None,
            "mcs": report.link.get("mcs") or cell["mcs_label"],
            "report_json": report.to_json(),
            "metrics": {name: getattr(report, name) for name in MATRIX_METRICS},
        }
    except Exception as exc:  # a sweep must finish; the row records the failure
        return {
            "error": f"{type(exc).__name__}: {exc}",
            "mcs": cell["mcs_label"],
            "report_json": None,
            "metrics": {},
        }


def cmd_matrix(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.duration is not None:
        cfg["duration_s"] = args.duration

    families = FAMILIES if args.family == "all" else (args.family,)
    try:
        cells = []
        for family in families:
            cells.extend(matrix_cells(cfg, family, args.expand_codec_mcs))
    except ValueError as exc:
        print(f"matrix: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for cell in cells:
        cell["kernel"] = args.kernel

    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_cell, cells))
    else:
        results = [_run_cell(cell) for cell in cells]

    os.makedirs(args.out, exist_ok=True)
    failures = 0
    rows = []
    for cell, outcome in zip(cells, results):
        cell_dir = os.path.join(args.out, cell["dir"])
        os.makedirs(cell_dir, exist_ok=True)
        _write_json(cell["config"], os.path.join(cell_dir, "config.json"))
        status = "ok"
        if outcome["error"] is None:
            with open(
                os.path.join(cell_dir, "report.json"), "w", encoding="utf-8"
            ) as fh:
                fh.write(outcome["report_json"])
        else:
            failures += 1
            status = f"error: {outcome['error']}"
        row = {
            "family": cell["family"],
            "mcs": outcome["mcs"],
            "axis_value": cell["axis"],
            "status": status,
        }
        for name in MATRIX_METRICS:
            value = outcome["metrics"].get(name)
            row[name] = repr(value) if value is not None else ""
        rows.append(row)
        print(f"{cell['family']} mcs=\"{row['mcs']}\" {cell['axis']}: {status}")

    matrix_path = os.path.join(args.out, "matrix.csv")
    with open(matrix_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=MATRIX_HEADER)
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {matrix_path}: {len(rows)} cells, {failures} failed")
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_plot_data(args) -> int:
    """Pivot matrix rows of one family: rows = MCS, columns = axis values."""
    with open(args.matrix, "r", encoding="utf-8", newline="") as fh:
        rows = [row for row in csv.DictReader(fh)]
    if args.group_by is not None:
        rows = [row for row in rows if row.get("family") == args.group_by]

    row_labels = list(dict.fromkeys(row["mcs"] for row in rows))
    col_labels = list(dict.fromkeys(row["axis_value"] for row in rows))
    grid = {(row["mcs"], row["axis_value"]): row.get(args.metric, "") for row in rows}

    out = sys.stdout
    close = False
    if args.out is not None:
        out = open(args.out, "w", encoding="utf-8", newline="")
        close = True
    try:
        writer = csv.writer(out)
        writer.writerow(["mcs"] + col_labels)
        for label in row_labels:
            writer.writerow(
                [label] + [grid.get((label, col), "") for col in col_labels]
            )
    finally:
        if close:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wimaxsim",
        description="Deterministic downlink streaming simulator for fixed "
        "broadband-wireless cells.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario and write its report")
    run_p.add_argument("--config", required=True, help="scenario JSON")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--seed", type=int, default=None, help="override the seed")
    run_p.add_argument(
        "--duration", type=float, default=None, help="override duration_s"
    )
    run_p.add_argument("--kernel", choices=engine.KERNEL_CHOICES, default="auto")
    run_p.add_argument(
        "--packets-log", action="store_true", help="also write packets.csv"
    )
    run_p.set_defaults(func=cmd_run)

    matrix_p = sub.add_parser("matrix", help="sweep a study family")
    matrix_p.add_argument("--config", required=True)
    matrix_p.add_argument("--out", required=True)
    matrix_p.add_argument(
        "--family", choices=FAMILIES + ("all",), default="all"
    )
    matrix_p.add_argument("--seed", type=int, default=None)
    matrix_p.add_argument("--duration", type=float, default=None)
    matrix_p.add_argument("--jobs", type=int, default=1)
    matrix_p.add_argument("--kernel", choices=engine.KERNEL_CHOICES, default="auto")
    matrix_p.add_argument(
        "--expand-codec-mcs",
        action="store_true",
        help="run the codec family at every MCS table entry, not just the base",
    )
    matrix_p.set_defaults(func=cmd_matrix)

    plot_p = sub.add_parser("plot-data", help="pivot matrix.csv for plotting")
    plot_p.add_argument("--matrix", required=True, help="matrix.csv path")
    plot_p.add_argument(
        "--metric", choices=MATRIX_METRICS, default="mean_jitter_ms"
    )
    plot_p.add_argument(
        "--group-by",
        choices=FAMILIES,
        default=None,
        help="keep only this family's rows before pivoting",
    )
    plot_p.add_argument("--out", default=None, help="write here instead of stdout")
    plot_p.set_defaults(func=cmd_plot_data)

    val_p = sub.add_parser("validate", help="check a config without running it")
    val_p.add_argument("--config", required=True)
    val_p.set_defaults(func=cmd_validate)

    gen_p = sub.add_parser(
        "gen-traces", help="write the synthetic codec traces as CSV"
    )
    gen_p.add_argument("--out", required=True)
    gen_p.add_argument("--duration", type=float, default=60.0)
    gen_p.add_argument("--seed", type=int, default=7)
    gen_p.add_argument("--mean-rate", type=float, default=4.9e6)
    gen_p.add_argument("--fps", type=float, default=30.0)
    gen_p.set_defaults(func=cmd_gen_traces)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"wimaxsim {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
