"""Time the compiled MAC kernel against the pure-Python fallback.

Runs the same overloaded scenario through both backends, checks that the
reports are byte-identical, and prints wall times plus the speedup. Usage:

    python3 benchmarks/bench_core.py [--duration 30] [--repeats 3]
"""

import argparse
import copy
import time

from wimaxsim import engine


def scenario_config(duration_s: float) -> dict:
    return {
        "duration_s": duration_s,
        "seed": 7,
        "cell": {"radius_km": 0.2, "bs_count": 7, "ss_distance_m": 150.0},
        "phy": {"channel_bandwidth_mhz": 5.0, "frame_duration_ms": 5.0},
        "link": {
            "tx_power_dbm": 20.0,
            "carrier_freq_mhz": 3500.0,
            "noise_figure_db": 7.0,
            "path_loss": {"model": "erceg_suburban"},
        },
        "mcs": {"mode": "fixed", "modulation": "QPSK", "coding": "1/2"},
        "wired": {
            "element_count": 2,
            "per_element_proc_ms": 0.05,
            "per_element_prop_ms": 0.25,
        },
        "flows": [
            {
                "id": "video",
                "service_class": "rtPS",
                "qos": {
                    "max_sustained_rate_bps": 8.0e6,
                    "min_reserved_rate_bps": 1.0e6,
                    "max_latency_ms": 400.0,
                },
                "queue_capacity_bytes": 120_000,
                "source": {
                    "type": "vbr",
                    "codec": "SVC",
                    "mean_rate_bps": 4.9e6,
                    "fps": 30.0,
                },
            },
            {
                "id": "audio",
                "service_class": "UGS",
                "qos": {
                    "max_sustained_rate_bps": 128_000.0,
                    "max_latency_ms": 100.0,
                    "tolerated_jitter_ms": 50.0,
                },
                "source": {"type": "cbr", "fps": 50.0, "frame_bytes": 320},
            },
        ],
    }


def best_of(kernel: str, cfg: dict, repeats: int):
    result = None
    best = float("inf")
    for _ in range(repeats):
        scenario = engine.build_scenario(copy.deepcopy(cfg))
        start = time.perf_counter()
        result = engine.run(scenario, kernel=kernel)
        best = min(best, time.perf_counter() - start)
    return result, best


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--duration", type=float, default=30.0,
                        help="simulated seconds per run (default 30)")
    parser.add_argument("--repeats", type=int, default=3,
                        help="runs per backend, best time kept (default 3)")
    args = parser.parse_args(argv)

    cfg = scenario_config(args.duration)
    try:
        c_result, c_time = best_of("c", cfg, args.repeats)
    except ValueError as exc:
        print(f"compiled kernel unavailable ({exc}); nothing to compare")
        return 1
    py_result, py_time = best_of("python", cfg, args.repeats)

    packets = c_result.report.sent
    print(f"scenario: {args.duration:.0f}s simulated, {packets} packets, "
          f"{len(cfg['flows'])} flows, QPSK 1/2 overload")
    identical = (
        c_result.report.to_json() == py_result.report.to_json()
        and c_result.outcomes == py_result.outcomes
    )
    print(f"reports identical: {identical}")
    for name, wall in (("c", c_time), ("python", py_time)):
        rate = packets / wall if wall > 0 else float("inf")
        print(f"  {name:7s} {wall * 1000.0:9.1f} ms   {rate:12.0f} packets/s")
    print(f"speedup: {py_time / c_time:.1f}x")
    return 0 if identical else 1


if __name__ == "__main__":
    raise SystemExit(main())
