"""Shared test helpers: minimal configs and small builders."""

import copy
import json
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
BASE_CONFIG_PATH = REPO_ROOT / "configs" / "base.json"


def minimal_config() -> dict:
    """Smallest useful scenario: one CBR video flow on the default cell."""
    return {
        "duration_s": 2.0,
        "seed": 3,
        "cell": {"radius_km": 0.2, "bs_count": 7, "ss_distance_m": 150.0},
        "phy": {"channel_bandwidth_mhz": 5.0, "frame_duration_ms": 5.0},
        "link": {
            "tx_power_dbm": 20.0,
            "carrier_freq_mhz": 3500.0,
            "noise_figure_db": 7.0,
            "path_loss": {"model": "erceg_suburban"},
        },
        "mcs": {"mode": "adaptive"},
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
                "source": {
                    "type": "cbr",
                    "fps": 30.0,
                    "frame_bytes": 5000,
                    "kind": "video",
                },
            }
        ],
    }


def write_config(tmp_path: Path, cfg: dict, name: str = "config.json") -> str:
    path = tmp_path / name
    path.write_text(json.dumps(cfg, indent=2) + "\n", encoding="utf-8")
    return str(path)


@pytest.fixture
def base_config() -> dict:
    with open(BASE_CONFIG_PATH, encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture
def config() -> dict:
    return copy.deepcopy(minimal_config())
