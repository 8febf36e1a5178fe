"""Radio propagation models, link budget and SINR for a BS-to-SS downlink.

Four path-loss models are supported:

* free space: Friis-style received power with explicit antenna gains and a
  system-loss factor (no frequency term; the gains are taken as given),
* Erceg suburban: intercept at 100 m plus a 10*gamma*log10(d/100) slope and
  additive frequency / receive-height / shadowing corrections,
* outdoor-to-indoor pedestrian: 40*log10(R_km) + 30*log10(f_MHz) + 49,
* vehicular: 40*(1 - 4e-3*dhb)*log10(R_km) - 18*log10(dhb)
  + 21*log10(f_MHz) + 80, with dhb the BS antenna height above average
  rooftop level in metres.

All models report loss in dB; `path_loss_db` dispatches on the model value
and accepts the distance in metres, converting to the unit each closed-form
expression expects. The link budget combines transmit power, path loss and a
thermal-noise floor into a deterministic SINR; there is no interference term
and no stochastic fading beyond the optional fixed Erceg shadowing offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

# Propagation constant used throughout (m/s).
SPEED_OF_LIGHT_M_S = 3.0e8

# Intercept distance of the Erceg suburban model (m).
ERCEG_REFERENCE_DISTANCE_M = 100.0


def linear_to_db(value: float) -> float:
    """Convert a linear power ratio to dB."""
    if value <= 0.0:
        raise ValueError(f"linear value must be positive, got {value}")
    return 10.0 * math.log10(value)


def db_to_linear(value_db: float) -> float:
    """Convert dB to a linear power ratio."""
    return 10.0 ** (value_db / 10.0)


def watts_to_dbm(power_w: float) -> float:
    if power_w <= 0.0:
        raise ValueError(f"power must be positive, got {power_w} W")
    return 10.0 * math.log10(power_w * 1000.0)


def dbm_to_watts(power_dbm: float) -> float:
    return 10.0 ** (power_dbm / 10.0) / 1000.0


@dataclass(frozen=True)
class FreeSpace:
    """Free-space model parameters: antenna gains and system loss (linear)."""

    g_tx: float = 1.0
    g_rx: float = 1.0
    sys_loss: float = 1.0

    def __post_init__(self) -> None:
        if self.g_tx <= 0.0 or self.g_rx <= 0.0:
            raise ValueError("antenna gains must be positive")
        if self.sys_loss < 1.0:
            raise ValueError("system loss factor must be >= 1")


@dataclass(frozen=True)
class ErcegSuburban:
    """Erceg suburban model parameters.

    gamma is the path-loss exponent; x_f_db and x_h_db are the frequency and
    receive-antenna-height correction terms in dB; shadow_s_db is a fixed
    lognormal-shadowing offset in dB (0 disables shadowing).
    """

    gamma: float = 4.0
    x_f_db: float = 0.0
    x_h_db: float = 0.0
    shadow_s_db: float = 0.0

    def __post_init__(self) -> None:
        if self.gamma <= 0.0:
            raise ValueError("path-loss exponent gamma must be positive")


@dataclass(frozen=True)
class PedestrianOutdoorIndoor:
    """Outdoor-to-indoor / pedestrian model (no free parameters)."""


@dataclass(frozen=True)
class Vehicular:
    """Vehicular model; bs_antenna_height_m is measured above mean rooftop."""

    bs_antenna_height_m: float = 3.0

    def __post_init__(self) -> None:
        if not 0.0 < self.bs_antenna_height_m < 250.0:
            raise ValueError(
                "BS antenna height above rooftop must be in (0, 250) m, "
                f"got {self.bs_antenna_height_m}"
            )


PathLossModel = Union[FreeSpace, ErcegSuburban, PedestrianOutdoorIndoor, Vehicular]

#: Config-file names of the four models, in canonical order.
MODEL_NAMES = ("free_space", "erceg_suburban", "pedestrian", "vehicular")


def free_space_rx_power(
    tx_power_w: float,
    g_tx: float,
    g_rx: float,
    r_m: float,
    sys_loss: float = 1.0,
) -> float:
    """Received power (W) of an unobstructed link.

    p_rx = p_tx * g_tx * g_rx / ((4*pi)^2 * r^2 * L)
    """
    if tx_power_w <= 0.0:
        raise ValueError(f"tx power must be positive, got {tx_power_w}")
    if r_m <= 0.0:
        raise ValueError(f"distance must be positive, got {r_m}")
    if g_tx <= 0.0 or g_rx <= 0.0:
        raise ValueError("antenna gains must be positive")
    if sys_loss < 1.0:
        raise ValueError("system loss factor must be >= 1")
    return tx_power_w * g_tx * g_rx / ((4.0 * math.pi) ** 2 * r_m**2 * sys_loss)


def erceg_path_loss(d_m: float, freq_mhz: float, params: ErcegSuburban) -> float:
    """Erceg suburban path loss in dB; valid for d >= 100 m.

    The 100 m intercept is the free-space loss at the carrier wavelength:
    H = 20*log10(4*pi*100 / lambda).
    """
    if d_m < ERCEG_REFERENCE_DISTANCE_M:
        raise ValueError(
            f"Erceg model is valid for d >= {ERCEG_REFERENCE_DISTANCE_M:.0f} m, got {d_m}"
        )
    if freq_mhz <= 0.0:
        raise ValueError(f"frequency must be positive, got {freq_mhz} MHz")
    wavelength_m = SPEED_OF_LIGHT_M_S / (freq_mhz * 1e6)
    intercept_db = 20.0 * math.log10(
        4.0 * math.pi * ERCEG_REFERENCE_DISTANCE_M / wavelength_m
    )
    slope_db = 10.0 * params.gamma * math.log10(d_m / ERCEG_REFERENCE_DISTANCE_M)
    return intercept_db + slope_db + params.x_f_db + params.x_h_db + params.shadow_s_db


def pedestrian_path_loss(r_km: float, freq_mhz: float) -> float:
    """Outdoor-to-indoor / pedestrian path loss in dB (R in km, f in MHz)."""
    if r_km <= 0.0:
        raise ValueError(f"distance must be positive, got {r_km} km")
    if freq_mhz <= 0.0:
        raise ValueError(f"frequency must be positive, got {freq_mhz} MHz")
    return 40.0 * math.log10(r_km) + 30.0 * math.log10(freq_mhz) + 49.0


def vehicular_path_loss(r_km: float, freq_mhz: float, bs_height_m: float) -> float:
    """Vehicular path loss in dB (R in km, f in MHz, BS height above rooftop in m).

    The frequency term is +21*log10(f): loss grows with carrier frequency,
    consistent with the other models.
    """
    if r_km <= 0.0:
        raise ValueError(f"distance must be positive, got {r_km} km")
    if freq_mhz <= 0.0:
        raise ValueError(f"frequency must be positive, got {freq_mhz} MHz")
    if not 0.0 < bs_height_m < 250.0:
        raise ValueError(f"BS antenna height must be in (0, 250) m, got {bs_height_m}")
    distance_term = 40.0 * (1.0 - 4e-3 * bs_height_m) * math.log10(r_km)
    return (
        distance_term
        - 18.0 * math.log10(bs_height_m)
        + 21.0 * math.log10(freq_mhz)
        + 80.0
    )


def path_loss_db(model: PathLossModel, distance_m: float, freq_mhz: float) -> float:
    """Path loss in dB for any model, with the distance given in metres."""
    if distance_m <= 0.0:
        raise ValueError(f"distance must be positive, got {distance_m} m")
    if isinstance(model, FreeSpace):
        # Loss is the inverse of the Friis gain term.
        return 10.0 * math.log10(
            (4.0 * math.pi) ** 2 * distance_m**2 * model.sys_loss / (model.g_tx * model.g_rx)
        )
    if isinstance(model, ErcegSuburban):
        return erceg_path_loss(distance_m, freq_mhz, model)
    if isinstance(model, PedestrianOutdoorIndoor):
        return pedestrian_path_loss(distance_m / 1000.0, freq_mhz)
    if isinstance(model, Vehicular):
        return vehicular_path_loss(
            distance_m / 1000.0, freq_mhz, model.bs_antenna_height_m
        )
    raise TypeError(f"unknown path-loss model: {model!r}")


def noise_floor_dbm(bandwidth_hz: float, noise_figure_db: float) -> float:
    """Thermal-noise floor in dBm: -174 + 10*log10(BW) + NF."""
    if bandwidth_hz <= 0.0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth_hz} Hz")
    return -174.0 + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


@dataclass(frozen=True)
class LinkBudget:
    """Static downlink budget: transmit power, carrier, bandwidth, noise figure."""

    tx_power_dbm: float
    carrier_freq_mhz: float
    bandwidth_hz: float
    noise_figure_db: float
    model: PathLossModel

    def __post_init__(self) -> None:
        if self.carrier_freq_mhz <= 0.0:
            raise ValueError("carrier frequency must be positive")
        if self.bandwidth_hz <= 0.0:
            raise ValueError("bandwidth must be positive")


def compute_sinr(budget: LinkBudget, distance_m: float) -> float:
    """Deterministic SINR in dB at the given BS-SS distance.

    sinr = tx_dbm - PL(model, d) - noise_floor. There is no interference
    term, so this is really an SNR; the name keeps the conventional label.
    """
    loss_db = path_loss_db(budget.model, distance_m, budget.carrier_freq_mhz)
    noise_dbm = noise_floor_dbm(budget.bandwidth_hz, budget.noise_figure_db)
    return budget.tx_power_dbm - loss_db - noise_dbm


def model_from_config(config: dict) -> PathLossModel:
    """Build a path-loss model from its config-dict form.

    The dict carries a `model` name plus the model's parameters, e.g.
    {"model": "erceg_suburban", "gamma": 4.0}.
    """
    kind = config.get("model")
    params = {k: v for k, v in config.items() if k != "model"}
    if kind == "free_space":
        return FreeSpace(**params)
    if kind == "erceg_suburban":
        params.pop("shadow_sigma_db", None)
        return ErcegSuburban(**params)
    if kind == "pedestrian":
        return PedestrianOutdoorIndoor(**params)
    if kind == "vehicular":
        return Vehicular(**params)
    raise ValueError(f"unknown path-loss model name: {kind!r}")
