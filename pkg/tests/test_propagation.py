"""Path-loss models and link budget against hand-written evaluators.

Every closed-form check here recomputes the expected value from scratch
(plain math on the formula) instead of calling back into the module, so a
transcription slip in propagation.py cannot cancel itself out.
"""

import math
import random

import pytest

from wimaxsim import propagation as prop


# Brute-force evaluators, written independently from the model definitions.

def fs_loss_db(d_m, g_tx, g_rx, sys_loss):
    return 10.0 * math.log10(
        (4.0 * math.pi) ** 2 * d_m * d_m * sys_loss / (g_tx * g_rx)
    )


def erceg_loss_db(d_m, f_mhz, gamma, x_f, x_h, s):
    lam = 3.0e8 / (f_mhz * 1e6)
    h = 20.0 * math.log10(4.0 * math.pi * 100.0 / lam)
    return h + 10.0 * gamma * math.log10(d_m / 100.0) + x_f + x_h + s


def ped_loss_db(d_m, f_mhz):
    return 40.0 * math.log10(d_m / 1000.0) + 30.0 * math.log10(f_mhz) + 49.0


def veh_loss_db(d_m, f_mhz, h_m):
    return (
        40.0 * (1.0 - 4e-3 * h_m) * math.log10(d_m / 1000.0)
        - 18.0 * math.log10(h_m)
        + 21.0 * math.log10(f_mhz)
        + 80.0
    )


def rel_close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(abs(a), abs(b), 1.0)


class TestFrozenValues:
    def test_friis_unit_point(self):
        # 1 W, unit gains, 1 m, no system loss: 1 / (16 pi^2) W.
        got = prop.free_space_rx_power(1.0, 1.0, 1.0, 1.0, 1.0)
        assert rel_close(got, 1.0 / (16.0 * math.pi**2))
        assert abs(got - 6.3326e-3) < 1e-6

    def test_erceg_intercept_at_100m(self):
        model = prop.ErcegSuburban(gamma=4.0)
        got = prop.erceg_path_loss(100.0, 3500.0, model)
        assert abs(got - 83.33) < 0.01

    def test_erceg_decade_adds_40db_at_gamma_4(self):
        model = prop.ErcegSuburban(gamma=4.0)
        at_100 = prop.erceg_path_loss(100.0, 3500.0, model)
        at_1000 = prop.erceg_path_loss(1000.0, 3500.0, model)
        assert rel_close(at_1000, at_100 + 40.0)
        assert abs(at_1000 - 123.33) < 0.01

    def test_pedestrian_1km_2ghz(self):
        assert abs(prop.pedestrian_path_loss(1.0, 2000.0) - 148.03) < 0.01

    def test_pedestrian_10km_1mhz(self):
        # 40*log10(10) + 30*log10(1) + 49 = 89 dB exactly.
        assert rel_close(prop.pedestrian_path_loss(10.0, 1.0), 89.0)

    def test_vehicular_1km_2ghz_10m(self):
        assert abs(prop.vehicular_path_loss(1.0, 2000.0, 10.0) - 131.32) < 0.01

    def test_vehicular_decade_coefficient(self):
        # Distance coefficient at 10 m height: 40*(1 - 0.04) = 38.4 dB/decade.
        at_1 = prop.vehicular_path_loss(1.0, 2000.0, 10.0)
        at_10 = prop.vehicular_path_loss(10.0, 2000.0, 10.0)
        assert rel_close(at_10, at_1 + 38.4)
        assert abs(at_10 - 169.72) < 0.01

    def test_noise_floor_5mhz_nf7(self):
        assert abs(prop.noise_floor_dbm(5e6, 7.0) - (-100.01)) < 0.01

    def test_noise_floor_1mhz_nf0(self):
        assert rel_close(prop.noise_floor_dbm(1e6, 0.0), -114.0)

    def test_sinr_composition(self):
        # tx 43 dBm, vehicular loss 131.32 dB, noise -100.01 dBm -> 11.69 dB.
        budget = prop.LinkBudget(
            tx_power_dbm=43.0,
            carrier_freq_mhz=2000.0,
            bandwidth_hz=5e6,
            noise_figure_db=7.0,
            model=prop.Vehicular(bs_antenna_height_m=10.0),
        )
        assert abs(prop.compute_sinr(budget, 1000.0) - 11.69) < 0.005


class TestOracleEquivalence:
    """Random parameter draws against the brute-force formulas."""

    def test_free_space(self):
        rng = random.Random(0xF5)
        for _ in range(100):
            d = rng.uniform(1.0, 5000.0)
            g_tx = rng.uniform(0.1, 100.0)
            g_rx = rng.uniform(0.1, 100.0)
            loss = rng.uniform(1.0, 10.0)
            model = prop.FreeSpace(g_tx=g_tx, g_rx=g_rx, sys_loss=loss)
            got = prop.path_loss_db(model, d, rng.uniform(100.0, 6000.0))
            assert rel_close(got, fs_loss_db(d, g_tx, g_rx, loss))

    def test_erceg(self):
        rng = random.Random(0xE6)
        for _ in range(100):
            d = rng.uniform(100.0, 8000.0)
            f = rng.uniform(1000.0, 6000.0)
            gamma = rng.uniform(2.0, 6.0)
            x_f = rng.uniform(-3.0, 3.0)
            x_h = rng.uniform(-10.0, 2.0)
            s = rng.uniform(0.0, 10.0)
            model = prop.ErcegSuburban(gamma=gamma, x_f_db=x_f, x_h_db=x_h, shadow_s_db=s)
            got = prop.path_loss_db(model, d, f)
            assert rel_close(got, erceg_loss_db(d, f, gamma, x_f, x_h, s))

    def test_pedestrian(self):
        rng = random.Random(0xBD)
        for _ in range(100):
            d = rng.uniform(10.0, 20000.0)
            f = rng.uniform(100.0, 6000.0)
            got = prop.path_loss_db(prop.PedestrianOutdoorIndoor(), d, f)
            assert rel_close(got, ped_loss_db(d, f))

    def test_vehicular(self):
        rng = random.Random(0xCA)
        for _ in range(100):
            d = rng.uniform(10.0, 20000.0)
            f = rng.uniform(100.0, 6000.0)
            h = rng.uniform(0.5, 200.0)
            got = prop.path_loss_db(prop.Vehicular(bs_antenna_height_m=h), d, f)
            assert rel_close(got, veh_loss_db(d, f, h))

    def test_friis_power_and_loss_agree(self):
        # Received power through the Friis form must equal tx minus the dB loss.
        rng = random.Random(0x1E)
        for _ in range(100):
            tx_w = rng.uniform(0.01, 50.0)
            d = rng.uniform(1.0, 5000.0)
            g_tx = rng.uniform(0.1, 50.0)
            g_rx = rng.uniform(0.1, 50.0)
            loss = rng.uniform(1.0, 5.0)
            rx_w = prop.free_space_rx_power(tx_w, g_tx, g_rx, d, loss)
            loss_db = prop.path_loss_db(
                prop.FreeSpace(g_tx=g_tx, g_rx=g_rx, sys_loss=loss), d, 3500.0
            )
            assert rel_close(
                prop.watts_to_dbm(tx_w) - prop.watts_to_dbm(rx_w), loss_db, 1e-8
            )


class TestMonotonicity:
    def _models(self):
        return [
            prop.FreeSpace(),
            prop.ErcegSuburban(gamma=4.0, x_f_db=1.0, x_h_db=-2.0),
            prop.PedestrianOutdoorIndoor(),
            prop.Vehicular(bs_antenna_height_m=10.0),
        ]

    def test_loss_grows_with_distance(self):
        rng = random.Random(0xD0)
        for model in self._models():
            lo = 100.0  # all four models are defined here
            for _ in range(1000):
                a = rng.uniform(lo, 10000.0)
                b = rng.uniform(lo, 10000.0)
                if a == b:
                    continue
                near, far = (a, b) if a < b else (b, a)
                f = rng.uniform(500.0, 6000.0)
                assert prop.path_loss_db(model, near, f) < prop.path_loss_db(model, far, f)

    def test_sinr_falls_with_distance(self):
        budget = prop.LinkBudget(20.0, 3500.0, 5e6, 7.0, prop.ErcegSuburban())
        sinrs = [prop.compute_sinr(budget, d) for d in (100.0, 200.0, 400.0, 800.0)]
        assert sinrs == sorted(sinrs, reverse=True)


class TestConversions:
    def test_db_round_trip(self):
        rng = random.Random(7)
        for _ in range(50):
            x = rng.uniform(1e-9, 1e6)
            assert rel_close(prop.db_to_linear(prop.linear_to_db(x)), x, 1e-12)

    def test_watt_dbm_points(self):
        assert rel_close(prop.watts_to_dbm(1.0), 30.0)
        assert rel_close(prop.dbm_to_watts(0.0), 1e-3)
        assert rel_close(prop.dbm_to_watts(prop.watts_to_dbm(0.25)), 0.25, 1e-12)


class TestDomainErrors:
    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            prop.linear_to_db(0.0)
        with pytest.raises(ValueError):
            prop.watts_to_dbm(-1.0)
        with pytest.raises(ValueError):
            prop.free_space_rx_power(0.0, 1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            prop.free_space_rx_power(1.0, 1.0, 1.0, -5.0)
        with pytest.raises(ValueError):
            prop.pedestrian_path_loss(0.0, 2000.0)
        with pytest.raises(ValueError):
            prop.noise_floor_dbm(0.0, 7.0)

    def test_erceg_below_reference_distance(self):
        with pytest.raises(ValueError):
            prop.erceg_path_loss(99.0, 3500.0, prop.ErcegSuburban())

    def test_vehicular_height_bounds(self):
        with pytest.raises(ValueError):
            prop.Vehicular(bs_antenna_height_m=0.0)
        with pytest.raises(ValueError):
            prop.Vehicular(bs_antenna_height_m=250.0)
        with pytest.raises(ValueError):
            prop.vehicular_path_loss(1.0, 2000.0, 300.0)

    def test_free_space_parameter_bounds(self):
        with pytest.raises(ValueError):
            prop.FreeSpace(g_tx=0.0)
        with pytest.raises(ValueError):
            prop.FreeSpace(sys_loss=0.5)

    def test_path_loss_db_rejects_bad_distance(self):
        with pytest.raises(ValueError):
            prop.path_loss_db(prop.FreeSpace(), 0.0, 3500.0)


class TestModelFromConfig:
    def test_each_name_builds_its_model(self):
        assert isinstance(prop.model_from_config({"model": "free_space"}), prop.FreeSpace)
        erceg = prop.model_from_config({"model": "erceg_suburban", "gamma": 3.5})
        assert isinstance(erceg, prop.ErcegSuburban)
        assert erceg.gamma == 3.5
        assert isinstance(
            prop.model_from_config({"model": "pedestrian"}),
            prop.PedestrianOutdoorIndoor,
        )
        veh = prop.model_from_config({"model": "vehicular", "bs_antenna_height_m": 12.0})
        assert isinstance(veh, prop.Vehicular)
        assert veh.bs_antenna_height_m == 12.0

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError):
            prop.model_from_config({"model": "underwater"})

    def test_shadow_sigma_is_not_a_model_parameter(self):
        # The sigma drives the scenario-level draw; the model only stores the
        # resulting fixed offset.
        model = prop.model_from_config(
            {"model": "erceg_suburban", "shadow_sigma_db": 8.0}
        )
        assert model.shadow_s_db == 0.0
