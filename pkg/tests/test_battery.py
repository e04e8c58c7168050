"""Simulator oracles: closed-form charge integration, analytic thermal
steady state, voltage identities, measurement noise."""

import numpy as np
import pytest

from daggercharge.battery import (
    BatteryParams,
    BatteryState,
    NoiseSpec,
    heat_generation,
    observe,
    step,
    terminal_voltage,
)


def ocv_reference(params, soc):
    """Independent open-circuit voltage: direct polynomial evaluation."""
    up = sum(c * soc**k for k, c in enumerate(params.ocv_p_coeffs))
    un = sum(c * soc**k for k, c in enumerate(params.ocv_n_coeffs))
    return up - un


def voltage_reference(params, soc, current):
    """Independent voltage map built from numpy primitives only."""
    eta = (params.eta_gain_p - params.eta_gain_n) * np.arcsinh(current / params.eta_current_scale)
    return ocv_reference(params, soc) + eta + params.r_sei_ohm * current


class TestTerminalVoltage:
    def test_zero_current_is_open_circuit(self, params, mid_state):
        v = terminal_voltage(mid_state, params, 0.0)
        assert v == pytest.approx(ocv_reference(params, 0.5), abs=1e-14)

    def test_overpotential_odd_in_current(self, params, mid_state):
        ocv = terminal_voltage(mid_state, params, 0.0)
        for i1 in (0.5, 3.0, 10.0):
            dv_pos = terminal_voltage(mid_state, params, i1) - ocv
            dv_neg = terminal_voltage(mid_state, params, -i1) - ocv
            assert dv_pos == pytest.approx(-dv_neg, rel=1e-12)

    def test_closed_form_value(self):
        # soc=0.5, I=10 A, R_sei=0.019: OCV(0.5) + 0.16*asinh(1) + 0.19,
        # evaluated independently and frozen
        params = BatteryParams(r_sei_ohm=0.019)
        state = BatteryState(soc=0.5, t_core=300.0, t_surf=300.0)
        expected = 3.55625 + 0.16 * np.arcsinh(1.0) + 0.19
        assert expected == pytest.approx(3.8872697739231268, abs=1e-15)
        assert terminal_voltage(state, params, 10.0) == pytest.approx(expected, abs=1e-12)

    def test_monotone_in_soc_at_fixed_current(self, params):
        for current in (0.0, 5.0, -5.0):
            vs = [
                terminal_voltage(BatteryState(soc=s, t_core=300.0, t_surf=300.0), params, current)
                for s in np.linspace(0.0, 1.0, 101)
            ]
            assert all(b > a for a, b in zip(vs, vs[1:]))

    def test_matches_reference_on_random_inputs(self, params):
        rng = np.random.default_rng(3)
        for _ in range(200):
            soc = rng.uniform(0, 1)
            cur = rng.uniform(-10, 10)
            state = BatteryState(soc=soc, t_core=300.0, t_surf=300.0)
            assert terminal_voltage(state, params, cur) == pytest.approx(
                voltage_reference(params, soc, cur), rel=1e-12
            )


class TestHeatGeneration:
    def test_zero_current(self, params, mid_state):
        assert heat_generation(mid_state, params, 0.0) == 0.0

    def test_nonnegative(self, params):
        rng = np.random.default_rng(4)
        for _ in range(200):
            state = BatteryState(soc=rng.uniform(0, 1), t_core=300.0, t_surf=300.0)
            assert heat_generation(state, params, rng.uniform(-10, 10)) >= 0.0

    def test_closed_form_value(self, params, mid_state):
        # Q = |I * (eta_total + R_sei I)| at I=10: 10 * (0.16 asinh(1) + 0.165)
        expected = 10.0 * (0.16 * np.arcsinh(1.0) + 0.165)
        assert expected == pytest.approx(3.0601977392312688, abs=1e-15)
        assert heat_generation(mid_state, params, 10.0) == pytest.approx(expected, rel=1e-12)

    def test_independent_of_soc(self, params):
        # V - U_p + U_n cancels the OCV, leaving only overpotential + ohmic terms
        qs = [
            heat_generation(BatteryState(soc=s, t_core=300.0, t_surf=300.0), params, 7.0)
            for s in (0.1, 0.5, 0.9)
        ]
        assert qs[0] == pytest.approx(qs[1], rel=1e-12)
        assert qs[1] == pytest.approx(qs[2], rel=1e-12)


class TestStep:
    def test_closed_form_soc_increment(self):
        # dsoc = I dt / (3600 C) = 10*10/(3600*6.75) = 4.1152e-3
        params = BatteryParams(capacity_ah=6.75)
        state = BatteryState(soc=0.25, t_core=300.0, t_surf=300.0)
        new = step(state, params, 10.0, 10.0)
        assert new.soc - 0.25 == pytest.approx(100.0 / 24300.0, rel=1e-12)
        assert new.soc - 0.25 == pytest.approx(4.1152e-3, rel=1e-4)
        assert new.last_current == 10.0

    def test_constant_current_k_steps(self, params):
        state = BatteryState(soc=0.1, t_core=300.0, t_surf=300.0)
        k, current, dt = 40, 6.0, 10.0
        for _ in range(k):
            state = step(state, params, current, dt)
        expected = 0.1 + k * current * dt / (3600.0 * params.capacity_ah)
        assert state.soc == pytest.approx(expected, rel=1e-12)

    def test_zero_input_fixed_point(self, params):
        state = BatteryState(soc=0.4, t_core=params.t_env, t_surf=params.t_env, last_current=3.0)
        new = step(state, params, 0.0, 10.0)
        assert new.soc == state.soc
        assert new.t_core == params.t_env
        assert new.t_surf == params.t_env
        assert new.last_current == 0.0

    def test_thermal_steady_state_analytic(self, params):
        # constant current => constant Q; solve the 2x2 equilibrium:
        # T_s -> T_env + Q R_se, T_c -> T_s + Q R_cs
        current = 5.0
        state = BatteryState(soc=0.0, t_core=302.0, t_surf=300.0)
        q = heat_generation(state, params, current)
        for _ in range(2500):  # 25000 s, past 20 thermal time constants
            state = step(state, params, current, 10.0)
        ts_expected = params.t_env + q * params.r_surf_env
        tc_expected = ts_expected + q * params.r_core_surf
        assert state.t_surf == pytest.approx(ts_expected, abs=0.01)
        assert state.t_core == pytest.approx(tc_expected, abs=0.01)

    def test_soc_clamping_flags(self):
        params = BatteryParams(capacity_ah=5.5)
        state = BatteryState(soc=0.999, t_core=300.0, t_surf=300.0)
        new = step(state, params, 10.0, 10.0)
        assert new.soc == 1.0
        assert new.soc_clamped
        low = step(BatteryState(soc=0.001, t_core=300.0, t_surf=300.0), params, -10.0, 10.0)
        assert low.soc == 0.0
        assert low.soc_clamped
        ok = step(state, params, 0.1, 10.0)
        assert not ok.soc_clamped

    def test_deterministic(self, params, mid_state):
        a = mid_state
        b = mid_state
        rng = np.random.default_rng(11)
        currents = rng.uniform(-10, 10, 50)
        for cur in currents:
            a = step(a, params, cur, 10.0)
        for cur in currents:
            b = step(b, params, cur, 10.0)
        assert (a.soc, a.t_core, a.t_surf) == (b.soc, b.t_core, b.t_surf)

    def test_rejects_bad_inputs(self, params, mid_state):
        with pytest.raises(ValueError):
            step(mid_state, params, 1.0, 0.0)
        with pytest.raises(ValueError):
            step(mid_state, params, float("nan"), 10.0)


class TestObserve:
    def test_zero_noise_exact(self, params, mid_state):
        ob = observe(mid_state, params, 4.0)
        assert ob.voltage == terminal_voltage(mid_state, params, 4.0)
        assert ob.temp_surf == mid_state.t_surf
        assert ob.current == 4.0

    def test_noise_standard_deviation(self, params, mid_state):
        noise = NoiseSpec(sigma_v=0.020, sigma_t=1.0)
        rng = np.random.default_rng(7)
        true_v = terminal_voltage(mid_state, params, 2.0)
        vs = np.empty(100_000)
        ts = np.empty(100_000)
        for k in range(100_000):
            ob = observe(mid_state, params, 2.0, noise, rng)
            vs[k] = ob.voltage - true_v
            ts[k] = ob.temp_surf - mid_state.t_surf
        assert abs(vs.std() - 0.020) / 0.020 < 0.03
        assert abs(ts.std() - 1.0) < 0.03

    def test_seeded_reproducibility(self, params, mid_state):
        noise = NoiseSpec(sigma_v=0.020, sigma_t=1.0)
        seq1 = [observe(mid_state, params, 1.0, noise, np.random.default_rng(42)).voltage]
        seq2 = [observe(mid_state, params, 1.0, noise, np.random.default_rng(42)).voltage]
        assert seq1 == seq2

    def test_noise_requires_rng(self, params, mid_state):
        with pytest.raises(ValueError):
            observe(mid_state, params, 0.0, NoiseSpec(sigma_v=0.1))


class TestErrors:
    def test_nonfinite_evaluation_reported(self):
        # overflowing potentials are a parameter misconfiguration, not a crash
        from daggercharge.battery import ModelEvaluationError

        params = BatteryParams(ocv_p_coeffs=(1e308, 1e308), ocv_n_coeffs=(0.0,))
        state = BatteryState(soc=1.0, t_core=300.0, t_surf=300.0)
        with pytest.raises(ModelEvaluationError):
            terminal_voltage(state, params, 0.0)


class TestValidation:
    def test_params_invariants(self):
        with pytest.raises(ValueError):
            BatteryParams(capacity_ah=0.0)
        with pytest.raises(ValueError):
            BatteryParams(c_surf=-1.0)
        with pytest.raises(ValueError):
            # decreasing OCV is rejected
            BatteryParams(ocv_p_coeffs=(4.0, -1.0), ocv_n_coeffs=(0.5,))

    def test_state_invariants(self):
        with pytest.raises(ValueError):
            BatteryState(soc=1.2, t_core=300.0, t_surf=300.0)
        with pytest.raises(ValueError):
            BatteryState(soc=0.5, t_core=-1.0, t_surf=300.0)
