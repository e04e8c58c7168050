"""Electro-thermal battery simulator.

State of charge integrates the applied current in closed form
(d soc/dt = I / (3600 C)). The terminal voltage map is

    V = U_p(soc) - U_n(soc) + eta_p(I) - eta_n(I) + R_sei * I

with electrode open-circuit potentials U_i given by monotone polynomials
in soc and asinh (Butler-Volmer-like) overpotentials eta_i that are odd
in the current and independent of soc. A two-node thermal model couples
core and surface temperatures, driven by the heat rate
Q = |I (V - U_p + U_n)| held constant within each control step; the pair
advances by fixed-substep RK4. Heavy arithmetic lives in
``daggercharge.core``.

Default parameters are tuned so that sustained charging at the 10 A
current limit pushes the core temperature through the 313.15 K safety
bound within a few hundred seconds (holding the core at the bound allows
only ~5.4 A) and the 4.2 V limit binds near the top of the charge
window, which is the regime the charging experiments need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import core

DEFAULT_SUBSTEPS = 10  # RK4 substeps per control step


class ModelEvaluationError(RuntimeError):
    """A model expression produced a non-finite value (bad parameters)."""


@dataclass(frozen=True)
class BatteryParams:
    """Per-cell physical parameters.

    capacity_ah        battery capacity C [Ah]
    r_sei_ohm          solid-electrolyte-interphase resistance [ohm]
    c_core, c_surf     heat capacities of core and surface nodes [J/K]
    r_core_surf        core-to-surface thermal resistance [K/W]
    r_surf_env         surface-to-environment thermal resistance [K/W]
    t_env              ambient temperature [K]
    ocv_p_coeffs       cathode potential polynomial, ascending powers [V]
    ocv_n_coeffs       anode potential polynomial, ascending powers [V]
    eta_gain_p/n       overpotential scales [V]; gain_n < 0 < gain_p makes
                       both electrodes add voltage during charging
    eta_current_scale  current normalization inside asinh [A]
    """

    capacity_ah: float = 6.75
    r_sei_ohm: float = 0.0165
    c_core: float = 62.7
    c_surf: float = 4.5
    r_core_surf: float = 2.0
    r_surf_env: float = 14.0
    t_env: float = 298.15
    ocv_p_coeffs: tuple[float, ...] = (3.60, 0.85, -0.25, 0.25)
    ocv_n_coeffs: tuple[float, ...] = (0.60, -0.40, 0.20, -0.10)
    eta_gain_p: float = 0.08
    eta_gain_n: float = -0.08
    eta_current_scale: float = 10.0

    def __post_init__(self):
        if self.capacity_ah <= 0:
            raise ValueError("capacity_ah must be > 0")
        if self.r_sei_ohm < 0:
            raise ValueError("r_sei_ohm must be >= 0")
        for name in ("c_core", "c_surf", "r_core_surf", "r_surf_env"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.eta_current_scale <= 0:
            raise ValueError("eta_current_scale must be > 0")
        for name in ("ocv_p_coeffs", "ocv_n_coeffs"):
            coeffs = tuple(float(c) for c in getattr(self, name))
            if len(coeffs) > 6:
                raise ValueError(f"{name} supports degree <= 5 (got {len(coeffs)} coefficients)")
            object.__setattr__(self, name, coeffs)
        # monotone OCV: d(U_p - U_n)/dsoc > 0 on [0, 1], checked on a dense grid
        dp = np.polynomial.polynomial.polyder(self._ocv_diff_coeffs())
        grid = np.linspace(0.0, 1.0, 2001)
        if np.polynomial.polynomial.polyval(grid, dp).min() <= 0:
            raise ValueError("open-circuit voltage must be strictly increasing in soc")

    def _ocv_diff_coeffs(self):
        cp = np.zeros(6)
        cn = np.zeros(6)
        cp[: len(self.ocv_p_coeffs)] = self.ocv_p_coeffs
        cn[: len(self.ocv_n_coeffs)] = self.ocv_n_coeffs
        return cp - cn

    @cached_property
    def packed(self) -> np.ndarray:
        """Flat float64 vector consumed by the simulation kernels."""
        p = np.zeros(core.N_PACKED)
        p[core.CAPACITY_AH] = self.capacity_ah
        p[core.R_SEI] = self.r_sei_ohm
        p[core.C_CORE] = self.c_core
        p[core.C_SURF] = self.c_surf
        p[core.R_CORE_SURF] = self.r_core_surf
        p[core.R_SURF_ENV] = self.r_surf_env
        p[core.T_ENV] = self.t_env
        p[core.ETA_GAIN_P] = self.eta_gain_p
        p[core.ETA_GAIN_N] = self.eta_gain_n
        p[core.ETA_CURRENT_SCALE] = self.eta_current_scale
        p[core.OCV_P : core.OCV_P + len(self.ocv_p_coeffs)] = self.ocv_p_coeffs
        p[core.OCV_N : core.OCV_N + len(self.ocv_n_coeffs)] = self.ocv_n_coeffs
        return p

    def open_circuit_voltage(self, soc: float) -> float:
        up, un = core.open_circuit_potentials(self.packed, soc)
        return up - un


@dataclass(frozen=True)
class BatteryState:
    """Simulator state: state of charge, node temperatures [K], last applied current [A]."""

    soc: float
    t_core: float
    t_surf: float
    last_current: float = 0.0
    soc_clamped: bool = False  # charge integral saturated on the last step

    def __post_init__(self):
        if not 0.0 <= self.soc <= 1.0:
            raise ValueError(f"soc {self.soc} outside [0, 1]")
        if self.t_core <= 0 or self.t_surf <= 0:
            raise ValueError("temperatures must be positive (kelvin)")


@dataclass(frozen=True)
class NoiseSpec:
    """Measurement noise standard deviations (voltage [V], temperature [K], current [A])."""

    sigma_v: float = 0.0
    sigma_t: float = 0.0
    sigma_i: float = 0.0

    def __post_init__(self):
        if min(self.sigma_v, self.sigma_t, self.sigma_i) < 0:
            raise ValueError("noise standard deviations must be >= 0")


@dataclass(frozen=True)
class Observation:
    """One measurement triple: terminal voltage [V], surface temperature [K], current [A]."""

    voltage: float
    temp_surf: float
    current: float


def terminal_voltage(state: BatteryState, params: BatteryParams, current: float) -> float:
    """Terminal voltage [V] at the given state with the given applied current."""
    v = core.terminal_voltage(params.packed, state.soc, current)
    if not math.isfinite(v):
        raise ModelEvaluationError(f"non-finite terminal voltage at soc={state.soc}, I={current}")
    return v


def heat_generation(state: BatteryState, params: BatteryParams, current: float) -> float:
    """Heat rate [W] generated at the given state and current; always >= 0."""
    q = core.heat_rate(params.packed, state.soc, current)
    if not math.isfinite(q):
        raise ModelEvaluationError(f"non-finite heat rate at soc={state.soc}, I={current}")
    return q


def step(
    state: BatteryState,
    params: BatteryParams,
    current: float,
    dt: float,
    substeps: int = DEFAULT_SUBSTEPS,
) -> BatteryState:
    """Advance the state by dt seconds under a constant applied current."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if not math.isfinite(current):
        raise ValueError("current must be finite")
    soc, tc, ts, clamped = core.step_state(
        params.packed, state.soc, state.t_core, state.t_surf, current, dt, substeps
    )
    if not (math.isfinite(soc) and math.isfinite(tc) and math.isfinite(ts)):
        raise ModelEvaluationError("non-finite state after step")
    return BatteryState(soc=soc, t_core=tc, t_surf=ts, last_current=current, soc_clamped=bool(clamped))


def observe(
    state: BatteryState,
    params: BatteryParams,
    current: float,
    noise: NoiseSpec = NoiseSpec(),
    rng: np.random.Generator | None = None,
) -> Observation:
    """Noisy measurement (V, T_surf, I) under the current flowing through the cell.

    With all sigmas zero the returned values are exact.
    """
    v = terminal_voltage(state, params, current)
    t = state.t_surf
    i = current
    if noise.sigma_v > 0 or noise.sigma_t > 0 or noise.sigma_i > 0:
        if rng is None:
            raise ValueError("rng required when noise is enabled")
        if noise.sigma_v > 0:
            v += noise.sigma_v * rng.standard_normal()
        if noise.sigma_t > 0:
            t += noise.sigma_t * rng.standard_normal()
        if noise.sigma_i > 0:
            i += noise.sigma_i * rng.standard_normal()
    return Observation(voltage=v, temp_surf=t, current=i)
