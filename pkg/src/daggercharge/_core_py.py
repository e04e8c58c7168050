"""Pure-Python simulation kernels.

Reference backend for the hot inner loops: terminal voltage, heat rate,
one control step (closed-form charge integration + RK4 thermal substeps)
and the augmented cost of a candidate current sequence over a prediction
horizon. ``daggercharge._core_cy`` is the compiled twin with identical
arithmetic; ``daggercharge.core`` selects one of the two at import time.

Battery parameters arrive as a packed float64 vector, see PACKED layout
constants below and ``BatteryParams.packed`` in ``daggercharge.battery``.
"""

from math import asinh

# Packed parameter vector layout (22 float64 slots).
CAPACITY_AH = 0
R_SEI = 1
C_CORE = 2
C_SURF = 3
R_CORE_SURF = 4
R_SURF_ENV = 5
T_ENV = 6
ETA_GAIN_P = 7
ETA_GAIN_N = 8
ETA_CURRENT_SCALE = 9
OCV_P = 10  # 6 ascending-power polynomial coefficients
OCV_N = 16
N_PACKED = 22


def _poly5(p, off, x):
    # Horner, degree 5, coefficients stored lowest power first
    acc = p[off + 5]
    acc = acc * x + p[off + 4]
    acc = acc * x + p[off + 3]
    acc = acc * x + p[off + 2]
    acc = acc * x + p[off + 1]
    return acc * x + p[off]


def open_circuit_potentials(p, soc):
    """Electrode open-circuit potentials (U_cathode, U_anode) in volts."""
    return _poly5(p, OCV_P, soc), _poly5(p, OCV_N, soc)


def terminal_voltage(p, soc, current):
    """Terminal voltage [V]: OCV + asinh overpotentials + SEI ohmic drop."""
    up = _poly5(p, OCV_P, soc)
    un = _poly5(p, OCV_N, soc)
    eta = (p[ETA_GAIN_P] - p[ETA_GAIN_N]) * asinh(current / p[ETA_CURRENT_SCALE])
    return up - un + eta + p[R_SEI] * current


def heat_rate(p, soc, current):
    """Instantaneous heat generation [W], |I * (V - U_p + U_n)|."""
    v = terminal_voltage(p, soc, current)
    up = _poly5(p, OCV_P, soc)
    un = _poly5(p, OCV_N, soc)
    return abs(current * (v - up + un))


def _advance(p, soc, tc, ts, current, dt, n_sub):
    """One control step; returns (soc, tc, ts, clamped, raw_soc).

    Charge integrates in closed form over the whole step; the two-node
    thermal pair advances by n_sub RK4 substeps with the heat rate held
    at its start-of-step value. raw_soc is the pre-clamp value.
    """
    q = heat_rate(p, soc, current)
    cc = p[C_CORE]
    cs = p[C_SURF]
    rcs = p[R_CORE_SURF]
    rse = p[R_SURF_ENV]
    tenv = p[T_ENV]
    h = dt / n_sub
    for _ in range(n_sub):
        k1c = (q - (tc - ts) / rcs) / cc
        k1s = ((tc - ts) / rcs - (ts - tenv) / rse) / cs
        ac = tc + 0.5 * h * k1c
        as_ = ts + 0.5 * h * k1s
        k2c = (q - (ac - as_) / rcs) / cc
        k2s = ((ac - as_) / rcs - (as_ - tenv) / rse) / cs
        bc = tc + 0.5 * h * k2c
        bs = ts + 0.5 * h * k2s
        k3c = (q - (bc - bs) / rcs) / cc
        k3s = ((bc - bs) / rcs - (bs - tenv) / rse) / cs
        gc = tc + h * k3c
        gs = ts + h * k3s
        k4c = (q - (gc - gs) / rcs) / cc
        k4s = ((gc - gs) / rcs - (gs - tenv) / rse) / cs
        tc = tc + h * (k1c + 2.0 * (k2c + k3c) + k4c) / 6.0
        ts = ts + h * (k1s + 2.0 * (k2s + k3s) + k4s) / 6.0
    raw = soc + current * dt / (3600.0 * p[CAPACITY_AH])
    clamped = 0
    if raw < 0.0:
        soc = 0.0
        clamped = 1
    elif raw > 1.0:
        soc = 1.0
        clamped = 1
    else:
        soc = raw
    return soc, tc, ts, clamped, raw


def step_state(p, soc, tc, ts, current, dt, n_sub):
    """Advance (soc, t_core, t_surf) one control step of dt seconds.

    Returns (soc, t_core, t_surf, clamped) with clamped = 1 when the
    charge integral left [0, 1] and was saturated.
    """
    soc, tc, ts, clamped, _ = _advance(p, soc, tc, ts, current, dt, n_sub)
    return soc, tc, ts, clamped


def horizon_cost(
    p,
    soc,
    tc,
    ts,
    currents,
    n_steps,
    dt,
    n_sub,
    soc_ref,
    q_soc,
    r_effort,
    penalty_weight,
    soc_min,
    soc_max,
    t_max,
    v_max,
):
    """Augmented cost of a current sequence applied from the given state.

    Tracking and effort terms plus penalty_weight * sum of squared state
    constraint violations (voltage at each applied step, pre-clamp charge
    and both temperatures after each step). Input bounds are the caller's
    job (projection).
    """
    tracking = 0.0
    effort = 0.0
    pen = 0.0
    for j in range(n_steps):
        cur = currents[j]
        v = terminal_voltage(p, soc, cur)
        dv = v - v_max
        if dv > 0.0:
            pen += dv * dv
        soc, tc, ts, _, raw = _advance(p, soc, tc, ts, cur, dt, n_sub)
        d = soc_min - raw
        if d > 0.0:
            pen += d * d
        d = raw - soc_max
        if d > 0.0:
            pen += d * d
        d = tc - t_max
        if d > 0.0:
            pen += d * d
        d = ts - t_max
        if d > 0.0:
            pen += d * d
        e = soc - soc_ref
        tracking += e * e
        effort += cur * cur
    return q_soc * tracking + r_effort * effort + penalty_weight * pen
