# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled simulation kernels, twin of ``daggercharge._core_py``.

Same packed parameter layout and the same arithmetic, written with C
doubles. Kept in lockstep with the pure-Python backend; the twin-match
test asserts agreement to machine precision.
"""

from libc.math cimport asinh, fabs

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
OCV_P = 10
OCV_N = 16
N_PACKED = 22

DEF _CAP = 0
DEF _RSEI = 1
DEF _CC = 2
DEF _CS = 3
DEF _RCS = 4
DEF _RSE = 5
DEF _TENV = 6
DEF _GP = 7
DEF _GN = 8
DEF _SCALE = 9
DEF _OCVP = 10
DEF _OCVN = 16


cdef inline double _poly5(const double[::1] p, int off, double x) noexcept nogil:
    cdef double acc = p[off + 5]
    acc = acc * x + p[off + 4]
    acc = acc * x + p[off + 3]
    acc = acc * x + p[off + 2]
    acc = acc * x + p[off + 1]
    return acc * x + p[off]


cdef inline double _voltage(const double[::1] p, double soc, double current) noexcept nogil:
    cdef double up = _poly5(p, _OCVP, soc)
    cdef double un = _poly5(p, _OCVN, soc)
    cdef double eta = (p[_GP] - p[_GN]) * asinh(current / p[_SCALE])
    return up - un + eta + p[_RSEI] * current


cdef inline double _heat(const double[::1] p, double soc, double current) noexcept nogil:
    cdef double v = _voltage(p, soc, current)
    cdef double up = _poly5(p, _OCVP, soc)
    cdef double un = _poly5(p, _OCVN, soc)
    return fabs(current * (v - up + un))


cdef inline int _advance(
    const double[::1] p,
    double* soc,
    double* tc,
    double* ts,
    double* raw,
    double current,
    double dt,
    int n_sub,
) noexcept nogil:
    cdef double q = _heat(p, soc[0], current)
    cdef double cc = p[_CC]
    cdef double cs = p[_CS]
    cdef double rcs = p[_RCS]
    cdef double rse = p[_RSE]
    cdef double tenv = p[_TENV]
    cdef double h = dt / n_sub
    cdef double tcv = tc[0]
    cdef double tsv = ts[0]
    cdef double k1c, k1s, k2c, k2s, k3c, k3s, k4c, k4s
    cdef double ac, as_, bc, bs, gc, gs
    cdef int i
    for i in range(n_sub):
        k1c = (q - (tcv - tsv) / rcs) / cc
        k1s = ((tcv - tsv) / rcs - (tsv - tenv) / rse) / cs
        ac = tcv + 0.5 * h * k1c
        as_ = tsv + 0.5 * h * k1s
        k2c = (q - (ac - as_) / rcs) / cc
        k2s = ((ac - as_) / rcs - (as_ - tenv) / rse) / cs
        bc = tcv + 0.5 * h * k2c
        bs = tsv + 0.5 * h * k2s
        k3c = (q - (bc - bs) / rcs) / cc
        k3s = ((bc - bs) / rcs - (bs - tenv) / rse) / cs
        gc = tcv + h * k3c
        gs = tsv + h * k3s
        k4c = (q - (gc - gs) / rcs) / cc
        k4s = ((gc - gs) / rcs - (gs - tenv) / rse) / cs
        tcv = tcv + h * (k1c + 2.0 * (k2c + k3c) + k4c) / 6.0
        tsv = tsv + h * (k1s + 2.0 * (k2s + k3s) + k4s) / 6.0
    tc[0] = tcv
    ts[0] = tsv
    raw[0] = soc[0] + current * dt / (3600.0 * p[_CAP])
    cdef int clamped = 0
    if raw[0] < 0.0:
        soc[0] = 0.0
        clamped = 1
    elif raw[0] > 1.0:
        soc[0] = 1.0
        clamped = 1
    else:
        soc[0] = raw[0]
    return clamped


def open_circuit_potentials(const double[::1] p, double soc):
    """Electrode open-circuit potentials (U_cathode, U_anode) in volts."""
    return _poly5(p, _OCVP, soc), _poly5(p, _OCVN, soc)


def terminal_voltage(const double[::1] p, double soc, double current):
    """Terminal voltage [V]: OCV + asinh overpotentials + SEI ohmic drop."""
    return _voltage(p, soc, current)


def heat_rate(const double[::1] p, double soc, double current):
    """Instantaneous heat generation [W], |I * (V - U_p + U_n)|."""
    return _heat(p, soc, current)


def step_state(const double[::1] p, double soc, double tc, double ts,
               double current, double dt, int n_sub):
    """Advance (soc, t_core, t_surf) one control step of dt seconds."""
    cdef double raw
    cdef int clamped = _advance(p, &soc, &tc, &ts, &raw, current, dt, n_sub)
    return soc, tc, ts, clamped


def horizon_cost(
    const double[::1] p,
    double soc,
    double tc,
    double ts,
    const double[::1] currents,
    int n_steps,
    double dt,
    int n_sub,
    double soc_ref,
    double q_soc,
    double r_effort,
    double penalty_weight,
    double soc_min,
    double soc_max,
    double t_max,
    double v_max,
):
    """Augmented cost of a current sequence applied from the given state."""
    cdef double tracking = 0.0
    cdef double effort = 0.0
    cdef double pen = 0.0
    cdef double cur, v, dv, d, e, raw
    cdef int j
    for j in range(n_steps):
        cur = currents[j]
        v = _voltage(p, soc, cur)
        dv = v - v_max
        if dv > 0.0:
            pen += dv * dv
        _advance(p, &soc, &tc, &ts, &raw, cur, dt, n_sub)
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
