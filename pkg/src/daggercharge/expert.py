"""Receding-horizon charging expert.

At each step the expert minimizes a soc-tracking + control-effort cost
over an H-step current sequence subject to the simulator dynamics and
the safety constraint set, then applies only the first element. State
constraints (voltage, both temperatures, charge range) enter through an
exact quadratic penalty; current bounds are handled by projection. The
solver is projected gradient descent with central-difference gradients
and Armijo backtracking, warm-started from the previous step's shifted
solution. An exhaustive grid oracle over the same augmented cost serves
as the independent check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import core
from .battery import DEFAULT_SUBSTEPS, BatteryParams, BatteryState, terminal_voltage


@dataclass(frozen=True)
class Bounds:
    """Safety constraint set: current box, charge box, temperature and voltage caps."""

    i_min: float = -10.0
    i_max: float = 10.0
    soc_min: float = 0.0
    soc_max: float = 1.0
    t_max: float = 313.15
    v_max: float = 4.2

    def __post_init__(self):
        if self.i_min >= self.i_max:
            raise ValueError("i_min must be < i_max")
        if self.soc_min >= self.soc_max:
            raise ValueError("soc_min must be < soc_max")
        if self.t_max <= 0 or self.v_max <= 0:
            raise ValueError("t_max and v_max must be positive")


@dataclass(frozen=True)
class ExpertConfig:
    """Horizon, weights, sampling time and solver settings for the expert."""

    horizon: int = 4
    ts: float = 10.0
    q_soc: float = 1.0
    r: float = 1e-6
    bounds: Bounds = field(default_factory=Bounds)
    penalty_weight: float = 1e4
    solver: str = "smooth"  # "smooth" | "grid-oracle"
    max_iters: int = 200
    fd_step: float = 1e-3  # central-difference step [A]
    substeps: int = DEFAULT_SUBSTEPS
    grid_levels: int = 21

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.ts <= 0:
            raise ValueError("ts must be > 0")
        if self.q_soc < 0 or self.r < 0:
            raise ValueError("q_soc and r must be >= 0")
        if self.penalty_weight <= 0:
            raise ValueError("penalty_weight must be > 0")
        if self.solver not in ("smooth", "grid-oracle"):
            raise ValueError(f"unknown solver {self.solver!r}")


@dataclass
class SolveInfo:
    converged: bool
    iterations: int
    cost: float


# tolerance below which two costs count as a tie (broken by smaller sum |I|)
_TIE_TOL = 1e-9


def _is_better(cost: float, abs_sum: float, best_cost: float, best_abs_sum: float) -> bool:
    if cost < best_cost - _TIE_TOL:
        return True
    return abs(cost - best_cost) <= _TIE_TOL and abs_sum < best_abs_sum


def augmented_cost(
    state: BatteryState,
    params: BatteryParams,
    soc_ref: float,
    cfg: ExpertConfig,
    currents: np.ndarray,
) -> float:
    """Tracking + effort cost plus the penalty residual for a candidate sequence."""
    b = cfg.bounds
    seq = np.ascontiguousarray(currents, dtype=np.float64)
    return core.horizon_cost(
        params.packed,
        state.soc,
        state.t_core,
        state.t_surf,
        seq,
        len(seq),
        cfg.ts,
        cfg.substeps,
        soc_ref,
        cfg.q_soc,
        cfg.r,
        cfg.penalty_weight,
        b.soc_min,
        b.soc_max,
        b.t_max,
        b.v_max,
    )


def solve_horizon(
    state: BatteryState,
    params: BatteryParams,
    soc_ref: float,
    cfg: ExpertConfig,
    warm_start: np.ndarray | None = None,
) -> tuple[np.ndarray, SolveInfo]:
    """Minimize the augmented cost over an H-step current sequence.

    Returns the best iterate found and a SolveInfo; never raises on a
    stalled solve (converged=False flags budget exhaustion). The achieved
    cost is never worse than the all-zeros sequence.
    """
    if cfg.solver == "grid-oracle":
        seq = grid_oracle(state, params, soc_ref, cfg, cfg.grid_levels)
        return seq, SolveInfo(converged=True, iterations=0, cost=augmented_cost(state, params, soc_ref, cfg, seq))

    h = cfg.horizon
    b = cfg.bounds
    packed = params.packed
    hc = core.horizon_cost

    def cost(seq: np.ndarray) -> float:
        return hc(
            packed, state.soc, state.t_core, state.t_surf, seq, h,
            cfg.ts, cfg.substeps, soc_ref, cfg.q_soc, cfg.r, cfg.penalty_weight,
            b.soc_min, b.soc_max, b.t_max, b.v_max,
        )

    zeros = np.zeros(h)
    f_zero = cost(zeros)
    if warm_start is None:
        x = zeros.copy()
        f = f_zero
    else:
        x = np.zeros(h)
        w = np.asarray(warm_start, dtype=np.float64).ravel()[:h]
        x[: len(w)] = w
        np.clip(x, b.i_min, b.i_max, out=x)
        f = cost(x)
        if not _is_better(f, float(np.abs(x).sum()), f_zero, 0.0):
            x, f = zeros.copy(), f_zero

    fd = cfg.fd_step
    grad = np.empty(h)
    probe = x.copy()
    alpha = 1.0
    converged = False
    iters = 0
    for iters in range(1, cfg.max_iters + 1):
        for j in range(h):
            xj = x[j]
            probe[j] = xj + fd
            fp = cost(probe)
            probe[j] = xj - fd
            fm = cost(probe)
            probe[j] = xj
            grad[j] = (fp - fm) / (2.0 * fd)

        accepted = False
        a = alpha
        for _ in range(60):
            xn = np.clip(x - a * grad, b.i_min, b.i_max)
            diff = xn - x
            sq = float(diff @ diff)
            if sq < 1e-24:  # projection absorbed the whole step: stationary
                break
            fn = cost(xn)
            if fn <= f - 1e-4 * sq / a:
                x, f = xn, fn
                np.copyto(probe, x)
                alpha = min(a * 2.0, 1e6)
                accepted = True
                break
            a *= 0.5
        if not accepted:
            converged = True
            break

    return x, SolveInfo(converged=converged, iterations=iters, cost=f)


def grid_oracle(
    state: BatteryState,
    params: BatteryParams,
    soc_ref: float,
    cfg: ExpertConfig,
    levels: int,
) -> np.ndarray:
    """Exhaustive minimizer of the augmented cost over a uniform current grid.

    Enumerates all levels**H sequences on the true simulator via a prefix
    tree (shared prefixes advance the state once). Ties within 1e-9 in
    cost break toward the smaller sum of |I|.
    """
    if levels < 2:
        raise ValueError("levels must be >= 2")
    h = cfg.horizon
    if levels**h > 10**7:
        raise ValueError(f"grid budget exceeded: {levels}**{h} > 1e7 sequences")

    b = cfg.bounds
    grid = np.linspace(b.i_min, b.i_max, levels)
    packed = params.packed
    step_fn = core.step_state
    volt_fn = core.terminal_voltage
    pw = cfg.penalty_weight

    best = {"cost": np.inf, "abs": np.inf, "seq": None}
    seq = np.zeros(h)

    def descend(depth, soc, tc, ts, partial_cost, partial_abs):
        if depth == h:
            if _is_better(partial_cost, partial_abs, best["cost"], best["abs"]):
                best["cost"] = partial_cost
                best["abs"] = partial_abs
                best["seq"] = seq.copy()
            return
        for cur in grid:
            pen = 0.0
            v = volt_fn(packed, soc, cur)
            if v > b.v_max:
                pen += (v - b.v_max) ** 2
            raw = soc + cur * cfg.ts / (3600.0 * params.capacity_ah)
            soc2, tc2, ts2, _ = step_fn(packed, soc, tc, ts, cur, cfg.ts, cfg.substeps)
            if raw < b.soc_min:
                pen += (b.soc_min - raw) ** 2
            elif raw > b.soc_max:
                pen += (raw - b.soc_max) ** 2
            if tc2 > b.t_max:
                pen += (tc2 - b.t_max) ** 2
            if ts2 > b.t_max:
                pen += (ts2 - b.t_max) ** 2
            stage = cfg.q_soc * (soc2 - soc_ref) ** 2 + cfg.r * cur * cur + pw * pen
            seq[depth] = cur
            descend(depth + 1, soc2, tc2, ts2, partial_cost + stage, partial_abs + abs(cur))
        seq[depth] = 0.0

    descend(0, state.soc, state.t_core, state.t_surf, 0.0, 0.0)
    return best["seq"]


def expert_action(
    state: BatteryState,
    params: BatteryParams,
    soc_ref: float,
    cfg: ExpertConfig,
    warm_start: np.ndarray | None = None,
) -> float:
    """First element of the optimal sequence, with the safety override.

    Returns exactly 0 A when either node temperature already violates
    t_max, or when even a vanishing positive current would break v_max.
    """
    b = cfg.bounds
    if state.t_core > b.t_max or state.t_surf > b.t_max:
        return 0.0
    if terminal_voltage(state, params, 0.0) >= b.v_max:
        return 0.0
    seq, _ = solve_horizon(state, params, soc_ref, cfg, warm_start=warm_start)
    return float(seq[0])


class ExpertController:
    """Stateful wrapper owning the per-episode warm-start cache.

    Each call solves at the given true state, warm-started from the
    previous solution shifted by one step; episodes start from the zero
    sequence (the rest prefix). safety override mirrors expert_action.
    """

    def __init__(self, params: BatteryParams, cfg: ExpertConfig):
        self.params = params
        self.cfg = cfg
        self.last_info: SolveInfo | None = None
        self._warm: np.ndarray | None = None

    def reset(self) -> None:
        self._warm = None
        self.last_info = None

    def action(self, state: BatteryState, soc_ref: float) -> float:
        b = self.cfg.bounds
        if state.t_core > b.t_max or state.t_surf > b.t_max:
            return 0.0
        if terminal_voltage(state, self.params, 0.0) >= b.v_max:
            return 0.0
        seq, info = solve_horizon(state, self.params, soc_ref, self.cfg, warm_start=self._warm)
        self.last_info = info
        self._warm = np.roll(seq, -1)
        self._warm[-1] = seq[-1]
        return float(seq[0])
