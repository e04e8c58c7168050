"""Statistical validation and benchmarking.

Each policy is rolled out closed loop on randomized episodes drawn from
the training distribution; at every control step the expert is queried
at the same true state, giving the imitation-error distribution
(policy current minus expert current). Constraint statistics are
counts of violating steps plus the conditional mean/std of the positive
exceedance over violating steps only. Core-temperature violations are
the headline number; surface violations are logged separately. A wall
clock benchmark compares expert solve times across horizons against the
policy's forward pass.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .battery import BatteryParams, BatteryState, NoiseSpec, observe
from .dataset import (
    DEFAULT_WINDOW,
    EpisodeSpec,
    ExpertActing,
    Trajectory,
    run_episode,
    sample_episode_spec,
)
from .expert import ExpertConfig, ExpertController, solve_horizon
from .policy import PolicyActing, PolicyModel

EVAL_SEED_STRIDE = 0x5EED0000  # offsets evaluation episode seeds away from training ones


@dataclass
class ViolationStats:
    """Count of violating steps and conditional mean/std of the exceedance."""

    count: int = 0
    mean: float = 0.0
    std: float = 0.0

    @classmethod
    def from_exceedances(cls, exc: np.ndarray) -> "ViolationStats":
        if exc.size == 0:
            return cls()
        return cls(count=int(exc.size), mean=float(exc.mean()), std=float(exc.std()))


@dataclass
class PolicyEval:
    name: str
    steps: int
    error_mean: float
    error_std: float
    hist_counts: list
    hist_edges: list
    temp_core: ViolationStats
    temp_surf: ViolationStats
    voltage: ViolationStats
    soc_terminal_abs_err: list
    raw_temp_core_exceedances: list = field(default_factory=list)
    raw_voltage_exceedances: list = field(default_factory=list)


@dataclass
class EvalReport:
    n_episodes: int
    seed: int
    policies: dict
    timing: list | None = None

    def to_json_dict(self) -> dict:
        return {
            "n_episodes": self.n_episodes,
            "seed": self.seed,
            "policies": {k: asdict(v) for k, v in self.policies.items()},
            "timing": self.timing,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2))

    def save_histograms(self, out_dir: str | Path) -> list[Path]:
        """One CSV per policy with columns bin_lo,bin_hi,count."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, pe in self.policies.items():
            path = out / f"current_error_hist_{name}.csv"
            edges = np.asarray(pe.hist_edges)
            counts = np.asarray(pe.hist_counts)
            table = np.column_stack([edges[:-1], edges[1:], counts])
            np.savetxt(path, table, delimiter=",", header="bin_lo,bin_hi,count", comments="")
            written.append(path)
        return written


def _check_compatible(model: PolicyModel, expert_cfg: ExpertConfig, n_w: int) -> None:
    b = expert_cfg.bounds
    if model.arch.n_w != n_w:
        raise ValueError(f"model n_w={model.arch.n_w} incompatible with evaluation n_w={n_w}")
    if (model.arch.i_min, model.arch.i_max) != (b.i_min, b.i_max):
        raise ValueError("model current bounds differ from the expert's")


def evaluate_controllers(
    named_acting: dict,
    expert_cfg: ExpertConfig,
    n_episodes: int,
    seed: int,
    base_params: BatteryParams | None = None,
    n_w: int = DEFAULT_WINDOW,
    n_steps: int = 200,
    rest_steps: int = 30,
    ts: float = 10.0,
    obs_noise: NoiseSpec = NoiseSpec(),
    hist_bins: int = 80,
) -> EvalReport:
    """Closed-loop evaluation of acting controllers against the expert.

    All controllers see the same episode specs (seeded); the expert
    label at every visited true state comes from the episode runner.
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    b = expert_cfg.bounds
    span = b.i_max - b.i_min
    edges = np.linspace(-span, span, hist_bins + 1)

    policies = {}
    for name, acting_factory in named_acting.items():
        errors = []
        t_core_exc = []
        t_surf_exc = []
        v_exc = []
        soc_err = []
        steps = 0
        for ep in range(n_episodes):
            spec = sample_episode_spec(
                (seed + EVAL_SEED_STRIDE) ^ ep,
                base_params=base_params,
                n_steps=n_steps,
                rest_steps=rest_steps,
                ts=ts,
            )
            labeler = ExpertController(spec.params, expert_cfg)
            traj, _ = run_episode(spec, acting_factory(), labeler, n_w=n_w, obs_noise=obs_noise)
            main = traj.main
            errors.append(traj.current[main] - traj.label[main])
            dt_core = traj.t_core[main] - b.t_max
            t_core_exc.append(dt_core[dt_core > 0])
            dt_surf = traj.t_surf[main] - b.t_max
            t_surf_exc.append(dt_surf[dt_surf > 0])
            dv = traj.voltage[main] - b.v_max
            v_exc.append(dv[dv > 0])
            soc_err.append(abs(traj.final_state.soc - spec.soc_ref))
            steps += spec.n_steps
        errors = np.concatenate(errors)
        t_core_exc = np.concatenate(t_core_exc)
        t_surf_exc = np.concatenate(t_surf_exc)
        v_exc = np.concatenate(v_exc)
        counts, _ = np.histogram(errors, bins=edges)
        policies[name] = PolicyEval(
            name=name,
            steps=steps,
            error_mean=float(errors.mean()),
            error_std=float(errors.std()),
            hist_counts=counts.tolist(),
            hist_edges=edges.tolist(),
            temp_core=ViolationStats.from_exceedances(t_core_exc),
            temp_surf=ViolationStats.from_exceedances(t_surf_exc),
            voltage=ViolationStats.from_exceedances(v_exc),
            soc_terminal_abs_err=[float(e) for e in soc_err],
            raw_temp_core_exceedances=t_core_exc.tolist(),
            raw_voltage_exceedances=v_exc.tolist(),
        )
    return EvalReport(n_episodes=n_episodes, seed=seed, policies=policies)


def evaluate_policies(
    dagger_model: PolicyModel | None,
    bc_model: PolicyModel | None,
    expert_cfg: ExpertConfig,
    n_episodes: int,
    seed: int,
    base_params: BatteryParams | None = None,
    include_expert: bool = False,
    **kwargs,
) -> EvalReport:
    """Compare the trained policies (and optionally the expert itself)."""
    n_w = kwargs.get("n_w", DEFAULT_WINDOW)
    named = {}
    if dagger_model is not None:
        _check_compatible(dagger_model, expert_cfg, n_w)
        named["dagger"] = lambda m=dagger_model: PolicyActing(m)
    if bc_model is not None:
        _check_compatible(bc_model, expert_cfg, n_w)
        named["bc"] = lambda m=bc_model: PolicyActing(m)
    if include_expert:
        named["expert"] = ExpertActing
    if not named:
        raise ValueError("nothing to evaluate")
    return evaluate_controllers(named, expert_cfg, n_episodes, seed,
                                base_params=base_params, **kwargs)


def showcase_scenario(base_params: BatteryParams | None = None, seed: int = 0) -> EpisodeSpec:
    """Reference charging task: 0.25 -> 0.90 soc, 302.5 K start, 4000 s."""
    from dataclasses import replace

    params = replace(base_params or BatteryParams(), capacity_ah=6.75, r_sei_ohm=0.0165)
    return EpisodeSpec(
        params=params,
        soc0=0.25,
        t_core0=302.5,
        t_surf0=302.5,
        soc_ref=0.90,
        n_steps=400,
        rest_steps=30,
        ts=10.0,
        seed=seed,
    )


def single_scenario_trace(
    acting_factory,
    expert_cfg: ExpertConfig,
    scenario: EpisodeSpec,
    n_w: int = DEFAULT_WINDOW,
    obs_noise: NoiseSpec = NoiseSpec(),
) -> dict[str, Trajectory]:
    """Run the scenario under the policy and under the expert, aligned.

    No early abort on violations; both trajectories cover the full
    horizon for plotting.
    """
    out = {}
    for name, factory in (("policy", acting_factory), ("expert", ExpertActing)):
        labeler = ExpertController(scenario.params, expert_cfg)
        traj, _ = run_episode(scenario, factory(), labeler, n_w=n_w, obs_noise=obs_noise)
        out[name] = traj
    return out


def trace_to_csv(traj: Trajectory, path: str | Path) -> None:
    """Time series (t, soc, t_core, t_surf, voltage, current) as CSV."""
    t = np.arange(traj.spec.total_steps) * traj.spec.ts
    table = np.column_stack([t, traj.soc, traj.t_core, traj.t_surf, traj.voltage, traj.current])
    np.savetxt(path, table, delimiter=",",
               header="time_s,soc,t_core_k,t_surf_k,voltage_v,current_a", comments="")


def _timing_states(n_states: int, seed: int, base_params: BatteryParams | None):
    """States for benchmarking: inside the safety region so every solve runs."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_states):
        spec = sample_episode_spec(int(rng.integers(2**31)), base_params=base_params)
        state = BatteryState(
            soc=rng.uniform(0.1, 0.6),
            t_core=rng.uniform(299.0, 310.0),
            t_surf=rng.uniform(299.0, 310.0),
        )
        out.append((state, spec.params, rng.uniform(0.7, 1.0)))
    return out


def bench_timing(
    expert_cfg: ExpertConfig,
    policy: PolicyModel,
    horizons: tuple[int, ...] = (1, 2, 4, 8, 16),
    n_states: int = 30,
    seed: int = 0,
    base_params: BatteryParams | None = None,
    warmup: int = 3,
    repeats: int = 3,
) -> list[dict]:
    """Wall-clock comparison: expert solve per horizon vs policy forward.

    Cold solves (no warm start), monotonic per-call clock, warm-up calls
    discarded, `repeats` timed calls per state; each row reports mean,
    std and the scheduler-noise-resistant median.
    """
    from dataclasses import replace

    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    cases = _timing_states(n_states, seed, base_params)

    def timed(fn) -> dict:
        times = []
        for j, case in enumerate(cases):
            if j < warmup:
                fn(case)
            for _ in range(repeats):
                t0 = time.perf_counter()
                fn(case)
                times.append(time.perf_counter() - t0)
        arr = np.array(times)
        return {
            "mean_s": float(arr.mean()),
            "std_s": float(arr.std()),
            "median_s": float(np.median(arr)),
            "n": len(cases),
        }

    rows = []
    for h in horizons:
        cfg_h = replace(expert_cfg, horizon=h)
        rows.append({
            "horizon": h,
            "method": "expert",
            **timed(lambda c: solve_horizon(c[0], c[1], c[2], cfg_h)),
        })

        def policy_call(case):
            state, params, soc_ref = case
            ob = observe(state, params, 0.0)
            window = np.tile([ob.voltage, ob.temp_surf, 0.0], (policy.arch.n_w + 1, 1))
            policy.forward(window, soc_ref)

        rows.append({"horizon": h, "method": "policy", **timed(policy_call)})
    return rows
