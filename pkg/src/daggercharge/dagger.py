"""Dataset-aggregation imitation learning and the behavioral-cloning baseline.

The loop: generate the initial dataset with the pure expert, then per
iteration train a fresh policy on the aggregate, roll out the
expert/learner mixture (expert branch with probability beta_i =
beta0 * decay^i), label every visited state with the expert, and append.
The returned policy is trained on the final aggregate. Behavioral
cloning shares the simulator, expert, architecture and training
configuration and differs only in collecting all episodes with the
expert.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .battery import BatteryParams, BatteryState, NoiseSpec
from .dataset import Dataset, aggregate, generate_episodes
from .expert import ExpertConfig
from .policy import Architecture, FeatureStats, PolicyModel, TrainConfig, train


@dataclass(frozen=True)
class DaggerConfig:
    n_iterations: int = 15
    beta0: float = 1.0
    beta_decay: float = 0.5
    episodes_initial: int = 500
    episodes_per_iter: int = 100
    seed: int = 0
    n_w: int = 20
    n_steps: int = 200
    rest_steps: int = 30
    ts: float = 10.0
    obs_noise: NoiseSpec = NoiseSpec()  # rollout windows are recorded clean by default
    refit_stats_per_iter: bool = False
    warm_start_training: bool = False  # continue from the previous iteration's weights
    plateau_exit_rel: float | None = None  # opt-in early exit, e.g. 1e-4 relative improvement
    jobs: int = 1

    def __post_init__(self):
        if not 0.0 <= self.beta0 <= 1.0:
            raise ValueError("beta0 must lie in [0, 1]")
        if not 0.0 <= self.beta_decay <= 1.0:
            raise ValueError("beta_decay must lie in [0, 1]")
        if self.n_iterations < 0:
            raise ValueError("n_iterations must be >= 0")
        if self.episodes_initial < 1 or self.episodes_per_iter < 1:
            raise ValueError("episode counts must be >= 1")
        if self.rest_steps < self.n_w:
            raise ValueError("rest_steps must be >= n_w")


def beta_schedule(cfg: DaggerConfig, iteration: int) -> float:
    """Mixing probability for a given iteration; beta0 * decay^i, exact."""
    return cfg.beta0 * cfg.beta_decay**iteration


def mixed_policy_action(beta: float, expert_action_fn, learner_action_fn,
                        rng: np.random.Generator) -> tuple[float, bool]:
    """Bernoulli(beta) choice between expert and learner actions.

    Returns (current, used_expert); the flag records the chosen branch.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    use_expert = bool(rng.random() < beta)
    return (expert_action_fn() if use_expert else learner_action_fn()), use_expert


class MixedActing:
    """Per-step expert/learner mixture used during DAGGER rollouts."""

    def __init__(self, beta: float, model: PolicyModel, rng: np.random.Generator):
        self.beta = beta
        self.model = model
        self.rng = rng
        self.branch_log: list[bool] = []

    def reset(self) -> None:
        self.branch_log = []

    def act(self, window: np.ndarray, state: BatteryState, soc_ref: float,
            expert_current: float) -> float:
        current, used_expert = mixed_policy_action(
            self.beta,
            lambda: expert_current,
            lambda: self.model.forward(window, soc_ref),
            self.rng,
        )
        self.branch_log.append(used_expert)
        return current


def _derived_seeds(master: int, *tags: int) -> tuple[int, int]:
    ss = np.random.SeedSequence([master, *tags])
    a, b = ss.generate_state(2)
    return int(a), int(b)


def _violation_summary(trajectories, bounds) -> dict:
    t_core_steps = 0
    v_steps = 0
    total = 0
    for tr in trajectories:
        main = tr.main
        t_core_steps += int(np.sum(tr.t_core[main] > bounds.t_max))
        v_steps += int(np.sum(tr.voltage[main] > bounds.v_max))
        total += tr.spec.n_steps
    return {"steps": total, "t_core_violations": t_core_steps, "v_violations": v_steps}


def _train_round(arch, stats, dataset, train_cfg, master_seed, round_index, prev_model=None):
    """Train a model for one round: fresh initialization by default, or
    continued from prev_model's weights when warm starting."""
    init_seed, shuffle_seed = _derived_seeds(master_seed, 101, round_index)
    model = PolicyModel.build(arch, seed=init_seed, noise_spec=train_cfg.noise,
                              dtype=np.dtype(train_cfg.dtype))
    if prev_model is not None:
        model.net.load_parameters(prev_model.net.copy_parameters())
        model.stats = prev_model.stats
    elif stats is not None:
        model.stats = stats
    cfg = replace(train_cfg, seed=shuffle_seed)
    return train(model, dataset, cfg)


def run_dagger(
    cfg: DaggerConfig,
    expert_cfg: ExpertConfig,
    train_cfg: TrainConfig,
    arch: Architecture,
    base_params: BatteryParams | None = None,
    out_dir: str | Path | None = None,
    resume: bool = False,
) -> tuple[PolicyModel, dict]:
    """Full aggregation loop; returns the final policy and a run report.

    With an out_dir, each iteration leaves iterNN.ckpt and
    iterNN.report.json behind, plus the rolling aggregate and a progress
    file that --resume picks up; the final policy lands in
    policy_final.ckpt. Any failure is re-raised tagged with the iteration
    after saving partial artifacts.
    """
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    report = {
        "episodes_initial": cfg.episodes_initial,
        "episodes_per_iter": cfg.episodes_per_iter,
        "n_iterations": cfg.n_iterations,
        "betas": [],
        "iterations": [],
    }
    start_iter = 1
    ds = None
    if resume and out is not None and (out / "progress.json").is_file():
        progress = json.loads((out / "progress.json").read_text())
        ds = Dataset.load(out / "aggregate")
        start_iter = progress["completed_iteration"] + 1
        report = progress["report"]

    if ds is None:
        ds, trajs = generate_episodes(
            cfg.episodes_initial,
            cfg.seed,
            expert_cfg,
            acting="expert",
            base_params=base_params,
            n_w=cfg.n_w,
            obs_noise=cfg.obs_noise,
            n_steps=cfg.n_steps,
            rest_steps=cfg.rest_steps,
            ts=cfg.ts,
            episode_index_offset=0,
            iteration=0,
            policy_tag="expert",
            jobs=cfg.jobs,
        )
        report["d0"] = {
            "rows": len(ds),
            "episodes": cfg.episodes_initial,
            **_violation_summary(trajs, expert_cfg.bounds),
        }

    if cfg.refit_stats_per_iter:
        stats = None
    else:
        # fitted on the initial-round rows only and frozen thereafter,
        # identical whether the run is fresh or resumed
        d0_rows = ds.row_iterations() == 0
        stats = FeatureStats.fit(ds.windows[d0_rows], ds.soc_refs[d0_rows])

    model = None
    prev_final_loss = None
    for i in range(start_iter, cfg.n_iterations + 1):
        try:
            prev = model if cfg.warm_start_training else None
            model, hist = _train_round(arch, stats, ds, train_cfg, cfg.seed, i, prev_model=prev)
            beta = beta_schedule(cfg, i)
            offset = cfg.episodes_initial + (i - 1) * cfg.episodes_per_iter
            d_new, trajs = generate_episodes(
                cfg.episodes_per_iter,
                cfg.seed,
                expert_cfg,
                acting="mixed",
                model=model,
                beta=beta,
                base_params=base_params,
                n_w=cfg.n_w,
                obs_noise=cfg.obs_noise,
                n_steps=cfg.n_steps,
                rest_steps=cfg.rest_steps,
                ts=cfg.ts,
                episode_index_offset=offset,
                iteration=i,
                policy_tag=f"mixed:beta={beta}",
                jobs=cfg.jobs,
            )
            ds = aggregate(ds, d_new)

            expert_steps = sum(int(np.sum(tr.acting_expert_branch)) for tr in trajs
                               if tr.acting_expert_branch is not None)
            acted_steps = sum(tr.spec.n_steps for tr in trajs)
            entry = {
                "iteration": i,
                "beta": beta,
                "dataset_rows": len(ds),
                "train_loss": hist["train_loss"][-1],
                "val_loss": hist["val_loss"][-1],
                "epochs_run": hist["stopped_epoch"],
                "expert_branch_fraction": expert_steps / max(acted_steps, 1),
                "rollout": _violation_summary(trajs, expert_cfg.bounds),
            }
            report["betas"].append(beta)
            report["iterations"].append(entry)

            if out is not None:
                model.save(out / f"iter{i:02d}.ckpt")
                (out / f"iter{i:02d}.report.json").write_text(json.dumps(entry, indent=2))
                ds.save(out / "aggregate")
                (out / "progress.json").write_text(
                    json.dumps({"completed_iteration": i, "report": report}, indent=2)
                )

            if cfg.plateau_exit_rel is not None and prev_final_loss is not None:
                rel = abs(prev_final_loss - hist["train_loss"][-1]) / max(prev_final_loss, 1e-12)
                if rel < cfg.plateau_exit_rel:
                    break
            prev_final_loss = hist["train_loss"][-1]
        except Exception as exc:
            raise RuntimeError(f"DAGGER aborted at iteration {i}; partial artifacts in {out}") from exc

    prev = model if cfg.warm_start_training else None
    model, hist = _train_round(arch, stats, ds, train_cfg, cfg.seed, cfg.n_iterations + 1,
                               prev_model=prev)
    report["final"] = {
        "dataset_rows": len(ds),
        "dataset_episodes": cfg.episodes_initial + cfg.n_iterations * cfg.episodes_per_iter,
        "train_loss": hist["train_loss"][-1],
        "val_loss": hist["val_loss"][-1],
        "epochs_run": hist["stopped_epoch"],
    }
    if out is not None:
        model.save(out / "policy_final.ckpt")
        (out / "dagger_report.json").write_text(json.dumps(report, indent=2))
    return model, report


def run_behavioral_cloning(
    episodes: int,
    cfg: DaggerConfig,
    expert_cfg: ExpertConfig,
    train_cfg: TrainConfig,
    arch: Architecture,
    base_params: BatteryParams | None = None,
    out_dir: str | Path | None = None,
) -> tuple[PolicyModel, dict]:
    """Benchmark pipeline: all episodes from the pure expert, one training."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    ds, trajs = generate_episodes(
        episodes,
        cfg.seed,
        expert_cfg,
        acting="expert",
        base_params=base_params,
        n_w=cfg.n_w,
        obs_noise=cfg.obs_noise,
        n_steps=cfg.n_steps,
        rest_steps=cfg.rest_steps,
        ts=cfg.ts,
        episode_index_offset=0,
        iteration=0,
        policy_tag="expert",
        jobs=cfg.jobs,
    )
    model, hist = _train_round(arch, None, ds, train_cfg, cfg.seed, 0)
    report = {
        "episodes": episodes,
        "dataset_rows": len(ds),
        "train_loss": hist["train_loss"][-1],
        "val_loss": hist["val_loss"][-1],
        "epochs_run": hist["stopped_epoch"],
        "rollout": _violation_summary(trajs, expert_cfg.bounds),
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        model.save(out / "policy_bc.ckpt")
        (out / "bc_report.json").write_text(json.dumps(report, indent=2))
    return model, report
