"""Command-line entry point.

Subcommands: simulate (showcase or custom scenario traces), train
(behavioral cloning or dataset aggregation), evaluate (closed-loop
statistics), bench (expert-vs-policy timing sweep). Every subcommand is
deterministic under --seed and writes only below --out. Exit codes:
0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .battery import BatteryParams
from .config import (
    ConfigError,
    battery_params_from,
    dagger_config_from,
    expert_config_from,
    load_document,
    train_config_from,
    validate_document,
)
from .core import BACKEND
from .dagger import DaggerConfig, run_behavioral_cloning, run_dagger
from .dataset import EpisodeSpec
from .evaluation import (
    bench_timing,
    evaluate_policies,
    showcase_scenario,
    single_scenario_trace,
    trace_to_csv,
)
from .expert import ExpertConfig
from .policy import Architecture, CheckpointError, PolicyActing, PolicyModel


def _load_configs(path: str | None) -> tuple[BatteryParams, ExpertConfig, dict, dict]:
    if path is None:
        return BatteryParams(), ExpertConfig(), {}, {}
    doc = load_document(path)
    validate_document(doc)
    return (
        battery_params_from(doc),
        expert_config_from(doc),
        dict(doc.get("train", {})),
        dict(doc.get("dagger", {})),
    )


def _scenario_from(arg: str, params: BatteryParams, seed: int) -> EpisodeSpec:
    if arg == "showcase":
        return showcase_scenario(base_params=params, seed=seed)
    doc = load_document(arg)
    battery_overrides = {k: doc.pop(k) for k in ("capacity_ah", "r_sei_ohm") if k in doc}
    sc = showcase_scenario(base_params=replace(params, **battery_overrides), seed=seed)
    fields = {"soc0", "t_core0", "t_surf0", "soc_ref", "n_steps", "rest_steps", "ts"}
    unknown = set(doc) - fields
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    return replace(sc, **doc)


def _desk_scale(scale: float, dagger_cfg: DaggerConfig, arch: Architecture,
                iters_given: bool) -> tuple[DaggerConfig, Architecture]:
    """Desk-scale protocol: episode counts shrink by the scale factor,
    hidden sizes by max(scale, 0.25), and the iteration count drops to 5
    unless set explicitly."""
    if scale >= 1.0:
        return dagger_cfg, arch
    episodes_initial = max(1, math.ceil(dagger_cfg.episodes_initial * scale))
    episodes_per_iter = max(1, math.ceil(dagger_cfg.episodes_per_iter * scale))
    n_iter = dagger_cfg.n_iterations if iters_given else min(dagger_cfg.n_iterations, 5)
    cfg = replace(dagger_cfg, episodes_initial=episodes_initial,
                  episodes_per_iter=episodes_per_iter, n_iterations=n_iter)
    return cfg, arch.scaled(max(scale, 0.25))


def cmd_simulate(args) -> int:
    params, expert_cfg, _, dagger_doc = _load_configs(args.config)
    n_w = int(dagger_doc.get("n_w", 20))
    scenario = _scenario_from(args.scenario, params, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.policy == "expert":
        from .dataset import ExpertActing

        factory = ExpertActing
    else:
        model = PolicyModel.load(args.policy)
        n_w = model.arch.n_w
        factory = lambda: PolicyActing(model)  # noqa: E731

    traces = single_scenario_trace(factory, expert_cfg, scenario, n_w=n_w)
    for name, traj in traces.items():
        trace_to_csv(traj, out / f"trace_{name}.csv")
    summary = {
        name: {
            "terminal_soc": traj.final_state.soc,
            "soc_ref": scenario.soc_ref,
            "max_t_core": float(traj.t_core.max()),
            "max_voltage": float(traj.voltage.max()),
        }
        for name, traj in traces.items()
    }
    (out / "trace_summary.json").write_text(json.dumps(summary, indent=2))
    print(f"wrote {len(traces)} traces to {out} (backend: {BACKEND})")
    return 0


def cmd_train(args) -> int:
    params, expert_cfg, train_doc, dagger_doc = _load_configs(args.config)
    train_cfg = train_config_from({"train": train_doc}, seed=args.seed)
    dagger_cfg = dagger_config_from({"dagger": dagger_doc}, seed=args.seed, jobs=args.jobs)
    if args.iters is not None:
        dagger_cfg = replace(dagger_cfg, n_iterations=args.iters)
    if args.episodes is not None:
        dagger_cfg = replace(dagger_cfg, episodes_initial=args.episodes)
    arch = Architecture(n_w=dagger_cfg.n_w, i_min=expert_cfg.bounds.i_min,
                        i_max=expert_cfg.bounds.i_max)
    dagger_cfg, arch = _desk_scale(args.scale, dagger_cfg, arch, args.iters is not None)

    out = Path(args.out)
    if args.mode == "bc":
        episodes = args.episodes
        if episodes is None:
            episodes = dagger_cfg.episodes_initial + dagger_cfg.n_iterations * dagger_cfg.episodes_per_iter
        elif args.scale < 1.0:
            episodes = max(1, math.ceil(episodes * args.scale))
        model, report = run_behavioral_cloning(
            episodes, dagger_cfg, expert_cfg, train_cfg, arch,
            base_params=params, out_dir=out,
        )
        print(f"behavioral cloning done: {report['dataset_rows']} rows, "
              f"final loss {report['train_loss']:.4f} A^2")
    else:
        model, report = run_dagger(
            dagger_cfg, expert_cfg, train_cfg, arch,
            base_params=params, out_dir=out, resume=args.resume,
        )
        print(f"dagger done: {report['final']['dataset_rows']} rows over "
              f"{report['final']['dataset_episodes']} episodes, "
              f"final loss {report['final']['train_loss']:.4f} A^2")
    return 0


def cmd_evaluate(args) -> int:
    params, expert_cfg, _, dagger_doc = _load_configs(args.config)
    dagger_model = PolicyModel.load(args.dagger) if args.dagger else None
    bc_model = PolicyModel.load(args.bc) if args.bc else None
    report = evaluate_policies(
        dagger_model, bc_model, expert_cfg, args.episodes, args.seed,
        base_params=params, include_expert=args.include_expert,
        n_w=int(dagger_doc.get("n_w", 20)),
        n_steps=int(dagger_doc.get("n_steps", 200)),
        rest_steps=int(dagger_doc.get("rest_steps", 30)),
        ts=float(dagger_doc.get("ts", 10.0)),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.save(out / "eval_report.json")
    report.save_histograms(out)
    for name, pe in report.policies.items():
        print(f"{name}: {pe.steps} steps, current error {pe.error_mean:+.3f} +/- {pe.error_std:.3f} A, "
              f"T_core violations {pe.temp_core.count} (mean {pe.temp_core.mean:.3f} K), "
              f"V violations {pe.voltage.count} (mean {pe.voltage.mean * 1e3:.1f} mV)")
    return 0


def cmd_bench(args) -> int:
    params, expert_cfg, _, _ = _load_configs(args.config)
    if args.policy:
        model = PolicyModel.load(args.policy)
    else:
        arch = Architecture(n_w=20, i_min=expert_cfg.bounds.i_min, i_max=expert_cfg.bounds.i_max)
        model = PolicyModel.build(arch, seed=args.seed)
        model.stats.fitted = True  # untrained timing stand-in, identity stats
    horizons = tuple(int(h) for h in args.horizons.split(","))
    table = bench_timing(expert_cfg, model, horizons=horizons, n_states=args.states,
                         seed=args.seed, base_params=params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "timing.json").write_text(json.dumps(table, indent=2))
    print(f"{'H':>4} {'method':>8} {'mean [ms]':>12} {'std [ms]':>10} {'median [ms]':>12}")
    for row in table:
        print(f"{row['horizon']:>4} {row['method']:>8} {row['mean_s'] * 1e3:>12.3f} "
              f"{row['std_s'] * 1e3:>10.3f} {row['median_s'] * 1e3:>12.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="daggercharge",
        description="Constrained battery charging: simulator, horizon-solving expert, "
                    "imitation-learned policies.",
    )
    parser.add_argument("--config", help="JSON config document (battery fields plus "
                                         "expert/train/dagger sections)")
    parser.add_argument("--out", default="out", help="output directory (default: ./out)")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--jobs", type=int, default=1, help="parallel episode workers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write closed-loop traces for one scenario")
    p.add_argument("--policy", default="expert", help="'expert' or a checkpoint path")
    p.add_argument("--scenario", default="showcase", help="'showcase' or a scenario JSON path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train a policy (behavioral cloning or aggregation loop)")
    p.add_argument("mode", choices=["bc", "dagger"])
    p.add_argument("--episodes", type=int, help="episode count (bc total / dagger initial)")
    p.add_argument("--iters", type=int, help="aggregation iterations")
    p.add_argument("--scale", type=float, default=1.0,
                   help="desk-scale multiplier: episodes x S, hidden sizes x max(S, 0.25), "
                        "5 iterations unless --iters is given")
    p.add_argument("--resume", action="store_true", help="continue from saved progress in --out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="closed-loop statistics vs the expert")
    p.add_argument("--dagger", help="aggregation-trained checkpoint")
    p.add_argument("--bc", help="behavioral-cloning checkpoint")
    p.add_argument("--include-expert", action="store_true",
                   help="also evaluate the expert against itself")
    p.add_argument("--episodes", type=int, default=100)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="solve-time sweep over prediction horizons")
    p.add_argument("--policy", help="checkpoint for the policy side (default: fresh net)")
    p.add_argument("--horizons", default="1,2,4,8,16")
    p.add_argument("--states", type=int, default=30)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "evaluate" and args.episodes < 1:
        parser.error("--episodes must be >= 1")
    if args.command == "bench" and args.states < 1:
        parser.error("--states must be >= 1")
    try:
        return args.func(args)
    except (ConfigError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
