"""Scout rehearsal of the desk-scale DAGGER-vs-BC comparison (criterion 6)."""

import sys
import time

import numpy as np

from daggercharge.dagger import DaggerConfig, run_behavioral_cloning, run_dagger
from daggercharge.evaluation import evaluate_policies
from daggercharge.expert import ExpertConfig
from daggercharge.policy import Architecture, TrainConfig

SCALE = sys.argv[1] if len(sys.argv) > 1 else "scout"

if SCALE == "scout":
    dagger_cfg = DaggerConfig(n_iterations=3, episodes_initial=10, episodes_per_iter=3, seed=202)
    bc_episodes = 19
    train_cfg = TrainConfig(epochs=120, batch_size=256, plateau_epochs=15, seed=0)
    eval_episodes = 12
else:  # desk
    dagger_cfg = DaggerConfig(n_iterations=5, episodes_initial=25, episodes_per_iter=5, seed=202,
                              warm_start_training=True)
    bc_episodes = 50
    train_cfg = TrainConfig(epochs=200, batch_size=128, plateau_epochs=20, seed=0)
    eval_episodes = 30

arch = Architecture(n_w=20).scaled(0.25)
expert_cfg = ExpertConfig()
print(f"arch: {arch}", flush=True)

t0 = time.time()
dagger_model, dreport = run_dagger(dagger_cfg, expert_cfg, train_cfg, arch, out_dir="/tmp/desk_artifacts")
print(f"dagger done in {time.time()-t0:.0f}s; final loss {dreport['final']['train_loss']:.3f} "
      f"val {dreport['final']['val_loss']:.3f} epochs {dreport['final']['epochs_run']}", flush=True)
for it in dreport["iterations"]:
    print(f"  iter {it['iteration']}: beta={it['beta']:.3f} rows={it['dataset_rows']} "
          f"loss={it['train_loss']:.3f} val={it['val_loss']:.3f} epochs={it['epochs_run']} "
          f"expert_frac={it['expert_branch_fraction']:.2f} "
          f"rollout_viol={it['rollout']['t_core_violations']}/{it['rollout']['steps']}", flush=True)

t0 = time.time()
bc_model, breport = run_behavioral_cloning(bc_episodes, dagger_cfg, expert_cfg, train_cfg, arch,
                                           out_dir="/tmp/desk_artifacts")
print(f"bc done in {time.time()-t0:.0f}s; final loss {breport['train_loss']:.3f}", flush=True)

t0 = time.time()
report = evaluate_policies(dagger_model, bc_model, expert_cfg, eval_episodes, seed=777)
report.save("/tmp/desk_artifacts/eval_report.json")
print(f"eval done in {time.time()-t0:.0f}s", flush=True)
for name, pe in report.policies.items():
    print(f"{name}: err mean {pe.error_mean:+.3f} std {pe.error_std:.3f} | "
          f"T_core viol {pe.temp_core.count} mean {pe.temp_core.mean:.4f} K std {pe.temp_core.std:.4f} | "
          f"V viol {pe.voltage.count} mean {pe.voltage.mean*1e3:.2f} mV | "
          f"soc err {np.mean(pe.soc_terminal_abs_err):.4f}", flush=True)

d = report.policies["dagger"]
b = report.policies["bc"]
print("\ncriterion (a) count:", d.temp_core.count, "<=", b.temp_core.count,
      "->", d.temp_core.count <= b.temp_core.count)
if b.temp_core.count:
    print("criterion (b) mean ratio:", f"{d.temp_core.mean:.4f} <= 0.6*{b.temp_core.mean:.4f}",
          "->", d.temp_core.mean <= 0.6 * b.temp_core.mean)
print("criterion (c) |mean err|:", f"{abs(d.error_mean):.4f} < {abs(b.error_mean):.4f}",
      "->", abs(d.error_mean) < abs(b.error_mean))
