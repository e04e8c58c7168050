"""Episode generation and dataset handling.

An episode is a rest prefix (zero current) followed by n_steps of
closed-loop control. At every step with a full measurement window the
row recorded is

    [V, T_s, I] * (n_w + 1) triples, oldest first, then soc_ref and the
    expert's optimal current at the true underlying state (the label).

The V and T_s entries of a triple are measured with the previously
applied current still flowing, and the I entry records that flowing
current, so every row is reconstructible at deployment time before the
new action is chosen. The last rest_steps - n_w rest steps are labeled
too, giving the learner resting-battery state-action pairs.

Datasets serialize as raw little-endian float64 (<name>.bin) next to a
JSON sidecar (<name>.meta.json) carrying the window size and per-block
provenance; a CSV export exists for inspection.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .battery import (
    DEFAULT_SUBSTEPS,
    BatteryParams,
    BatteryState,
    NoiseSpec,
    observe,
    step,
    terminal_voltage,
)
from .expert import ExpertConfig, ExpertController

DEFAULT_WINDOW = 20  # past measurements per row, in addition to the current one
N_CHANNELS = 3  # voltage, surface temperature, current

DATASET_FORMAT_VERSION = 1


def row_width(n_w: int) -> int:
    return N_CHANNELS * (n_w + 1) + 2


@dataclass(frozen=True)
class EpisodeSpec:
    """Everything one episode needs: initial conditions, reference, cell, seed."""

    params: BatteryParams
    soc0: float
    t_core0: float
    t_surf0: float
    soc_ref: float
    n_steps: int = 200
    rest_steps: int = 30
    ts: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.n_steps < 1 or self.rest_steps < 0:
            raise ValueError("n_steps must be >= 1 and rest_steps >= 0")
        if self.ts <= 0:
            raise ValueError("ts must be > 0")

    @property
    def total_steps(self) -> int:
        return self.rest_steps + self.n_steps


# Sampling ranges for randomized episodes
SOC0_RANGE = (0.0, 1.0)
TEMP0_RANGE = (298.15, 313.15)  # [K]
SOC_REF_RANGE = (0.7, 1.0)
CAPACITY_RANGE = (5.5, 8.0)  # [Ah]; 8 Ah fresh cell, 5.5 Ah end of life
R_SEI_RANGE = (0.014, 0.019)  # [ohm]; grows as the cell ages


def sample_episode_spec(
    rng_seed: int,
    base_params: BatteryParams | None = None,
    n_steps: int = 200,
    rest_steps: int = 30,
    ts: float = 10.0,
    couple_temps: bool = False,
) -> EpisodeSpec:
    """Draw a randomized episode: initial state, reference and aged cell.

    couple_temps forces t_core0 == t_surf0 (single uniform draw) instead
    of the default independent draws.
    """
    rng = np.random.default_rng(rng_seed)
    soc0 = rng.uniform(*SOC0_RANGE)
    t_core0 = rng.uniform(*TEMP0_RANGE)
    t_surf0 = t_core0 if couple_temps else rng.uniform(*TEMP0_RANGE)
    soc_ref = rng.uniform(*SOC_REF_RANGE)
    capacity = rng.uniform(*CAPACITY_RANGE)
    r_sei = rng.uniform(*R_SEI_RANGE)
    params = replace(base_params or BatteryParams(), capacity_ah=capacity, r_sei_ohm=r_sei)
    return EpisodeSpec(
        params=params,
        soc0=soc0,
        t_core0=t_core0,
        t_surf0=t_surf0,
        soc_ref=soc_ref,
        n_steps=n_steps,
        rest_steps=rest_steps,
        ts=ts,
        seed=int(rng_seed),
    )


@dataclass
class Trajectory:
    """True per-step records of one episode (for evaluation, not for the agent)."""

    spec: EpisodeSpec
    soc: np.ndarray
    t_core: np.ndarray
    t_surf: np.ndarray
    current: np.ndarray  # applied current per step
    voltage: np.ndarray  # terminal voltage under the applied current
    label: np.ndarray  # expert current at the true state; NaN before labeling starts
    final_state: BatteryState
    acting_expert_branch: np.ndarray | None = None  # mixed-policy branch log, main steps

    @property
    def main(self) -> slice:
        """Index range of the post-rest control steps."""
        return slice(self.spec.rest_steps, self.spec.total_steps)


class ExpertActing:
    """Acting policy that applies the expert label (pure expert rollout)."""

    def reset(self) -> None:
        pass

    def act(self, window: np.ndarray, state: BatteryState, soc_ref: float, expert_current: float) -> float:
        return expert_current


def run_episode(
    spec: EpisodeSpec,
    acting,
    labeler: ExpertController,
    n_w: int = DEFAULT_WINDOW,
    obs_noise: NoiseSpec = NoiseSpec(),
    substeps: int = DEFAULT_SUBSTEPS,
) -> tuple[Trajectory, np.ndarray]:
    """Simulate one episode; returns the true trajectory and labeled rows.

    acting must expose reset() and act(window, state, soc_ref,
    expert_current) -> current. The labeler is queried at every step that
    has a full window, including the tail of the rest prefix, and its
    output is both the row label and the expert_current handed to the
    acting policy.
    """
    if spec.rest_steps < n_w:
        raise ValueError(f"rest_steps ({spec.rest_steps}) must be >= n_w ({n_w}) for full windows")
    params = spec.params
    bounds = labeler.cfg.bounds
    total = spec.total_steps
    width = row_width(n_w)
    win_len = N_CHANNELS * (n_w + 1)

    labeler.reset()
    acting.reset()
    rng_obs = np.random.default_rng(spec.seed)

    obs = np.empty((total, N_CHANNELS))
    rows = np.empty((total - n_w, width))
    soc = np.empty(total)
    t_core = np.empty(total)
    t_surf = np.empty(total)
    current = np.empty(total)
    voltage = np.empty(total)
    label = np.full(total, np.nan)

    state = BatteryState(soc=spec.soc0, t_core=spec.t_core0, t_surf=spec.t_surf0)
    r = 0
    for k in range(total):
        ob = observe(state, params, state.last_current, obs_noise, rng_obs)
        obs[k, 0] = ob.voltage
        obs[k, 1] = ob.temp_surf
        obs[k, 2] = ob.current
        lab = math.nan
        if k >= n_w:
            lab = labeler.action(state, spec.soc_ref)
            rows[r, :win_len] = obs[k - n_w : k + 1].ravel()
            rows[r, win_len] = spec.soc_ref
            rows[r, win_len + 1] = lab
            r += 1
        if k < spec.rest_steps:
            cur = 0.0
        else:
            cur = acting.act(obs[k - n_w : k + 1], state, spec.soc_ref, lab)
            cur = min(max(float(cur), bounds.i_min), bounds.i_max)
        soc[k] = state.soc
        t_core[k] = state.t_core
        t_surf[k] = state.t_surf
        current[k] = cur
        voltage[k] = terminal_voltage(state, params, cur)
        label[k] = lab
        state = step(state, params, cur, spec.ts, substeps)

    branch_log = getattr(acting, "branch_log", None)
    traj = Trajectory(
        spec=spec,
        soc=soc,
        t_core=t_core,
        t_surf=t_surf,
        current=current,
        voltage=voltage,
        label=label,
        final_state=state,
        acting_expert_branch=np.asarray(branch_log, dtype=bool) if branch_log is not None else None,
    )
    return traj, rows


@dataclass
class Dataset:
    """Row matrix plus provenance blocks (iteration, policy tag, row span)."""

    rows: np.ndarray
    n_w: int = DEFAULT_WINDOW
    provenance: list = field(default_factory=list)

    def __post_init__(self):
        self.rows = np.ascontiguousarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2 or self.rows.shape[1] != row_width(self.n_w):
            raise ValueError(
                f"rows must be (n, {row_width(self.n_w)}) for n_w={self.n_w}, got {self.rows.shape}"
            )

    def __len__(self) -> int:
        return self.rows.shape[0]

    @property
    def windows(self) -> np.ndarray:
        """(n, n_w+1, 3) view of the measurement windows."""
        n = len(self)
        return self.rows[:, : N_CHANNELS * (self.n_w + 1)].reshape(n, self.n_w + 1, N_CHANNELS)

    @property
    def soc_refs(self) -> np.ndarray:
        return self.rows[:, -2]

    @property
    def labels(self) -> np.ndarray:
        return self.rows[:, -1]

    def row_iterations(self) -> np.ndarray:
        """Source iteration of every row, expanded from provenance blocks."""
        out = np.full(len(self), -1, dtype=np.int64)
        for block in self.provenance:
            out[block["start"] : block["stop"]] = block["iteration"]
        return out

    @classmethod
    def from_rows(cls, rows: np.ndarray, n_w: int, iteration: int, policy: str, episodes: list[int]):
        block = {
            "iteration": int(iteration),
            "policy": policy,
            "episodes": [int(e) for e in episodes],
            "start": 0,
            "stop": int(rows.shape[0]),
        }
        return cls(rows=rows, n_w=n_w, provenance=[block])

    def save(self, prefix: str | Path) -> None:
        prefix = Path(prefix)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        prefix.with_suffix(".bin").write_bytes(self.rows.astype("<f8").tobytes())
        meta = {
            "format_version": DATASET_FORMAT_VERSION,
            "n_w": self.n_w,
            "n_rows": len(self),
            "row_width": row_width(self.n_w),
            "provenance": self.provenance,
        }
        prefix.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2))

    @classmethod
    def load(cls, prefix: str | Path) -> "Dataset":
        prefix = Path(prefix)
        meta = json.loads(prefix.with_suffix(".meta.json").read_text())
        if meta.get("format_version") != DATASET_FORMAT_VERSION:
            raise ValueError(f"unsupported dataset format version {meta.get('format_version')}")
        raw = np.frombuffer(prefix.with_suffix(".bin").read_bytes(), dtype="<f8")
        rows = raw.reshape(meta["n_rows"], meta["row_width"]).astype(np.float64)
        return cls(rows=rows, n_w=meta["n_w"], provenance=meta["provenance"])

    def to_csv(self, path: str | Path) -> None:
        names = []
        for k in range(self.n_w + 1):
            names += [f"v_{k}", f"t_{k}", f"i_{k}"]
        names += ["soc_ref", "label"]
        header = ",".join(names)
        np.savetxt(path, self.rows, delimiter=",", header=header, comments="")


def aggregate(d_prev: Dataset, d_new: Dataset) -> Dataset:
    """Append-only union: |result| = |d_prev| + |d_new|; provenance preserved."""
    if d_prev.n_w != d_new.n_w:
        raise ValueError(f"window size mismatch: {d_prev.n_w} vs {d_new.n_w}")
    rows = np.vstack([d_prev.rows, d_new.rows]) if len(d_new) else d_prev.rows.copy()
    offset = len(d_prev)
    prov = [dict(b) for b in d_prev.provenance]
    for b in d_new.provenance:
        nb = dict(b)
        nb["start"] += offset
        nb["stop"] += offset
        prov.append(nb)
    return Dataset(rows=rows, n_w=d_prev.n_w, provenance=prov)


def _make_acting(acting_spec):
    kind = acting_spec[0]
    if kind == "expert":
        return ExpertActing()
    if kind == "policy":
        from .policy import PolicyActing

        return PolicyActing(acting_spec[1])
    if kind == "mixed":
        from .dagger import MixedActing

        _, beta, model, seed = acting_spec
        return MixedActing(beta=beta, model=model, rng=np.random.default_rng((seed, 1)))
    raise ValueError(f"unknown acting spec {acting_spec!r}")


def _episode_worker(args):
    spec, acting_spec, expert_cfg, n_w, obs_noise = args
    labeler = ExpertController(spec.params, expert_cfg)
    acting = _make_acting(acting_spec)
    return run_episode(spec, acting, labeler, n_w=n_w, obs_noise=obs_noise)


def generate_episodes(
    n_episodes: int,
    master_seed: int,
    expert_cfg: ExpertConfig,
    acting: str | tuple = "expert",
    base_params: BatteryParams | None = None,
    model=None,
    beta: float = 1.0,
    n_w: int = DEFAULT_WINDOW,
    obs_noise: NoiseSpec = NoiseSpec(),
    n_steps: int = 200,
    rest_steps: int = 30,
    ts: float = 10.0,
    episode_index_offset: int = 0,
    iteration: int = 0,
    policy_tag: str | None = None,
    jobs: int = 1,
) -> tuple[Dataset, list[Trajectory]]:
    """Generate randomized episodes and collect their labeled rows.

    Episode seeds derive as master_seed XOR global episode index, so the
    result is independent of execution order and of jobs. acting selects
    the rollout policy: "expert", "policy" (requires model) or "mixed"
    (requires model and beta).
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    tasks = []
    episode_ids = []
    for i in range(n_episodes):
        idx = episode_index_offset + i
        seed = master_seed ^ idx
        spec = sample_episode_spec(seed, base_params=base_params, n_steps=n_steps, rest_steps=rest_steps, ts=ts)
        if acting == "expert":
            acting_spec = ("expert",)
        elif acting == "policy":
            acting_spec = ("policy", model)
        elif acting == "mixed":
            acting_spec = ("mixed", beta, model, seed)
        else:
            raise ValueError(f"unknown acting mode {acting!r}")
        tasks.append((spec, acting_spec, expert_cfg, n_w, obs_noise))
        episode_ids.append(idx)

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_episode_worker, tasks))
    else:
        results = [_episode_worker(t) for t in tasks]

    trajectories = [tr for tr, _ in results]
    rows = np.vstack([r for _, r in results])
    tag = policy_tag if policy_tag is not None else (acting if isinstance(acting, str) else "custom")
    ds = Dataset.from_rows(rows, n_w=n_w, iteration=iteration, policy=tag, episodes=episode_ids)
    return ds, trajectories
