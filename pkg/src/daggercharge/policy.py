"""Measurement-only charging policy: preprocessing + recurrent network.

The model consumes a window of (V, T_s, I) triples plus the charge
reference, standardizes per channel with statistics fitted on its first
training set, and outputs a current bounded to the actuation box by the
tanh head. Training is minibatch Adam on mean squared error in amperes,
with fresh Gaussian noise added to the voltage/temperature features at
every presentation. Checkpoints are versioned npz archives carrying the
architecture, parameters, statistics and noise spec.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .battery import BatteryState, NoiseSpec
from .dataset import Dataset, N_CHANNELS
from .nn import Adam, Network, gradient_check

CHECKPOINT_FORMAT_VERSION = 1

STD_FLOOR = 1e-8  # degenerate features keep a positive standard deviation

TRAIN_NOISE = NoiseSpec(sigma_v=0.020, sigma_t=1.0, sigma_i=0.0)


class TrainingError(RuntimeError):
    """Training produced a non-finite loss."""


class CheckpointError(ValueError):
    """Checkpoint file malformed or incompatible with the expected model."""


@dataclass(frozen=True)
class Architecture:
    n_w: int = 20
    recurrent_sizes: tuple[int, ...] = (128, 64, 32, 16)
    dense_sizes: tuple[int, ...] = (100, 100, 50, 10)
    i_min: float = -10.0
    i_max: float = 10.0

    def __post_init__(self):
        if self.n_w < 0 or not self.recurrent_sizes or not self.dense_sizes:
            raise ValueError("invalid architecture")
        if self.i_min >= self.i_max:
            raise ValueError("i_min must be < i_max")

    def scaled(self, factor: float) -> "Architecture":
        """Shrink hidden sizes by a multiplier (rounded up, at least 1 unit)."""
        rs = tuple(max(1, int(np.ceil(s * factor))) for s in self.recurrent_sizes)
        ds = tuple(max(1, int(np.ceil(s * factor))) for s in self.dense_sizes)
        return Architecture(self.n_w, rs, ds, self.i_min, self.i_max)


@dataclass
class FeatureStats:
    """Per-channel standardization statistics for windows and reference."""

    mean: np.ndarray = field(default_factory=lambda: np.zeros(N_CHANNELS))
    std: np.ndarray = field(default_factory=lambda: np.ones(N_CHANNELS))
    ref_mean: float = 0.0
    ref_std: float = 1.0
    fitted: bool = False

    @classmethod
    def fit(cls, windows: np.ndarray, refs: np.ndarray) -> "FeatureStats":
        mean = windows.reshape(-1, N_CHANNELS).mean(axis=0)
        std = np.maximum(windows.reshape(-1, N_CHANNELS).std(axis=0), STD_FLOOR)
        ref_std = max(float(refs.std()), STD_FLOOR)
        return cls(mean=mean, std=std, ref_mean=float(refs.mean()), ref_std=ref_std, fitted=True)

    def standardize_windows(self, windows: np.ndarray) -> np.ndarray:
        return (windows - self.mean) / self.std

    def destandardize_windows(self, z: np.ndarray) -> np.ndarray:
        return z * self.std + self.mean

    def standardize_refs(self, refs: np.ndarray) -> np.ndarray:
        return (refs - self.ref_mean) / self.ref_std


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 256
    epochs: int = 100
    seed: int = 0
    val_fraction: float = 0.05
    plateau_epochs: int = 10  # stop after this many epochs without validation improvement
    noise: NoiseSpec = TRAIN_NOISE
    dtype: str = "float32"  # parameter dtype for pipeline-built models

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")


class PolicyModel:
    """Recurrent policy with its preprocessing statistics and output bounds."""

    def __init__(self, arch: Architecture, net: Network, stats: FeatureStats,
                 noise_spec: NoiseSpec = TRAIN_NOISE):
        self.arch = arch
        self.net = net
        self.stats = stats
        self.noise_spec = noise_spec

    @classmethod
    def build(cls, arch: Architecture = Architecture(), seed: int = 0,
              noise_spec: NoiseSpec = TRAIN_NOISE, dtype=np.float64) -> "PolicyModel":
        rng = np.random.default_rng(seed)
        net = Network(N_CHANNELS, arch.recurrent_sizes, arch.dense_sizes,
                      arch.i_min, arch.i_max, rng, dtype=dtype)
        return cls(arch, net, FeatureStats(), noise_spec)

    def forward(self, window: np.ndarray, soc_ref: float) -> float:
        """One window (n_w+1, 3) in physical units -> current [A]."""
        window = np.asarray(window, dtype=np.float64)
        expected = (self.arch.n_w + 1, N_CHANNELS)
        if window.shape != expected:
            raise ValueError(f"window shape {window.shape} != {expected}")
        return float(self.forward_batch(window[None], np.array([soc_ref]))[0])

    def forward_batch(self, windows: np.ndarray, refs: np.ndarray) -> np.ndarray:
        if not self.stats.fitted:
            raise RuntimeError("preprocessing statistics not fitted; train first")
        x = self.stats.standardize_windows(windows)
        r = self.stats.standardize_refs(np.asarray(refs, dtype=np.float64))
        return self.net.forward(x, r)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "format_version": np.array(CHECKPOINT_FORMAT_VERSION),
            "n_w": np.array(self.arch.n_w),
            "recurrent_sizes": np.array(self.arch.recurrent_sizes),
            "dense_sizes": np.array(self.arch.dense_sizes),
            "i_bounds": np.array([self.arch.i_min, self.arch.i_max]),
            "stats_mean": self.stats.mean,
            "stats_std": self.stats.std,
            "stats_ref": np.array([self.stats.ref_mean, self.stats.ref_std]),
            "stats_fitted": np.array(int(self.stats.fitted)),
            "noise": np.array([self.noise_spec.sigma_v, self.noise_spec.sigma_t,
                               self.noise_spec.sigma_i]),
            "dtype": np.array(str(self.net.dtype)),
        }
        for name, arr in zip(self.net.parameter_names(), self.net.parameters()):
            payload[f"param::{name}"] = arr
        with open(path, "wb") as fh:
            np.savez(fh, **payload)

    @classmethod
    def load(cls, path: str | Path, expect_arch: Architecture | None = None) -> "PolicyModel":
        path = Path(path)
        if not path.is_file():
            raise CheckpointError(f"checkpoint not found: {path}")
        with np.load(path) as data:
            if "format_version" not in data or int(data["format_version"]) != CHECKPOINT_FORMAT_VERSION:
                raise CheckpointError(f"unsupported checkpoint format in {path}")
            arch = Architecture(
                n_w=int(data["n_w"]),
                recurrent_sizes=tuple(int(s) for s in data["recurrent_sizes"]),
                dense_sizes=tuple(int(s) for s in data["dense_sizes"]),
                i_min=float(data["i_bounds"][0]),
                i_max=float(data["i_bounds"][1]),
            )
            if expect_arch is not None and arch != expect_arch:
                raise CheckpointError(f"architecture mismatch: checkpoint {arch}, expected {expect_arch}")
            stats = FeatureStats(
                mean=data["stats_mean"].copy(),
                std=data["stats_std"].copy(),
                ref_mean=float(data["stats_ref"][0]),
                ref_std=float(data["stats_ref"][1]),
                fitted=bool(int(data["stats_fitted"])),
            )
            noise = NoiseSpec(*(float(v) for v in data["noise"]))
            dtype = np.dtype(str(data["dtype"])) if "dtype" in data else np.float64
            model = cls.build(arch, seed=0, noise_spec=noise, dtype=dtype)
            model.stats = stats
            try:
                model.net.load_parameters([data[f"param::{n}"] for n in model.net.parameter_names()])
            except KeyError as exc:
                raise CheckpointError(f"checkpoint {path} missing parameter {exc}") from exc
            except ValueError as exc:
                raise CheckpointError(f"checkpoint {path} incompatible: {exc}") from exc
        return model


class PolicyActing:
    """Acting-policy adapter for run_episode; ignores the true state."""

    def __init__(self, model: PolicyModel):
        self.model = model

    def reset(self) -> None:
        pass

    def act(self, window: np.ndarray, state: BatteryState, soc_ref: float,
            expert_current: float) -> float:
        return self.model.forward(window, soc_ref)


def train(model: PolicyModel, dataset: Dataset, cfg: TrainConfig) -> tuple[PolicyModel, dict]:
    """Minibatch Adam on MSE; returns the model and its loss history.

    Feature noise (voltage and temperature channels only, physical units)
    is redrawn at every presentation; labels are never touched. The
    validation split drives a plateau early stop; the best-validation
    parameters are restored at the end.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    if dataset.n_w != model.arch.n_w:
        raise ValueError(f"dataset n_w={dataset.n_w} != model n_w={model.arch.n_w}")

    windows = dataset.windows
    refs = dataset.soc_refs.copy()
    labels = dataset.labels.copy()
    if not model.stats.fitted:
        model.stats = FeatureStats.fit(windows, refs)

    rng = np.random.default_rng(cfg.seed)
    n = len(dataset)
    perm = rng.permutation(n)
    n_val = int(round(n * cfg.val_fraction)) if n >= 20 else 0
    val_idx = perm[:n_val]
    train_idx = perm[n_val:]

    x_val = model.stats.standardize_windows(windows[val_idx]) if n_val else None
    r_val = model.stats.standardize_refs(refs[val_idx]) if n_val else None
    y_val = labels[val_idx] if n_val else None

    noise = cfg.noise
    sig = np.array([noise.sigma_v, noise.sigma_t, noise.sigma_i])
    noisy_channels = np.nonzero(sig > 0)[0]

    opt = Adam(model.net.parameters(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    history = {"train_loss": [], "val_loss": []}
    best_val = np.inf
    best_params = None
    stale = 0

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(train_idx))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            idx = train_idx[order[start : start + cfg.batch_size]]
            xb = windows[idx].copy()
            for ch in noisy_channels:
                xb[:, :, ch] += sig[ch] * rng.standard_normal(xb.shape[:2])
            xb = model.stats.standardize_windows(xb)
            rb = model.stats.standardize_refs(refs[idx])
            loss = model.net.loss_and_grads(xb, rb, labels[idx])
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch offset {start}; "
                    f"check learning rate ({cfg.learning_rate}) and initialization"
                )
            opt.step(model.net.gradients())
            total += loss * len(idx)
        train_loss = total / len(train_idx)
        history["train_loss"].append(train_loss)

        if n_val:
            out = model.net.forward(x_val, r_val)
            val_loss = float(np.mean((out - y_val) ** 2))
        else:
            val_loss = train_loss
        history["val_loss"].append(val_loss)

        if val_loss < best_val:
            best_val = val_loss
            best_params = model.net.copy_parameters()
            stale = 0
        else:
            stale += 1
            if stale >= cfg.plateau_epochs:
                break

    if best_params is not None:
        model.net.load_parameters(best_params)
    history["stopped_epoch"] = len(history["train_loss"])
    return model, history


def gradient_check_policy(seed: int = 0, n_samples: int = 4, n_w: int = 3,
                          fd_step: float = 1e-5) -> float:
    """Finite-difference check on a small randomly initialized instance."""
    arch = Architecture(n_w=n_w, recurrent_sizes=(5, 4), dense_sizes=(6, 3))
    model = PolicyModel.build(arch, seed=seed)
    rng = np.random.default_rng(seed + 1)
    x = rng.standard_normal((n_samples, n_w + 1, N_CHANNELS))
    refs = rng.standard_normal(n_samples)
    y = rng.uniform(arch.i_min, arch.i_max, n_samples)
    return gradient_check(model.net, x, refs, y, fd_step=fd_step)
