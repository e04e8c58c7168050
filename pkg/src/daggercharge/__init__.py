"""Constrained lithium-ion battery charging toolkit.

Electro-thermal cell simulator, receding-horizon charging expert,
dataset-aggregation imitation learning with a behavioral-cloning
baseline, and the statistical machinery to compare them. The simulation
hot loops run on a compiled kernel when the extension is available
(``daggercharge.core.BACKEND`` says which one is active).
"""

from .battery import (
    BatteryParams,
    BatteryState,
    ModelEvaluationError,
    NoiseSpec,
    Observation,
    heat_generation,
    observe,
    step,
    terminal_voltage,
)
from .core import BACKEND
from .dagger import DaggerConfig, mixed_policy_action, run_behavioral_cloning, run_dagger
from .dataset import Dataset, EpisodeSpec, aggregate, run_episode, sample_episode_spec
from .evaluation import EvalReport, bench_timing, evaluate_policies, single_scenario_trace
from .expert import Bounds, ExpertConfig, ExpertController, expert_action, grid_oracle, solve_horizon
from .policy import Architecture, PolicyModel, TrainConfig, train

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Architecture",
    "BatteryParams",
    "BatteryState",
    "Bounds",
    "Dataset",
    "DaggerConfig",
    "EpisodeSpec",
    "EvalReport",
    "ExpertConfig",
    "ExpertController",
    "ModelEvaluationError",
    "NoiseSpec",
    "Observation",
    "PolicyModel",
    "TrainConfig",
    "aggregate",
    "bench_timing",
    "evaluate_policies",
    "expert_action",
    "grid_oracle",
    "heat_generation",
    "mixed_policy_action",
    "observe",
    "run_behavioral_cloning",
    "run_dagger",
    "run_episode",
    "sample_episode_spec",
    "single_scenario_trace",
    "solve_horizon",
    "step",
    "terminal_voltage",
    "train",
]
