import numpy as np
import pytest

from daggercharge.battery import BatteryParams, BatteryState
from daggercharge.expert import ExpertConfig


@pytest.fixture
def params():
    return BatteryParams()


@pytest.fixture
def mid_state():
    return BatteryState(soc=0.5, t_core=302.5, t_surf=300.0)


@pytest.fixture
def cool_state():
    return BatteryState(soc=0.25, t_core=300.0, t_surf=300.0)


@pytest.fixture
def expert_cfg():
    return ExpertConfig()


def random_states(n, seed=0, soc_range=(0.05, 0.95), temp_range=(298.15, 311.0)):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        out.append(
            BatteryState(
                soc=rng.uniform(*soc_range),
                t_core=rng.uniform(*temp_range),
                t_surf=rng.uniform(*temp_range),
            )
        )
    return out
