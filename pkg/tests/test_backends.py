"""Compiled and pure-Python kernels must agree to machine precision."""

import numpy as np
import pytest

from daggercharge import _core_py as kpy
from daggercharge import core
from daggercharge.battery import BatteryParams

try:
    from daggercharge import _core_cy as kcy
except ImportError:
    kcy = None

needs_compiled = pytest.mark.skipif(kcy is None, reason="compiled kernel not built")


def random_packed(rng):
    return BatteryParams(
        capacity_ah=rng.uniform(5.5, 8.0),
        r_sei_ohm=rng.uniform(0.014, 0.019),
        c_core=rng.uniform(40.0, 80.0),
        c_surf=rng.uniform(3.0, 8.0),
        r_core_surf=rng.uniform(1.0, 3.0),
        r_surf_env=rng.uniform(2.0, 6.0),
        t_env=rng.uniform(290.0, 305.0),
    ).packed


@needs_compiled
def test_voltage_and_heat_match():
    rng = np.random.default_rng(0)
    for _ in range(300):
        p = random_packed(rng)
        soc = rng.uniform(0, 1)
        cur = rng.uniform(-12, 12)
        assert kcy.terminal_voltage(p, soc, cur) == pytest.approx(
            kpy.terminal_voltage(p, soc, cur), rel=1e-14, abs=1e-14
        )
        assert kcy.heat_rate(p, soc, cur) == pytest.approx(
            kpy.heat_rate(p, soc, cur), rel=1e-14, abs=1e-14
        )


@needs_compiled
def test_step_matches():
    rng = np.random.default_rng(1)
    for _ in range(200):
        p = random_packed(rng)
        args = (rng.uniform(0, 1), rng.uniform(295, 315), rng.uniform(295, 315),
                rng.uniform(-10, 10), 10.0, 10)
        a = kcy.step_state(p, *args)
        b = kpy.step_state(p, *args)
        assert a[3] == b[3]
        for x, y in zip(a[:3], b[:3]):
            assert x == pytest.approx(y, rel=1e-13, abs=1e-13)


@needs_compiled
def test_horizon_cost_matches():
    rng = np.random.default_rng(2)
    for _ in range(100):
        p = random_packed(rng)
        h = int(rng.integers(1, 9))
        seq = rng.uniform(-10, 10, h)
        args = (rng.uniform(0, 1), rng.uniform(295, 315), rng.uniform(295, 315),
                seq, h, 10.0, 10, rng.uniform(0.7, 1.0), 1.0, 1e-6, 1e4,
                0.0, 1.0, 313.15, 4.2)
        assert kcy.horizon_cost(p, *args) == pytest.approx(
            kpy.horizon_cost(p, *args), rel=1e-12, abs=1e-12
        )


def test_backend_is_reported():
    assert core.BACKEND in ("compiled", "python")


def test_layout_constants_match():
    assert kpy.N_PACKED == core.N_PACKED
    if kcy is not None:
        assert kcy.N_PACKED == kpy.N_PACKED
        assert kcy.OCV_P == kpy.OCV_P
        assert kcy.OCV_N == kpy.OCV_N


def test_forced_python_backend(monkeypatch):
    import importlib
    import os
    import subprocess
    import sys

    env = dict(os.environ, DAGGERCHARGE_BACKEND="python")
    out = subprocess.run(
        [sys.executable, "-c", "from daggercharge import core; print(core.BACKEND)"],
        env=env, capture_output=True, text=True,
    )
    assert out.stdout.strip() == "python"
