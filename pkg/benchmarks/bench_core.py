"""Compare the compiled and pure-Python simulation kernels.

Times the two hot entry points (single control step, horizon cost) on
identical inputs and prints per-call latencies plus the speedup. Run:

    python benchmarks/bench_core.py [--repeats N]
"""

import argparse
import time

import numpy as np

from daggercharge import _core_py
from daggercharge.battery import BatteryParams

try:
    from daggercharge import _core_cy
except ImportError:
    _core_cy = None


def time_call(fn, args, repeats):
    best = float("inf")
    for _ in range(3):  # best-of-3 batches to shake scheduler noise
        t0 = time.perf_counter()
        for _ in range(repeats):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / repeats)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=2000)
    args = parser.parse_args()

    p = BatteryParams().packed
    rng = np.random.default_rng(0)
    seq = rng.uniform(-10, 10, 4)

    cases = [
        ("step_state", "step_state",
         (p, 0.5, 302.5, 300.0, 8.0, 10.0, 10)),
        ("horizon_cost (H=4)", "horizon_cost",
         (p, 0.5, 302.5, 300.0, seq, 4, 10.0, 10, 0.9, 1.0, 1e-6, 1e4, 0.0, 1.0, 313.15, 4.2)),
    ]

    backends = [("python", _core_py)]
    if _core_cy is not None:
        backends.append(("compiled", _core_cy))
    else:
        print("compiled kernel not built; timing the pure-Python backend only\n")

    print(f"{'kernel':<20} " + " ".join(f"{name + ' [us]':>16}" for name, _ in backends)
          + ("  speedup" if len(backends) > 1 else ""))
    for label, fname, call_args in cases:
        times = [time_call(getattr(mod, fname), call_args, args.repeats) for _, mod in backends]
        row = f"{label:<20} " + " ".join(f"{t * 1e6:>16.2f}" for t in times)
        if len(times) > 1:
            row += f"  {times[0] / times[1]:>7.1f}x"
        print(row)

    # agreement spot check
    ref = _core_py.horizon_cost(*cases[1][2])
    if _core_cy is not None:
        got = _core_cy.horizon_cost(*cases[1][2])
        print(f"\nhorizon_cost agreement: |python - compiled| = {abs(ref - got):.3e}")


if __name__ == "__main__":
    main()
