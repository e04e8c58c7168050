"""Kernel backend selection.

Imports the compiled extension when available, otherwise the pure-Python
twin. Override with DAGGERCHARGE_BACKEND=python|compiled (compiled raises
if the extension is missing). The active backend name is in BACKEND.
"""

import os

_requested = os.environ.get("DAGGERCHARGE_BACKEND", "auto").lower()

if _requested == "python":
    from . import _core_py as _impl

    BACKEND = "python"
elif _requested == "compiled":
    from . import _core_cy as _impl  # type: ignore[no-redef]

    BACKEND = "compiled"
else:
    try:
        from . import _core_cy as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from . import _core_py as _impl  # type: ignore[no-redef]

        BACKEND = "python"

N_PACKED = _impl.N_PACKED
CAPACITY_AH = _impl.CAPACITY_AH
R_SEI = _impl.R_SEI
C_CORE = _impl.C_CORE
C_SURF = _impl.C_SURF
R_CORE_SURF = _impl.R_CORE_SURF
R_SURF_ENV = _impl.R_SURF_ENV
T_ENV = _impl.T_ENV
ETA_GAIN_P = _impl.ETA_GAIN_P
ETA_GAIN_N = _impl.ETA_GAIN_N
ETA_CURRENT_SCALE = _impl.ETA_CURRENT_SCALE
OCV_P = _impl.OCV_P
OCV_N = _impl.OCV_N

open_circuit_potentials = _impl.open_circuit_potentials
terminal_voltage = _impl.terminal_voltage
heat_rate = _impl.heat_rate
step_state = _impl.step_state
horizon_cost = _impl.horizon_cost
