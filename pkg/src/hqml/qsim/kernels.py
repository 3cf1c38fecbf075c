"""Kernel backend selection.

Prefers the compiled Cython extension and falls back to the NumPy
implementation when the extension is unavailable.  Set
``HQML_SIM_BACKEND=python`` to force the fallback (used by the benchmark
and by tests that exercise both paths).
"""

import os

from . import _gatekernels_py

if os.environ.get("HQML_SIM_BACKEND", "").lower() == "python":
    _impl = _gatekernels_py
    BACKEND = "python"
else:
    try:
        from . import _gatekernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _gatekernels_py
        BACKEND = "python"

apply_gate_inplace = _impl.apply_gate_inplace
expect_z = _impl.expect_z
run_compiled = _impl.run_compiled

# Gate kind codes, shared across backends.
KIND_H = 0
KIND_X = 1
KIND_RX = 2
KIND_RY = 3
KIND_RZ = 4
KIND_CNOT = 5
KIND_CRZ = 6
