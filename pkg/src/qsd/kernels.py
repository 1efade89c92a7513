"""Backend selection for the circuit-program interpreter.

The compiled extension is used when it imports; set ``QSD_PURE_PYTHON=1`` to
force the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
run_program = _kernels_py.run_program

if os.environ.get("QSD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels

        run_program = _kernels.run_program
        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

OP_RX = _kernels_py.OP_RX
OP_RY = _kernels_py.OP_RY
OP_RZ = _kernels_py.OP_RZ
OP_CNOT = _kernels_py.OP_CNOT
OP_DEP1 = _kernels_py.OP_DEP1
OP_DEP2 = _kernels_py.OP_DEP2

__all__ = ["BACKEND", "run_program", "OP_RX", "OP_RY", "OP_RZ", "OP_CNOT", "OP_DEP1", "OP_DEP2"]
