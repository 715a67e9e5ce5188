"""Kernel backend selection.

The compiled extension ``dpovqe._kernels`` is used when it imports; otherwise
the numpy fallback in :mod:`dpovqe._pykernels` takes over. Setting
``DPOVQE_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels

if os.environ.get("DPOVQE_PURE_PYTHON", "").strip() not in ("", "0"):
    _backend = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as _backend

        BACKEND = "compiled"
    except ImportError:
        _backend = _pykernels
        BACKEND = "python"

COMPILED_AVAILABLE = BACKEND == "compiled"

apply_ry = _backend.apply_ry
apply_rx = _backend.apply_rx
apply_rz = _backend.apply_rz
apply_rzz = _backend.apply_rzz
apply_cnot = _backend.apply_cnot
apply_swap = _backend.apply_swap
ising_costs = _backend.ising_costs
diag_expectation = _backend.diag_expectation
gray_code_minimum = _backend.gray_code_minimum
metropolis_anneal = _backend.metropolis_anneal


def get_backend(name=None):
    """Return the kernel module for ``name`` ("compiled" / "python"), or the active one."""
    if name is None:
        return _backend
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")
