"""Kernel backend selection.

The compiled extension is used when it imports; setting the environment
variable ``HAMSIM_PURE_PYTHON=1`` forces the numpy fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
chain_accumulate = _kernels_py.chain_accumulate
rotation_chain = _kernels_py.rotation_chain

if os.environ.get("HAMSIM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        BACKEND = "compiled"
        chain_accumulate = _compiled.chain_accumulate
        rotation_chain = _compiled.rotation_chain


def backend(name: str):
    """Return the (chain_accumulate, rotation_chain) pair of a named backend."""
    if name == "python":
        return _kernels_py.chain_accumulate, _kernels_py.rotation_chain
    if name == "compiled":
        from . import _kernels as mod
        return mod.chain_accumulate, mod.rotation_chain
    raise ValueError(f"unknown kernel backend {name!r}")
