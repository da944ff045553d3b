"""Sparse Hamiltonian simulation through fractional queries.

Modules, bottom up: ``linalg`` (dense reference algebra), ``hamiltonian``
(sparse oracles and query metering), ``decompose`` (signed-permutation
terms), ``fracquery`` (fractional-query programs and gadget segments),
``oaa`` (oblivious amplitude amplification), ``engine`` (register-level
circuit execution), ``pipeline`` (end-to-end planning and measurement),
``demos`` (lower-bound constructions) and ``cli``.
"""
__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402  (compiled or python, chosen at import)
from .linalg import ValidationError  # noqa: E402

__all__ = ["BACKEND", "ValidationError", "__version__"]
