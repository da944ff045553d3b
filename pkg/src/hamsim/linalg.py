"""Dense complex linear algebra and exact reference oracles.

Everything else in the package is checked against the functions here, so
they favour exactness over speed: the matrix exponential goes through a
Hermitian eigendecomposition and every tolerance lives in one place.
"""
from __future__ import annotations

import os

import numpy as np

# Structural checks (unitarity, Hermiticity, involutions).
TOL_STRUCT = 1e-12
# Checks on composed objects (products of many factors, group laws).
TOL_COMPOSE = 1e-10

# Largest dimension materialised densely; HAMSIM_DENSE_LIMIT overrides it at import.
DENSE_LIMIT = int(os.environ.get("HAMSIM_DENSE_LIMIT", 1 << 13))


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


def as_operator(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("operator has non-finite entries")
    return m


def is_hermitian(h: np.ndarray, tol: float = TOL_STRUCT) -> bool:
    return bool(np.max(np.abs(h - h.conj().T), initial=0.0) <= tol)


def is_unitary(u: np.ndarray, tol: float = TOL_STRUCT) -> bool:
    eye = np.eye(u.shape[0])
    return bool(np.max(np.abs(u.conj().T @ u - eye), initial=0.0) <= tol)


def is_involution(q: np.ndarray, tol: float = TOL_STRUCT) -> bool:
    eye = np.eye(q.shape[0])
    return bool(np.max(np.abs(q @ q - eye), initial=0.0) <= tol)


def exact_expm(h, t: float) -> np.ndarray:
    """Return exp(-i h t) for Hermitian ``h`` through its eigendecomposition."""
    h = as_operator(h)
    if not is_hermitian(h):
        raise ValidationError("exact_expm requires a Hermitian generator")
    # symmetrise so eigh sees exactly Hermitian data
    h = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def spectral_norm(a) -> float:
    a = np.asarray(a, dtype=complex)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def spectral_distance(u, v) -> float:
    """Largest singular value of ``u - v``."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape:
        raise ValidationError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return spectral_norm(u - v)


def max_norm(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a), initial=0.0))


def isometry_distance(block, target) -> float:
    """Distance between the isometry whose post-selected block is ``block`` and ``target``.

    For a circuit whose projection onto the success sector is ``block`` (the
    rest of the output leaking into orthogonal sectors), the worst-case
    output error against the unitary ``target`` is
    sqrt(lmax((A - V)^dag (A - V) + I - A^dag A)).  This also counts the leaked
    weight, which a plain ``||A - V||`` misses.
    """
    a = np.asarray(block, dtype=complex)
    v = np.asarray(target, dtype=complex)
    if a.shape != v.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {v.shape}")
    diff = a - v
    gram = diff.conj().T @ diff + np.eye(a.shape[1]) - a.conj().T @ a
    gram = 0.5 * (gram + gram.conj().T)
    top = float(np.linalg.eigvalsh(gram)[-1])
    return float(np.sqrt(max(top, 0.0)))


def fractional_power(q, alpha: float) -> np.ndarray:
    """Fractional power of an involution: ((I + Q) + e^{-i pi alpha}(I - Q)) / 2."""
    q = as_operator(q)
    if not is_involution(q):
        raise ValidationError("fractional_power requires Q @ Q = I")
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha must lie in [0, 1], got {alpha}")
    eye = np.eye(q.shape[0])
    return 0.5 * ((eye + q) + np.exp(-1j * np.pi * alpha) * (eye - q))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary (QR of a complex Gaussian with phase fix)."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_involution(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random unitary with Q @ Q = I: a rotated diagonal of random signs."""
    u = random_unitary(dim, rng)
    signs = rng.choice([-1.0, 1.0], size=dim)
    q = (u * signs) @ u.conj().T
    return 0.5 * (q + q.conj().T)


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def make_rng(seed: int | None) -> np.random.Generator:
    """Counter-based generator used for every random draw in the package."""
    return np.random.Generator(np.random.Philox(seed))
