"""Oblivious amplitude amplification on label-first operators.

Operators here act on label (x) system with the label register first, so
the zero-label subspace is the first ``system_dim`` coordinates.  A unitary
satisfies the promise when its zero-label block A has A^dag A = p I; then
S = -U R U^dag R rotates inside a two-dimensional subspace for every input
state, and S^l U has zero-label block sin((2l + 1) theta) / sin(theta) * A.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import TOL_COMPOSE, ValidationError, is_unitary

PROMISE_TOL = 1e-10
ANGLE_TOL = 1e-8


@dataclass(frozen=True)
class OAAConfig:
    label_dim: int
    theta: float
    ell: int

    def __post_init__(self):
        if not 0.0 < self.theta < math.pi / 2:
            raise ValidationError("theta must lie in (0, pi/2)")
        if self.ell < 0:
            raise ValidationError("iteration count must be nonnegative")

    @property
    def predicted_amplitude(self) -> float:
        return math.sin((2 * self.ell + 1) * self.theta)


def _label_dim(mbar: int | None, label_dim: int | None) -> int:
    if label_dim is not None:
        return int(label_dim)
    if mbar is None:
        raise ValidationError("give either mbar or label_dim")
    return 1 << int(mbar)


def reflect_zero(mbar: int | None, total_dim: int, label_dim: int | None = None) -> np.ndarray:
    """R = 2 Pi - I with Pi the projector onto label 0."""
    ld = _label_dim(mbar, label_dim)
    if total_dim % ld:
        raise ValidationError(f"label dimension {ld} does not divide {total_dim}")
    diag = -np.ones(total_dim)
    diag[: total_dim // ld] = 1.0
    return np.diag(diag).astype(complex)


def zero_block(u: np.ndarray, mbar: int | None = None, label_dim: int | None = None) -> np.ndarray:
    ld = _label_dim(mbar, label_dim)
    sd = u.shape[0] // ld
    return u[:sd, :sd]


def oaa_step(u: np.ndarray, mbar: int | None = None, label_dim: int | None = None) -> np.ndarray:
    """S = -U R U^dag R."""
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u, TOL_COMPOSE):
        raise ValidationError("oaa_step requires a unitary")
    r = reflect_zero(mbar, u.shape[0], label_dim)
    return -u @ r @ u.conj().T @ r


def verify_subspace(u: np.ndarray, mbar: int | None = None,
                    label_dim: int | None = None) -> tuple[float, float]:
    """Return (p, ||A^dag A - p I||) for the zero-label block A of U."""
    a = zero_block(np.asarray(u, dtype=complex), mbar, label_dim)
    q = a.conj().T @ a
    p = float(np.real(np.trace(q))) / q.shape[0]
    return p, float(np.linalg.norm(q - p * np.eye(q.shape[0]), 2))


def amplify(u: np.ndarray, ell: int, mbar: int | None = None, label_dim: int | None = None,
            theta: float | None = None, check: bool = True) -> np.ndarray:
    """S^ell U, after checking the two-dimensional-subspace promise.

    theta is inferred from the measured success probability; if a value is
    supplied, disagreement beyond 1e-8 is an error.
    """
    u = np.asarray(u, dtype=complex)
    if check:
        p, dev = verify_subspace(u, mbar, label_dim)
        if dev > PROMISE_TOL:
            raise ValidationError(f"promise violated: ||A^dag A - pI|| = {dev:.3e}")
        if theta is not None and abs(math.asin(math.sqrt(min(max(p, 0.0), 1.0))) - theta) > ANGLE_TOL:
            raise ValidationError("measured angle disagrees with the supplied theta")
    s = oaa_step(u, mbar, label_dim)
    out = u
    for _ in range(ell):
        out = s @ out
    return out


def measured_angle(u: np.ndarray, mbar: int | None = None, label_dim: int | None = None) -> float:
    p, _ = verify_subspace(u, mbar, label_dim)
    return math.asin(math.sqrt(min(max(p, 0.0), 1.0)))


def promise_unitary(v: np.ndarray, theta: float, label_dim: int, rng: np.random.Generator) -> np.ndarray:
    """A unitary with zero-label block sin(theta) V, completed at random.

    Useful for testing amplification laws at arbitrary angles.
    """
    sd = v.shape[0]
    total = label_dim * sd
    first = np.zeros((total, sd), dtype=complex)
    first[:sd] = math.sin(theta) * v
    # push the remaining weight into a random orthonormal frame of the non-zero labels
    z = rng.standard_normal((total - sd, sd)) + 1j * rng.standard_normal((total - sd, sd))
    frame, _ = np.linalg.qr(z)
    first[sd:] = math.cos(theta) * frame
    # complete the isometry to a unitary
    rest = rng.standard_normal((total, total - sd)) + 1j * rng.standard_normal((total, total - sd))
    rest -= first @ (first.conj().T @ rest)
    q, _ = np.linalg.qr(rest)
    return np.hstack([first, q])
