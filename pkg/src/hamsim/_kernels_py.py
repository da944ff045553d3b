"""Numpy fallback with the same signatures as the compiled kernels."""
from __future__ import annotations

import numpy as np


def _advance(cls, lvl, sign, levels):
    if sign == 1:
        return cls, lvl, -1
    lvl += 1
    if lvl > levels[cls]:
        return (cls + 1) % len(levels), 1, 1
    return cls, lvl, 1


def _term_rows(cls, lvl, sign, perm, level, phase, fill):
    keep = level[cls] >= lvl
    src = np.where(keep, perm[cls], np.arange(perm.shape[1]))
    ph = np.where(keep, phase[cls], sign * fill[cls])
    return src, ph


def chain_accumulate(M, perm, level, phase, fill, levels, cls, lvl, sign, nsteps,
                     w0, w1, qscale, filled):
    kmax = M.shape[0] - 1
    for _ in range(nsteps):
        top = min(filled + 1, kmax)
        src, ph = _term_rows(cls, lvl, sign, perm, level, phase, fill)
        coef = (w1 * qscale * ph)[None, :, None]
        if top >= 1:
            M[1:top + 1] = w0 * M[1:top + 1] + coef * M[0:top][:, src, :]
        M[0] *= w0
        filled = top
        cls, lvl, sign = _advance(cls, lvl, sign, levels)
    return cls, lvl, sign, filled


def rotation_chain(M, perm, level, phase, fill, levels, cls, lvl, sign, nsteps, cos_t, sin_t):
    for _ in range(nsteps):
        src, ph = _term_rows(cls, lvl, sign, perm, level, phase, fill)
        M[:] = cos_t * M - 1j * sin_t * ph[:, None] * M[src]
        cls, lvl, sign = _advance(cls, lvl, sign, levels)
    return cls, lvl, sign
