# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops over chains of signed-permutation queries.

Both kernels walk the term order (class, level, sign) with a cursor so the
term list is never materialised.  Row ``r`` of the term at ``level`` holds
``phase[c, r]`` at column ``perm[c, r]`` when ``level[c, r] >= level`` and
``sign * fill[c]`` on the diagonal otherwise.
"""
import numpy as np
cimport numpy as cnp

ctypedef double complex cplx


cdef inline void _row(long c, long r, long lvl, long sign,
                      const long long[:, ::1] perm, const long long[:, ::1] level,
                      const cplx[:, ::1] phase, const cplx[::1] fill,
                      long *src, cplx *ph) noexcept nogil:
    if level[c, r] >= lvl:
        src[0] = perm[c, r]
        ph[0] = phase[c, r]
    else:
        src[0] = r
        ph[0] = sign * fill[c]


def chain_accumulate(cplx[:, :, ::1] M, const long long[:, ::1] perm,
                     const long long[:, ::1] level, const cplx[:, ::1] phase,
                     const cplx[::1] fill, const long long[::1] levels,
                     long cls, long lvl, long sign, long nsteps,
                     cplx w0, cplx w1, cplx qscale, long filled):
    """Weight-truncated product of (w0 + w1 z Q_j) over ``nsteps`` terms, in place.

    ``M[h]`` holds the weight-h coefficient.  ``filled`` is the highest weight
    already populated.  Returns the cursor (cls, lvl, sign) and new ``filled``.
    """
    cdef long kmax = M.shape[0] - 1
    cdef long dim = M.shape[1]
    cdef long ncls = perm.shape[0]
    cdef long step, h, r, col, top
    cdef cplx ph
    src_arr = np.empty(dim, dtype=np.int64)
    coef_arr = np.empty(dim, dtype=np.complex128)
    cdef long long[::1] src = src_arr
    cdef cplx[::1] coef = coef_arr
    cdef long s
    cdef cplx c
    cdef cplx *dst
    cdef cplx *prev
    with nogil:
        for step in range(nsteps):
            for r in range(dim):
                _row(cls, r, lvl, sign, perm, level, phase, fill, &s, &ph)
                src[r] = s
                coef[r] = w1 * qscale * ph
            top = filled + 1
            if top > kmax:
                top = kmax
            h = top
            while h >= 1:
                for r in range(dim):
                    dst = &M[h, r, 0]
                    prev = &M[h - 1, src[r], 0]
                    c = coef[r]
                    for col in range(dim):
                        dst[col] = w0 * dst[col] + c * prev[col]
                h -= 1
            for r in range(dim):
                dst = &M[0, r, 0]
                for col in range(dim):
                    dst[col] = w0 * dst[col]
            filled = top
            if sign == 1:
                sign = -1
            else:
                sign = 1
                lvl += 1
                if lvl > levels[cls]:
                    lvl = 1
                    cls += 1
                    if cls == ncls:
                        cls = 0
    return cls, lvl, sign, filled


def rotation_chain(cplx[:, ::1] M, const long long[:, ::1] perm,
                   const long long[:, ::1] level, const cplx[:, ::1] phase,
                   const cplx[::1] fill, const long long[::1] levels,
                   long cls, long lvl, long sign, long nsteps,
                   double cos_t, double sin_t):
    """Apply (cos I - i sin G_j) for ``nsteps`` consecutive terms to M, in place."""
    cdef long dim = M.shape[0]
    cdef long ncls = perm.shape[0]
    cdef long step, r, col, src
    cdef cplx ph
    cdef cplx msin = -1j * sin_t
    tmp_arr = np.empty((dim, dim), dtype=np.complex128)
    cdef cplx[:, ::1] tmp = tmp_arr
    with nogil:
        for step in range(nsteps):
            for r in range(dim):
                _row(cls, r, lvl, sign, perm, level, phase, fill, &src, &ph)
                for col in range(dim):
                    tmp[r, col] = cos_t * M[r, col] + msin * ph * M[src, col]
            for r in range(dim):
                for col in range(dim):
                    M[r, col] = tmp[r, col]
            if sign == 1:
                sign = -1
            else:
                sign = 1
                lvl += 1
                if lvl > levels[cls]:
                    lvl = 1
                    cls += 1
                    if cls == ncls:
                        cls = 0
    return cls, lvl, sign
