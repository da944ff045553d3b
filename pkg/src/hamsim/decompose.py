"""Splitting a sparse Hamiltonian into signed-permutation terms.

The pipeline is: double the Hamiltonian to make its graph bipartite, colour
each edge by the pair of neighbour ranks so every colour class is 1-sparse,
then round each 1-sparse slice to multiples of 2*gamma and peel it into
level sets whose zero columns are completed by +-1 so every term squares to
the identity.
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .hamiltonian import Entry, HamiltonianStats, SparseHamiltonianOracle
from .linalg import TOL_STRUCT, ValidationError


class DoubledOracle(SparseHamiltonianOracle):
    """Oracle for sigma_x (x) H on n + 1 qubits, answered through the base oracle.

    Vertex ``b * 2^n + i`` is row ``i`` of H on side ``b``; left = top bit 0.
    Queries are forwarded (and metered) on the base oracle.
    """

    def __init__(self, base: SparseHamiltonianOracle) -> None:
        self.base = base
        self.n = base.n + 1
        self.d = base.d
        self.dim = 1 << self.n
        self.meter = base.meter

    def side(self, v: int) -> int:
        return v >> self.base.n

    def query(self, i: int, j: int) -> Entry:
        if not 0 <= i < self.dim:
            raise ValidationError(f"row {i} outside [0, {self.dim})")
        half = self.base.dim
        b, row = divmod(i, half)
        e = self.base.query(row, j)
        if e is None:
            return None
        return ((1 - b) * half + e[0], e[1])

    def entries(self):
        half = self.base.dim
        for b in (0, 1):
            for i, c, v in self.base.entries():
                yield b * half + i, (1 - b) * half + c, v

    def occupancy(self, i: int) -> int:
        return self.base.occupancy(i % self.base.dim)


def bipartite_double(h: SparseHamiltonianOracle) -> DoubledOracle:
    return DoubledOracle(h)


def _rank_of(h: SparseHamiltonianOracle, row: int, col: int) -> Optional[int]:
    for j in range(1, h.d + 1):
        e = h.query(row, j)
        if e is not None and e[0] == col:
            return j
    return None


def color_edge(hb: DoubledOracle, u: int, v: int) -> tuple[int, int]:
    """Colour of edge (u, v): (rank of v in u's row, rank of u in v's row)."""
    if hb.side(u) != 0 or hb.side(v) != 1:
        raise ValidationError("color_edge expects u on the left and v on the right")
    a = _rank_of(hb, u, v)
    if a is None:
        raise ValidationError(f"({u}, {v}) is not an edge")
    b = _rank_of(hb, v, u)
    if b is None:
        raise ValidationError(f"({v}, {u}) missing: oracle is not Hermitian")
    return a, b


def slice_query(hb: DoubledOracle, color: tuple[int, int], j: int) -> Entry:
    """Unique nonzero of the colour-(a, b) slice in row j, or None.

    Rank-then-verify: find the rank-a neighbour l of a left vertex j and
    keep it only if j is the rank-b neighbour of l (a and b swap roles on the
    right).  Always charges exactly two slot queries.
    """
    a, b = color
    if not (1 <= a <= hb.d and 1 <= b <= hb.d):
        raise ValidationError(f"colour {color} outside [1, {hb.d}]^2")
    first, second = (a, b) if hb.side(j) == 0 else (b, a)
    e = hb.query(j, first)
    if e is None:
        # keep the cost independent of the data
        hb.meter.charge(1)
        return None
    back = hb.query(e[0], second)
    if back is None or back[0] != j:
        return None
    return e


@dataclass
class ColoredSlice:
    color: tuple[int, int]
    parent: DoubledOracle

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Partner index and value per row (partner -1 when the row is empty)."""
        dim = self.parent.dim
        partner = np.full(dim, -1, dtype=np.int64)
        value = np.zeros(dim, dtype=complex)
        for j in range(dim):
            e = slice_query(self.parent, self.color, j)
            if e is not None:
                partner[j], value[j] = e
        return partner, value

    def dense(self) -> np.ndarray:
        partner, value = self.arrays()
        out = np.zeros((self.parent.dim, self.parent.dim), dtype=complex)
        rows = np.flatnonzero(partner >= 0)
        out[rows, partner[rows]] = value[rows]
        return out


def colored_slices(hb: DoubledOracle) -> list[ColoredSlice]:
    return [ColoredSlice((a, b), hb) for a in range(1, hb.d + 1) for b in range(1, hb.d + 1)]


@dataclass(frozen=True)
class SignedPermTerm:
    """Hermitian signed permutation: row r holds ``phase[r]`` in column ``perm[r]``."""

    perm: np.ndarray
    phase: np.ndarray
    tag: str = "X"
    level: int = 1
    sign: int = 1
    color: Optional[tuple[int, int]] = None

    @property
    def dim(self) -> int:
        return len(self.perm)

    def dense(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        out[np.arange(self.dim), self.perm] = self.phase
        return out

    def apply(self, v: np.ndarray) -> np.ndarray:
        """(T v)[r] = phase[r] * v[perm[r]]; works on vectors and matrices."""
        ph = self.phase if v.ndim == 1 else self.phase[:, None]
        return ph * v[self.perm]

    def check(self, tol: float = TOL_STRUCT) -> None:
        m = self.dense()
        if np.max(np.abs(m - m.conj().T)) > tol:
            raise ValidationError("term is not Hermitian")
        if np.max(np.abs(m @ m - np.eye(self.dim))) > tol:
            raise ValidationError("term does not square to the identity")


_TAGS = ("X", "Y", "Z")


@dataclass
class TermClass:
    """All level/sign terms cut from one (slice, tag) pair.

    ``level[r]`` is the rounded magnitude of row r's entry (0 if none), and
    ``phase[r]`` its unit phase.  The term at level l keeps the entries with
    ``level >= l`` and fills the remaining rows' diagonal with ``sign * fill``.
    """

    tag: str
    perm: np.ndarray
    level: np.ndarray
    phase: np.ndarray
    fill: complex
    color: Optional[tuple[int, int]] = None

    @property
    def max_level(self) -> int:
        return int(self.level.max(initial=0))

    def term(self, lvl: int, sign: int) -> SignedPermTerm:
        keep = self.level >= lvl
        idx = np.arange(len(self.perm))
        perm = np.where(keep, self.perm, idx)
        phase = np.where(keep, self.phase, sign * self.fill).astype(complex)
        return SignedPermTerm(perm, phase, self.tag, lvl, sign, self.color)


class TermSet(Sequence):
    """Ordered signed-permutation terms stored per class.

    Order: class by class, then level 1..L, then sign + before -.  Length is
    eta = sum of 2 L over classes.  Indexing builds the term on demand so
    very long term lists never materialise.
    """

    def __init__(self, classes: list[TermClass], dim: int) -> None:
        self.classes = [c for c in classes if c.max_level > 0]
        self.dim = dim
        counts = [2 * c.max_level for c in self.classes]
        self.offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

    def __len__(self) -> int:
        return int(self.offsets[-1])

    def locate(self, j: int) -> tuple[int, int, int]:
        """Map term index j to (class index, level, sign)."""
        if not 0 <= j < len(self):
            raise IndexError(j)
        c = int(np.searchsorted(self.offsets, j, side="right") - 1)
        rel = j - int(self.offsets[c])
        return c, rel // 2 + 1, 1 if rel % 2 == 0 else -1

    def __getitem__(self, j):
        if isinstance(j, slice):
            return [self[i] for i in range(*j.indices(len(self)))]
        if j < 0:
            j += len(self)
        c, lvl, sign = self.locate(j)
        return self.classes[c].term(lvl, sign)

    def tables(self) -> dict[str, np.ndarray]:
        """Dense class tables consumed by the compiled kernels."""
        ncls = len(self.classes)
        perm = np.zeros((ncls, self.dim), dtype=np.int64)
        level = np.zeros((ncls, self.dim), dtype=np.int64)
        phase = np.zeros((ncls, self.dim), dtype=complex)
        fill = np.zeros(ncls, dtype=complex)
        levels = np.zeros(ncls, dtype=np.int64)
        for i, c in enumerate(self.classes):
            perm[i], level[i], phase[i], fill[i] = c.perm, c.level, c.phase, c.fill
            levels[i] = c.max_level
        return {"perm": perm, "level": level, "phase": phase, "fill": fill, "levels": levels}

    def weighted_sum(self, gamma: float) -> np.ndarray:
        """gamma * sum_j G_j (dense).

        The + and - completions of each level cancel, so a class contributes
        2 * level[r] * phase[r] at (r, perm[r]).
        """
        out = np.zeros((self.dim, self.dim), dtype=complex)
        rows = np.arange(self.dim)
        for c in self.classes:
            np.add.at(out, (rows, c.perm), 2.0 * c.level * c.phase)
        return gamma * out

    def brute_sum(self, gamma: float) -> np.ndarray:
        """Same as ``weighted_sum`` but term by term (for checking)."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for term in self:
            out += term.dense()
        return gamma * out


def _round_half_to_zero(q: np.ndarray) -> np.ndarray:
    """Nearest integer, with exact .5 ties rounded toward zero."""
    return (np.sign(q) * np.ceil(np.abs(q) - 0.5)).astype(np.int64)


def _one_sparse_arrays(g) -> tuple[np.ndarray, np.ndarray]:
    g = np.asarray(g, dtype=complex)
    dim = g.shape[0]
    if g.shape != (dim, dim):
        raise ValidationError("expected a square matrix")
    if np.max(np.abs(g - g.conj().T), initial=0.0) > TOL_STRUCT:
        raise ValidationError("1-sparse input must be Hermitian")
    nz = g != 0
    if np.any(nz.sum(axis=1) > 1) or np.any(nz.sum(axis=0) > 1):
        raise ValidationError("input is not 1-sparse")
    partner = np.full(dim, -1, dtype=np.int64)
    rows, cols = np.nonzero(nz)
    partner[rows] = cols
    value = np.zeros(dim, dtype=complex)
    value[rows] = g[rows, cols]
    return partner, value


def _classes_from_arrays(partner: np.ndarray, value: np.ndarray, gamma: float,
                         color=None) -> list[TermClass]:
    dim = len(partner)
    idx = np.arange(dim)
    has = partner >= 0
    diag = has & (partner == idx)
    off = has & ~diag
    perm = np.where(has, partner, idx)
    scale = 2.0 * gamma
    out = []
    # X: real parts off the diagonal; Y: imaginary parts off the diagonal,
    # emitted as i * (real antisymmetric level matrix); Z: the diagonal.
    for tag, mask, comp, unit, fill in (
        ("X", off, value.real, 1.0, 1.0),
        ("Y", off, value.imag, 1j, -1.0),
        ("Z", diag, value.real, 1.0, 1.0),
    ):
        p = np.where(mask, _round_half_to_zero(comp / scale), 0)
        level = np.abs(p)
        if level.max(initial=0) == 0:
            continue
        phase = np.where(level > 0, unit * np.sign(p), 0).astype(complex)
        cls_perm = np.where(level > 0, perm, idx)
        out.append(TermClass(tag, cls_perm, level, phase, complex(fill), color))
    return out


def split_one_sparse(g: Union[ColoredSlice, np.ndarray], gamma: float) -> TermSet:
    """Round a 1-sparse Hermitian matrix to multiples of 2*gamma and split into +-1 terms."""
    if gamma <= 0:
        raise ValidationError("gamma must be positive")
    if isinstance(g, ColoredSlice):
        partner, value = g.arrays()
        color, dim = g.color, g.parent.dim
    else:
        partner, value = _one_sparse_arrays(g)
        color, dim = None, len(partner)
    return TermSet(_classes_from_arrays(partner, value, gamma, color), dim)


def decompose_full(h: SparseHamiltonianOracle, gamma: float) -> TermSet:
    """Terms G_j with ||sigma_x (x) H - gamma sum G_j||_max <= sqrt(2) gamma d^2."""
    if gamma <= 0:
        raise ValidationError("gamma must be positive")
    hb = bipartite_double(h)
    classes: list[TermClass] = []
    for sl in colored_slices(hb):
        partner, value = sl.arrays()
        classes.extend(_classes_from_arrays(partner, value, gamma, sl.color))
    return TermSet(classes, hb.dim)


def local_coloring(support: Sequence[int], x: int, y: int) -> tuple[int, ...]:
    """Colour of the edge x -> y under a k-local term: which support bits flip."""
    mask = 0
    for b in support:
        mask |= 1 << b
    diff = x ^ y
    if diff & ~mask:
        raise ValidationError("x and y differ outside the term's support")
    return tuple((diff >> b) & 1 for b in support)


def term_count_bound(stats: HamiltonianStats, gamma: float) -> int:
    return 6 * stats.d ** 2 * int(np.ceil(stats.max_norm / gamma)) if stats.max_norm > 0 else 0
