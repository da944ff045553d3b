"""Black-box sparse Hamiltonian oracle, coordinate-file ingestion and generators."""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .linalg import DENSE_LIMIT, ValidationError, make_rng


class ParseError(ValidationError):
    """Malformed coordinate text."""


class HermiticityError(ValidationError):
    """Coordinate data that cannot describe a Hermitian matrix."""


class DuplicateEntryError(ValidationError):
    """The same coordinate listed twice."""


class QueryMeter:
    """Thread-safe monotone counter of oracle invocations."""

    def __init__(self) -> None:
        self._count = 0
        self._lock = threading.Lock()

    def charge(self, n: int = 1) -> None:
        if n < 0:
            raise ValueError("meter charges must be nonnegative")
        with self._lock:
            self._count += n

    @property
    def count(self) -> int:
        return self._count

    def reset(self) -> None:
        with self._lock:
            self._count = 0


Entry = Optional[tuple[int, complex]]


class SparseHamiltonianOracle:
    """d-sparse Hermitian matrix on n qubits, answered one (row, slot) at a time.

    Rows are stored as column-sorted lists of nonzero entries.  ``query(i, j)``
    uses a 1-based slot index and returns ``None`` when row ``i`` has fewer
    than ``j`` nonzeros.
    """

    def __init__(self, n: int, d: int, rows: Sequence[Sequence[tuple[int, complex]]],
                 meter: QueryMeter | None = None) -> None:
        if n < 0:
            raise ValidationError("qubit count must be nonnegative")
        self.n = int(n)
        self.d = int(d)
        self.dim = 1 << self.n
        if len(rows) != self.dim:
            raise ValidationError(f"expected {self.dim} rows, got {len(rows)}")
        self._rows = [tuple(sorted((int(c), complex(v)) for c, v in row)) for row in rows]
        for i, row in enumerate(self._rows):
            if len(row) > self.d:
                raise ValidationError(f"row {i} has {len(row)} nonzeros, more than d = {self.d}")
            cols = [c for c, _ in row]
            if len(set(cols)) != len(cols):
                raise DuplicateEntryError(f"row {i} lists a column twice")
            if any(v == 0 for _, v in row):
                raise ValidationError(f"row {i} stores an explicit zero")
        self.meter = meter if meter is not None else QueryMeter()

    @classmethod
    def from_function(cls, n: int, d: int, row_fn: Callable[[int], Sequence[tuple[int, complex]]],
                      meter: QueryMeter | None = None) -> "SparseHamiltonianOracle":
        return cls(n, d, [row_fn(i) for i in range(1 << n)], meter)

    @classmethod
    def from_dense(cls, h, tol: float = 0.0) -> "SparseHamiltonianOracle":
        h = np.asarray(h, dtype=complex)
        dim = h.shape[0]
        n = int(round(np.log2(dim))) if dim > 0 else 0
        if (1 << n) != dim or h.shape != (dim, dim):
            raise ValidationError("dense input must be a 2^n x 2^n matrix")
        if np.max(np.abs(h - h.conj().T), initial=0.0) > 1e-12:
            raise HermiticityError("dense input is not Hermitian")
        rows = [[(int(c), h[i, c]) for c in np.flatnonzero(np.abs(h[i]) > tol)] for i in range(dim)]
        d = max((len(r) for r in rows), default=0)
        return cls(n, d, rows)

    def query(self, i: int, j: int) -> Entry:
        """Return the j-th (1-based) nonzero (column, value) of row i, or None."""
        if not 1 <= j <= self.d:
            raise ValidationError(f"slot {j} outside [1, {self.d}]")
        if not 0 <= i < self.dim:
            raise ValidationError(f"row {i} outside [0, {self.dim})")
        self.meter.charge(1)
        row = self._rows[i]
        return row[j - 1] if j <= len(row) else None

    def row_scan(self, i: int) -> list[tuple[int, complex]]:
        """Query every slot of row i (charges d queries)."""
        out = []
        for j in range(1, self.d + 1):
            e = self.query(i, j)
            if e is not None:
                out.append(e)
        return out

    def entries(self):
        """Unmetered iteration over stored (row, col, value) triples."""
        for i, row in enumerate(self._rows):
            for c, v in row:
                yield i, c, v

    def occupancy(self, i: int) -> int:
        return len(self._rows[i])


def oracle_query(h: SparseHamiltonianOracle, i: int, j: int) -> Entry:
    return h.query(i, j)


@dataclass(frozen=True)
class HamiltonianStats:
    max_norm: float
    d: int
    n: int


def stats(h: SparseHamiltonianOracle) -> HamiltonianStats:
    mx = max((abs(v) for _, _, v in h.entries()), default=0.0)
    return HamiltonianStats(max_norm=float(mx), d=h.d, n=h.n)


def dense_of(h: SparseHamiltonianOracle, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Reconstruct the full matrix by querying every (row, slot); charges dim * d."""
    if h.dim > limit:
        raise ValidationError(f"dimension {h.dim} exceeds dense limit {limit}")
    out = np.zeros((h.dim, h.dim), dtype=complex)
    for i in range(h.dim):
        for j in range(1, h.d + 1):
            e = h.query(i, j)
            if e is not None:
                out[i, e[0]] = e[1]
    return out


def random_sparse(n: int, d: int, seed: int) -> SparseHamiltonianOracle:
    """Random Hermitian matrix built as a sum of d random involutive matchings.

    Each layer pairs up the basis states by a random involution: fixed points
    become real diagonal entries, 2-cycles become a complex entry and its
    conjugate.  Each layer contributes magnitudes at most 1; where layers
    land on the same coordinate their values add, so rows are at most
    d-sparse and entries at most d in magnitude.
    """
    dim = 1 << n
    if n < 0 or d < 0 or d > dim:
        raise ValidationError(f"infeasible sparsity d = {d} for n = {n}")
    rng = make_rng(seed)
    acc: list[dict[int, complex]] = [dict() for _ in range(dim)]
    for _ in range(d):
        perm = rng.permutation(dim)
        partner = np.arange(dim)
        # pair consecutive elements of a random permutation; leave a random
        # number of fixed points so that diagonals appear too
        n_fixed = int(rng.integers(0, dim + 1))
        if (dim - n_fixed) % 2:
            n_fixed += 1
        paired = perm[n_fixed:]
        for a, b in zip(paired[0::2], paired[1::2]):
            partner[a], partner[b] = b, a
        for u in range(dim):
            v = int(partner[u])
            if v < u:
                continue
            mag = 1.0 - rng.random()
            if v == u:
                val = complex(mag * rng.choice([-1.0, 1.0]))
            else:
                val = mag * np.exp(2j * np.pi * rng.random())
            acc[u][v] = acc[u].get(v, 0) + val
            if v != u:
                acc[v][u] = acc[v].get(u, 0) + np.conj(val)
    rows = [[(c, v) for c, v in sorted(r.items()) if v != 0] for r in acc]
    occ = max((len(r) for r in rows), default=0)
    return SparseHamiltonianOracle(n, max(d, occ), rows)


def _fmt(x: float) -> str:
    # adding 0.0 maps -0.0 to 0.0 so the canonical text does not depend on the sign of zero
    return repr(float(x) + 0.0)


def save_coo(h: SparseHamiltonianOracle) -> str:
    """Canonical coordinate text: upper triangle and diagonal, sorted, repr floats."""
    lines = [f"{h.n} {h.d}"]
    for i, c, v in h.entries():
        if c >= i:
            lines.append(f"{i} {c} {_fmt(v.real)} {_fmt(v.imag)}")
    return "\n".join(lines) + "\n"


def load_coo(text: str) -> SparseHamiltonianOracle:
    """Parse coordinate text into a validated Hermitian oracle.

    Format: header ``n d_hint`` followed by ``row col re im`` lines (0-based).
    Only the upper triangle and diagonal are required; a mirrored lower
    entry may be given but must be the exact conjugate.  ``d`` is the
    maximal row occupancy (the header hint is checked to be nonnegative).
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ParseError("missing header line 'n d_hint'")
    head = lines[0].split()
    if len(head) != 2:
        raise ParseError(f"header must be 'n d_hint', got {lines[0]!r}")
    try:
        n, d_hint = int(head[0]), int(head[1])
    except ValueError as exc:
        raise ParseError(f"header must hold two integers: {lines[0]!r}") from exc
    if n < 0 or d_hint < 0:
        raise ParseError("header values must be nonnegative")
    if n > 20:
        raise ParseError(f"n = {n} is beyond what this tool can handle")
    dim = 1 << n
    given: dict[tuple[int, int], complex] = {}
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 4:
            raise ParseError(f"line {lineno}: expected 'row col re im', got {ln!r}")
        try:
            r, c = int(parts[0]), int(parts[1])
            val = complex(float(parts[2]), float(parts[3]))
        except ValueError as exc:
            raise ParseError(f"line {lineno}: cannot parse {ln!r}") from exc
        if not (0 <= r < dim and 0 <= c < dim):
            raise ParseError(f"line {lineno}: index out of range for n = {n}")
        if not (np.isfinite(val.real) and np.isfinite(val.imag)):
            raise ParseError(f"line {lineno}: non-finite value")
        if (r, c) in given:
            raise DuplicateEntryError(f"line {lineno}: duplicate coordinate ({r}, {c})")
        given[(r, c)] = val
    full: dict[tuple[int, int], complex] = {}
    for (r, c), v in given.items():
        if r == c and v.imag != 0:
            raise HermiticityError(f"diagonal entry ({r}, {r}) has nonzero imaginary part")
        mirror = given.get((c, r))
        if mirror is not None and mirror != v.conjugate():
            raise HermiticityError(f"entries ({r}, {c}) and ({c}, {r}) are not conjugate")
        if v == 0:
            continue
        full[(r, c)] = v
        full[(c, r)] = v.conjugate()
    rows: list[list[tuple[int, complex]]] = [[] for _ in range(dim)]
    for (r, c), v in full.items():
        rows[r].append((c, v))
    d = max((len(r) for r in rows), default=0)
    return SparseHamiltonianOracle(n, d, rows)
