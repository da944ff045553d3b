"""Executable lower-bound Hamiltonians.

Parity chain: a weighted path 0..N whose end-to-end transition amplitude is
|sin(t/N)|^N.  Gluing two copies of it along the bits of an input string
gives a Hamiltonian whose evolution from |0,0> can only reach |N, parity(x)>,
so simulating it to precision well below that amplitude decides parity.
Bessel walk: an unweighted two-path graph assembled from Hadamard-conjugated
query gadgets, whose endpoint amplitude after time t is |J_2N(t)|.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hamiltonian import SparseHamiltonianOracle
from .linalg import ValidationError, exact_expm

DEMO_TIME = 1.0
THRESHOLD_FACTOR = 10.0
WRONG_SECTOR_TOL = 1e-12


# ----------------------------------------------------------------------------
# parity chain

@dataclass(frozen=True)
class ParityChain:
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValidationError("chain length must be at least 1")

    def weights(self) -> np.ndarray:
        i = np.arange(self.N)
        return np.sqrt((self.N - i) * (i + 1.0)) / self.N

    def dense(self) -> np.ndarray:
        w = self.weights()
        return np.diag(w, 1) + np.diag(w, -1)

    def oracle(self) -> SparseHamiltonianOracle:
        """Sparse oracle on the smallest qubit register holding N + 1 sites (zero padded)."""
        n = max(1, math.ceil(math.log2(self.N + 1)))
        h = np.zeros((1 << n, 1 << n))
        h[: self.N + 1, : self.N + 1] = self.dense()
        return SparseHamiltonianOracle.from_dense(h)


def parity_overlap(N: int, t: float) -> float:
    """|<N| exp(-i H' t) |0>| by dense evolution."""
    u = exact_expm(ParityChain(N).dense(), t)
    return float(abs(u[N, 0]))


def parity_overlap_closed_form(N: int, t: float) -> float:
    return abs(math.sin(t / N)) ** N


def symmetric_x_operator(N: int) -> np.ndarray:
    """sum_i X_i on N qubits (dense 2^N x 2^N)."""
    dim = 1 << N
    out = np.zeros((dim, dim))
    idx = np.arange(dim)
    for b in range(N):
        out[idx, idx ^ (1 << b)] += 1.0
    return out


def weight_state(N: int, k: int) -> np.ndarray:
    """Uniform superposition over N-bit strings of Hamming weight k."""
    dim = 1 << N
    v = np.array([1.0 if bin(x).count("1") == k else 0.0 for x in range(dim)])
    return v / np.linalg.norm(v)


# ----------------------------------------------------------------------------
# parity-oracle Hamiltonian

def parity(x: Sequence[int]) -> int:
    return int(sum(x)) % 2


@dataclass(frozen=True)
class ParityOracleHamiltonian:
    """Sites (i, j), i in 0..N, j in {0, 1}, index 2 i + j; (i, j) ~ (i - 1, j xor x_i)."""

    x: tuple[int, ...]

    @property
    def N(self) -> int:
        return len(self.x)

    def index(self, i: int, j: int) -> int:
        return 2 * i + j

    def edges(self) -> list[tuple[int, int, float]]:
        N = self.N
        out = []
        for i in range(1, N + 1):
            w = math.sqrt((N - i + 1) * i) / N
            for j in (0, 1):
                out.append((self.index(i, j), self.index(i - 1, j ^ self.x[i - 1]), w))
        return out

    def dense(self) -> np.ndarray:
        dim = 2 * (self.N + 1)
        h = np.zeros((dim, dim))
        for a, b, w in self.edges():
            h[a, b] = h[b, a] = w
        return h

    def components(self) -> list[set[int]]:
        dim = 2 * (self.N + 1)
        adj = {v: set() for v in range(dim)}
        for a, b, _ in self.edges():
            adj[a].add(b)
            adj[b].add(a)
        seen, comps = set(), []
        for v in range(dim):
            if v in seen:
                continue
            comp, queue = {v}, deque([v])
            while queue:
                u = queue.popleft()
                for w in adj[u] - comp:
                    comp.add(w)
                    queue.append(w)
            seen |= comp
            comps.append(comp)
        return comps


@dataclass
class DecodeResult:
    parity: int
    success_probability: float
    overlap: float
    right_amplitude: float
    wrong_amplitude: float
    wrong_clean: float
    guaranteed: bool


def parity_decode(x: Sequence[int], t: float, eps_sim: float = 0.0, safety: float = 2.0) -> DecodeResult:
    """Evolve |0,0>, optionally corrupt the state by eps_sim, and read off the parity.

    Measuring gives first register N with the parity bit in the second
    register; otherwise we guess.  The injected corruption is the worst
    case of norm eps_sim: it removes amplitude from |N, parity> and adds it
    to |N, not parity>.  Decoding is guaranteed while the clean amplitude
    exceeds ``safety`` * eps_sim.
    """
    if t <= 0:
        raise ValidationError("evolution time must be positive")
    h = ParityOracleHamiltonian(tuple(int(b) for b in x))
    N = h.N
    psi0 = np.zeros(2 * (N + 1), dtype=complex)
    psi0[0] = 1.0
    psi = exact_expm(h.dense(), t) @ psi0
    par = parity(h.x)
    right, wrong = h.index(N, par), h.index(N, 1 - par)
    overlap = float(abs(psi[right]))
    wrong_clean = float(abs(psi[wrong]))
    if wrong_clean > WRONG_SECTOR_TOL:
        raise RuntimeError(f"wrong-parity amplitude {wrong_clean:.3e} exceeds {WRONG_SECTOR_TOL}")
    if eps_sim > 0:
        take = min(overlap, eps_sim / math.sqrt(2.0))
        give = math.sqrt(max(eps_sim ** 2 - take ** 2, 0.0))
        phase = psi[right] / overlap if overlap > 0 else 1.0
        psi = psi.copy()
        psi[right] -= take * phase
        psi[wrong] += give
        psi /= np.linalg.norm(psi)
    p_right, p_wrong = abs(psi[right]) ** 2, abs(psi[wrong]) ** 2
    decoded = par if p_right > p_wrong else 1 - par
    success = 0.5 + 0.5 * (p_right - p_wrong) if decoded == par else 0.5 + 0.5 * (p_wrong - p_right)
    return DecodeResult(decoded, float(success), overlap, float(abs(psi[right])),
                        float(abs(psi[wrong])), wrong_clean, overlap > safety * eps_sim)


def epsilon_threshold(eps: float, t: float = DEMO_TIME, factor: float = THRESHOLD_FACTOR) -> int:
    """Largest N with |sin(t/N)|^N > factor * eps (at least 1)."""
    if not 0.0 < eps < 1.0:
        raise ValidationError(f"epsilon must lie in (0, 1), got {eps}")
    target = factor * eps
    N = 1
    while parity_overlap_closed_form(N + 1, t) > target:
        N += 1
    return N


# ----------------------------------------------------------------------------
# Bessel walk

def bessel_j(n: int, t: float, tol: float = 1e-17) -> float:
    """J_n(t) from its power series sum_m (-1)^m (t/2)^{2m+n} / (m! (m+n)!).

    Terms are summed until they are decreasing and the next term, which
    bounds the remainder of the alternating tail, is below tol * max(1, |sum|).
    """
    if n < 0:
        return (-1) ** n * bessel_j(-n, t, tol)
    half = t / 2.0
    term = half ** n / math.factorial(n)
    total, m = term, 0
    while True:
        m += 1
        nxt = -term * half * half / (m * (m + n))
        decreasing = abs(nxt) <= abs(term)
        term = nxt
        total += term
        if decreasing and abs(term) <= tol * max(1.0, abs(total)):
            break
        if m > 10_000:
            raise RuntimeError("Bessel series did not converge")
    return total


class BesselWalk:
    """Walk on sites i in [-W, W] with four vertices (i, j, k) per site, j, k in {0, 1}.

    H = -U1^dag Hx U1 - U2^dag Hx U2 + U3^dag Hx U3 + U4^dag Hx U4 + H_D where
    Hx puts weight x_i on one designated vertex of each query pair and U_a
    is a Hadamard on that pair: the conjugation spreads x_i into a half
    all-ones block.  H_D carries the dashed edges of weight 1/2.
    """

    # vertex pairs (j, k) acted on by each conjugating unitary
    PAIRS = {
        1: ((0, 0), (0, 1)),
        2: ((1, 0), (1, 1)),
        3: ((0, 0), (1, 1)),
        4: ((0, 1), (1, 0)),
    }
    SIGNS = {1: -1.0, 2: -1.0, 3: 1.0, 4: 1.0}

    def __init__(self, x: Sequence[int], W: int) -> None:
        self.x = tuple(int(b) for b in x)
        self.N = len(self.x)
        if W < self.N:
            raise ValidationError(f"half-width W = {W} must cover the N = {self.N} query sites")
        self.W = int(W)
        self.dim = 4 * (2 * self.W + 1)

    def index(self, i: int, j: int, k: int) -> int:
        if not -self.W <= i <= self.W:
            raise ValidationError(f"site {i} outside [-{self.W}, {self.W}]")
        return 4 * (i + self.W) + 2 * j + k

    def query_hamiltonian(self, a: int) -> np.ndarray:
        """Hx for gadget a: weight x_i on the first vertex of pair a at each query site."""
        h = np.zeros((self.dim, self.dim))
        first = self.PAIRS[a][0]
        for i in range(1, self.N + 1):
            v = self.index(i, *first)
            h[v, v] = self.x[i - 1]
        return h

    def conjugator(self, a: int) -> np.ndarray:
        """Hadamard on pair a at every query site, identity elsewhere."""
        u = np.eye(self.dim)
        had = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
        p, q = self.PAIRS[a]
        for i in range(1, self.N + 1):
            ids = [self.index(i, *p), self.index(i, *q)]
            u[np.ix_(ids, ids)] = had
        return u

    def gadget_term(self, a: int) -> np.ndarray:
        u = self.conjugator(a)
        return u.conj().T @ self.query_hamiltonian(a) @ u

    def driving(self) -> np.ndarray:
        """H_D: intra-site (i, j, k) ~ (i, j, 1-k) and inter-site (i, j, 1) ~ (i+1, j, 0), weight 1/2."""
        h = np.zeros((self.dim, self.dim))
        for i in range(-self.W, self.W + 1):
            for j in (0, 1):
                a, b = self.index(i, j, 0), self.index(i, j, 1)
                h[a, b] = h[b, a] = 0.5
                if i < self.W:
                    c = self.index(i + 1, j, 0)
                    h[b, c] = h[c, b] = 0.5
        return h

    def dense(self) -> np.ndarray:
        h = self.driving()
        for a in (1, 2, 3, 4):
            h = h + self.SIGNS[a] * self.gadget_term(a)
        return h

    def path_adjacency(self) -> np.ndarray:
        """Half the adjacency of the two paths traced from (-W, j, 0), j = 0, 1."""
        h = np.zeros((self.dim, self.dim))
        for j0 in (0, 1):
            j = j0
            prev = self.index(-self.W, j, 0)
            for i in range(-self.W, self.W + 1):
                if i > -self.W:
                    cur = self.index(i, j, 0)
                    h[prev, cur] = h[cur, prev] = 0.5
                    prev = cur
                flip = self.x[i - 1] if 1 <= i <= self.N else 0
                j ^= flip
                cur = self.index(i, j, 1)
                h[prev, cur] = h[cur, prev] = 0.5
                prev = cur
        return h

    def overlap(self, t: float) -> float:
        u = exact_expm(self.dense(), t)
        start = self.index(0, 0, 1)
        end = self.index(self.N, parity(self.x), 1)
        return float(abs(u[end, start]))


def bessel_overlap(N: int, t: float, W: int = 40, x: Sequence[int] | None = None) -> float:
    """|<N, parity(x), 1| exp(-i H t) |0, 0, 1>| on the walk truncated to [-W, W]."""
    if x is None:
        x = [1] * N
    if len(x) != N:
        raise ValidationError("bit string length must equal N")
    if W < N * N:
        gap = abs(BesselWalk(x, 2 * max(W, N)).overlap(t) - BesselWalk(x, max(W, N)).overlap(t))
        raise ValidationError(f"W = {W} is below N^2 = {N * N}; widen the truncation "
                              f"(overlap moves by {gap:.3e} when W doubles)")
    return BesselWalk(x, W).overlap(t)


def bessel_convergence_gap(N: int, t: float, W: int, x: Sequence[int] | None = None) -> float:
    """Change in the overlap when the truncation half-width doubles."""
    return abs(bessel_overlap(N, t, 2 * W, x) - bessel_overlap(N, t, W, x))
