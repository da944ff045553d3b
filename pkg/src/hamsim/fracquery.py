"""Fractional-query programs and their compilation into gadget segments.

A fractional-query program interleaves fixed unitaries with fractional
powers Q^alpha of +-1-eigenvalue oracles.  Each fractional power is realised
by a one-ancilla gadget that succeeds with a known probability; a run of
gadgets whose total cost is at most 1/5, followed by a fixed rotation on one
more qubit, succeeds with amplitude exactly 1/2.  The ancilla superposition
over gadget outcomes is truncated to Hamming weight k, and stored as a
list of gaps between ones (a composition) rather than as 2^m amplitudes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy.stats import binom

from .decompose import SignedPermTerm, TermSet
from .linalg import (ValidationError, as_operator, exact_expm,
                     fractional_power, is_involution, is_unitary)

MAX_SEGMENT_COST = 0.2
ENCODED_LIMIT = 200_000
MAX_ENCODED_M = 24
MAX_ENCODED_K = 8


@dataclass(frozen=True)
class GadgetParams:
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"fraction {self.alpha} outside [0, 1]")

    @property
    def c(self) -> float:
        return math.cos(math.pi * self.alpha / 2)

    @property
    def s(self) -> float:
        return math.sin(math.pi * self.alpha / 2)

    @property
    def q(self) -> float:
        return 1.0 / (1.0 + math.sin(math.pi * self.alpha))

    @property
    def one_weight(self) -> float:
        """Probability s/(c+s) that the gadget's control reads 1 after R."""
        return self.s / (self.c + self.s)

    def rotation(self) -> np.ndarray:
        c, s = self.c, self.s
        return np.array([[math.sqrt(c), math.sqrt(s)], [math.sqrt(s), -math.sqrt(c)]]) / math.sqrt(c + s)

    def phase_gate(self, literal: bool = False) -> np.ndarray:
        """diag(1, i), optionally rescaled by e^{-i pi alpha}.

        The rescaled form is what makes the zero-control block carry the
        phase e^{-i pi alpha/2}; the literal diag(1, i) gives e^{+i pi alpha/2}.
        """
        p = np.diag([1.0, 1j])
        return p if literal else np.exp(-1j * math.pi * self.alpha) * p


def adjust_eigenvalues(g) -> np.ndarray:
    """pi (I + G) / 2, which has eigenvalues {0, pi} and exp(-i .) = -G."""
    g = g.dense() if isinstance(g, SignedPermTerm) else as_operator(g)
    if not is_involution(g):
        raise ValidationError("adjust_eigenvalues requires G @ G = I")
    return 0.5 * math.pi * (np.eye(g.shape[0]) + g)


def multiplex_oracle(terms: Sequence) -> np.ndarray:
    """Block-diagonal selection oracle sum_j |j><j| (x) Q_j with Q_j = exp(-i pi (I + G_j)/2)."""
    terms = list(terms)
    if not terms:
        raise ValidationError("multiplex_oracle needs at least one term")
    mats = [t.dense() if isinstance(t, SignedPermTerm) else as_operator(t) for t in terms]
    dim = mats[0].shape[0]
    if any(m.shape != (dim, dim) for m in mats):
        raise ValidationError("all terms must share one dimension")
    out = np.zeros((len(mats) * dim, len(mats) * dim), dtype=complex)
    for j, g in enumerate(mats):
        out[j * dim:(j + 1) * dim, j * dim:(j + 1) * dim] = exact_expm(adjust_eigenvalues(g), 1.0)
    return out


def increment(eta: int, system_dim: int) -> np.ndarray:
    """Index counter |j> -> |j + 1 mod eta> on index (x) system."""
    shift = np.roll(np.eye(eta), 1, axis=0)
    return np.kron(shift, np.eye(system_dim))


class FractionalQueryProgram:
    """U_lambda Q_{i_lambda}^{alpha_lambda} ... U_1 Q_{i_1}^{alpha_1} U_0 on the system register.

    ``oracles`` is a sequence of involutions Q_j (dense arrays), or a
    ``TermSet`` whose terms G_j define Q_j = -G_j.  ``drives`` has length
    lambda + 1 with ``None`` meaning identity.  ``phase`` is a c-number that
    multiplies the program product to give the intended operator.
    """

    def __init__(self, oracles, indices, alphas, drives=None, phase: complex = 1.0,
                 system_dim: Optional[int] = None) -> None:
        self.oracles = oracles
        self._indices = np.asarray(indices, dtype=np.int64)
        self._alphas = np.asarray(alphas, dtype=float)
        if self._indices.shape != self._alphas.shape:
            raise ValidationError("indices and alphas must have equal length")
        n = len(self._alphas)
        self.drives = list(drives) if drives is not None else [None] * (n + 1)
        if len(self.drives) != n + 1:
            raise ValidationError(f"expected {n + 1} drives, got {len(self.drives)}")
        if n and (np.any(self._alphas <= 0) or np.any(self._alphas > 1)):
            raise ValidationError("every fraction must lie in (0, 1]")
        self.phase = complex(phase)
        if system_dim is None:
            system_dim = self.oracle(0).shape[0] if len(oracles) else None
        self.system_dim = system_dim

    @property
    def indices(self) -> np.ndarray:
        return self._indices

    @property
    def alphas(self) -> np.ndarray:
        return self._alphas

    @property
    def length(self) -> int:
        return len(self._alphas)

    @property
    def cost(self) -> float:
        return float(np.sum(self._alphas))

    def oracle(self, j: int) -> np.ndarray:
        if isinstance(self.oracles, TermSet):
            return -self.oracles[j].dense()
        return as_operator(self.oracles[j])

    def drive(self, j: int) -> np.ndarray:
        u = self.drives[j]
        return np.eye(self.system_dim) if u is None else u

    def slice(self, start: int, stop: int) -> "FractionalQueryProgram":
        """Steps start..stop-1 with their surrounding drives; first drive kept only at 0."""
        drives = [self.drives[start] if start == 0 else None]
        drives += list(self.drives[start + 1:stop + 1])
        return FractionalQueryProgram(self.oracles, self.indices[start:stop], self.alphas[start:stop],
                                      drives, 1.0, self.system_dim)

    def product(self) -> np.ndarray:
        """Dense program product (without the c-number phase)."""
        v = self.drive(0).astype(complex)
        for j in range(self.length):
            v = self.drive(j + 1) @ fractional_power(self.oracle(int(self.indices[j])), float(self.alphas[j])) @ v
        return v

    def validate(self) -> None:
        for j, u in enumerate(self.drives):
            if u is not None and not is_unitary(np.asarray(u)):
                raise ValidationError(f"drive {j} is not unitary")


class TrotterProgram(FractionalQueryProgram):
    """First-order product formula for gamma * sum_j G_j as a fractional-query program.

    Step s queries oracle s mod eta with fraction 2 gamma t / (pi r); the
    schedule is generated on demand, so programs with millions of steps cost
    nothing to hold.
    """

    def __init__(self, terms: TermSet, gamma: float, t: float, r: int) -> None:
        self.oracles = terms
        self.gamma = float(gamma)
        self.t = float(t)
        self.r = int(r)
        self.eta = len(terms)
        self.system_dim = terms.dim
        self.step_alpha = 2.0 * self.gamma * self.t / (math.pi * self.r) if self.r else 0.0
        self.phase = complex(np.exp(1j * self.gamma * self.eta * self.t))
        self.drives = _IdentityDrives(self.length + 1)

    @property
    def length(self) -> int:
        return self.eta * self.r if self.t != 0 else 0

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.length, dtype=np.int64) % max(self.eta, 1)

    @property
    def alphas(self) -> np.ndarray:
        return np.full(self.length, self.step_alpha)

    @property
    def cost(self) -> float:
        return self.length * self.step_alpha

    def multiplexed(self) -> FractionalQueryProgram:
        """Single-oracle form on index (x) system with counter drives (dense; small eta only)."""
        q = multiplex_oracle(self.oracles)
        inc = increment(self.eta, self.system_dim)
        drives = [None] + [inc] * self.length
        return FractionalQueryProgram([q], np.zeros(self.length, dtype=np.int64), self.alphas,
                                      drives, self.phase, q.shape[0])


class _IdentityDrives(Sequence):
    def __init__(self, n: int) -> None:
        self._n = n

    def __len__(self) -> int:
        return self._n

    def __getitem__(self, j):
        if isinstance(j, slice):
            return [None] * len(range(*j.indices(self._n)))
        if not -self._n <= j < self._n:
            raise IndexError(j)
        return None


def trotter_program(terms: TermSet, t: float, r: int, gamma: float = 1.0) -> TrotterProgram:
    """Program whose product times its recorded phase is the r-step product formula."""
    if r < 1:
        raise ValidationError("r must be at least 1")
    if len(terms) == 0:
        raise ValidationError("trotter_program needs a nonempty term list")
    prog = TrotterProgram(terms, gamma, t, r)
    if prog.step_alpha > 1.0 + 1e-15:
        raise ValidationError(f"fraction {prog.step_alpha:.4g} exceeds 1: increase r")
    if prog.step_alpha < 0:
        raise ValidationError("negative fractions are not supported")
    return prog


def gadget_circuit(q, alpha: float, literal_phase: bool = False) -> np.ndarray:
    """Control (x) system unitary R . P . controlled-Q . R for one fractional query.

    The zero-control block equals sqrt(q_alpha) e^{-i pi alpha/2} Q^alpha.
    """
    q = as_operator(q)
    if not is_involution(q):
        raise ValidationError("gadget oracle must satisfy Q @ Q = I")
    gp = GadgetParams(alpha)
    dim = q.shape[0]
    eye = np.eye(dim)
    rot = np.kron(gp.rotation(), eye)
    ctrl = np.block([[eye, np.zeros((dim, dim))], [np.zeros((dim, dim)), q]])
    ph = np.kron(gp.phase_gate(literal_phase), eye)
    return rot @ ph @ ctrl @ rot


def fudge_rotation(p: float) -> np.ndarray:
    angle = math.acos(1.0 / (2.0 * math.sqrt(p)))
    return np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])


@dataclass
class SegmentSpec:
    """One cost <= 1/5 run of gadgets plus the fudge rotation that pins the amplitude to 1/2."""

    program: FractionalQueryProgram
    alphas: np.ndarray
    p: float
    fudge_angle: float
    global_phase: float

    @property
    def m(self) -> int:
        return len(self.alphas)

    @property
    def drives(self) -> list:
        return [self.program.drive(j) for j in range(self.m + 1)]

    def fudge(self) -> np.ndarray:
        return fudge_rotation(self.p)

    def gadgets(self) -> list[GadgetParams]:
        return [GadgetParams(float(a)) for a in self.alphas]

    def target(self) -> np.ndarray:
        """e^{i theta} V: what the zero-label block must equal after amplification."""
        return np.exp(1j * self.global_phase) * self.program.product()


def segment_phase(alphas) -> float:
    return float(np.mod(-math.pi * np.sum(alphas) / 2.0, 2 * math.pi))


def success_probability(alphas) -> float:
    """prod_i q_{alpha_i}, evaluated in the log domain."""
    a = np.asarray(alphas, dtype=float)
    return float(np.exp(-np.sum(np.log1p(np.sin(np.pi * a)))))


def build_segment(program: FractionalQueryProgram) -> SegmentSpec:
    alphas = np.asarray(program.alphas, dtype=float)
    if np.any(alphas <= 0):
        raise ValidationError("segment fractions must be positive")
    cost = float(np.sum(alphas))
    if cost > MAX_SEGMENT_COST + 1e-12:
        raise ValidationError(f"segment cost {cost:.6g} exceeds 1/5")
    p = success_probability(alphas)
    if p <= 0.25:
        raise ValidationError(f"success probability {p} not above 1/4")
    return SegmentSpec(program, alphas, p, math.acos(1.0 / (2.0 * math.sqrt(p))), segment_phase(alphas))


def chernoff_mean(alphas) -> float:
    """mu = sum_i s_i / (c_i + s_i), the expected Hamming weight of the gadget controls."""
    a = np.asarray(alphas, dtype=float) * (math.pi / 2)
    s, c = np.sin(a), np.cos(a)
    return float(np.sum(s / (c + s)))


def chernoff_bound(mu: float, k: int) -> float:
    """e^{k - mu} mu^k / k^k (upper bound on the weight > k tail for k > mu)."""
    if mu <= 0:
        return 0.0
    return math.exp((k - mu) + k * math.log(mu) - k * math.log(k))


def truncation_order_for_mean(mu: float, eps: float) -> int:
    if not 0.0 < eps < 1.0:
        raise ValidationError(f"error target {eps} outside (0, 1)")
    if mu <= 0:
        return 1
    target = math.log(eps * eps / 2.0)
    k = 1
    while (k - mu) + k * math.log(mu) - k * math.log(k) >= target:
        k += 1
    return k


def truncation_order(alphas, eps: float) -> int:
    """Smallest k >= 1 with e^{k - mu} mu^k / k^k < eps^2 / 2."""
    return truncation_order_for_mean(chernoff_mean(alphas), eps)


def compositions(m: int, k: int) -> Iterator[tuple[int, ...]]:
    """Gap tuples (l_1..l_h), h <= k, sum(l) <= m - h, in (h, l_1, ..., l_h) lexicographic order."""
    for h in range(0, min(k, m) + 1):
        yield from _compositions_h(h, m - h)


def _compositions_h(h: int, budget: int) -> Iterator[tuple[int, ...]]:
    if h == 0:
        yield ()
        return
    for first in range(budget + 1):
        for rest in _compositions_h(h - 1, budget - first):
            yield (first,) + rest


def composition_positions(comp: Sequence[int]) -> list[int]:
    """0-based positions of the ones in the string encoded by ``comp``."""
    pos, at = [], 0
    for gap in comp:
        at += gap
        pos.append(at)
        at += 1
    return pos


def composition_count(m: int, k: int) -> int:
    return sum(math.comb(m, h) for h in range(0, min(k, m) + 1))


def tail_probability(alphas, k: int) -> float:
    """P(weight > k) for independent controls with one-probabilities s/(c+s)."""
    a = np.asarray(alphas, dtype=float)
    m = len(a)
    if k >= m:
        return 0.0
    probs = np.sin(a * math.pi / 2) / (np.sin(a * math.pi / 2) + np.cos(a * math.pi / 2))
    if m and np.all(probs == probs[0]):
        return float(binom.sf(k, m, probs[0]))
    # distribution over weights 0..k plus one overflow bin for > k
    dist = np.zeros(k + 2)
    dist[0] = 1.0
    for pr in probs:
        shifted = np.zeros_like(dist)
        shifted[1:] = dist[:-1] * pr
        shifted[-1] += dist[-1] * pr
        dist = dist * (1 - pr) + shifted
    return float(dist[-1])


@dataclass
class EncodedAncilla:
    """Truncated gadget-control superposition in the composition basis.

    The full state is the product of R_alpha|0> over the m controls; keeping
    only strings of weight <= k leaves norm^2 = 1 - deficit.  ``amplitudes``
    are the renormalised ones, indexed like ``basis``.
    """

    m: int
    k: int
    alphas: np.ndarray
    basis: list[tuple[int, ...]]
    raw: np.ndarray
    deficit: float

    @property
    def amplitudes(self) -> np.ndarray:
        return self.raw / math.sqrt(1.0 - self.deficit)

    @property
    def weights(self) -> np.ndarray:
        return np.array([len(c) for c in self.basis])

    def index(self) -> dict[tuple[int, ...], int]:
        return {c: i for i, c in enumerate(self.basis)}

    def bitstring(self, j: int) -> np.ndarray:
        x = np.zeros(self.m, dtype=np.int8)
        x[composition_positions(self.basis[j])] = 1
        return x

    def mean(self) -> float:
        return chernoff_mean(self.alphas)

    def chernoff(self) -> float:
        return chernoff_bound(self.mean(), self.k)


def encoded_ancilla(alphas, k: int, limit: int = ENCODED_LIMIT) -> EncodedAncilla:
    """Closed-form amplitudes prod kappa_i^{1 - x_i} sigma_i^{x_i} over weight <= k strings."""
    a = np.asarray(alphas, dtype=float)
    m = len(a)
    if k < 1:
        raise ValidationError("truncation order must be at least 1")
    size = composition_count(m, k)
    if size > limit:
        raise ValidationError(f"encoded ancilla has {size} basis states, over the limit {limit}")
    s = np.sin(a * math.pi / 2)
    c = np.cos(a * math.pi / 2)
    log_kappa = 0.5 * (np.log(c) - np.log(c + s))
    with np.errstate(divide="ignore"):
        log_sigma = 0.5 * (np.log(s) - np.log(c + s))
    basis = list(compositions(m, k))
    base = float(np.sum(log_kappa))
    raw = np.empty(len(basis))
    for j, comp in enumerate(basis):
        pos = composition_positions(comp)
        raw[j] = math.exp(base + float(np.sum(log_sigma[pos] - log_kappa[pos])))
    return EncodedAncilla(m, k, a, basis, raw, tail_probability(a, k))


@dataclass
class ApproxSegment:
    """A truncated segment: its circuit, the ancilla encoding, and the query budget."""

    circuit: object
    ancilla: EncodedAncilla
    queries: int

    def dense(self) -> np.ndarray:
        from .engine import materialize
        return materialize(self.circuit)


def approx_segment(spec: SegmentSpec, k: int) -> ApproxSegment:
    """Compile ``spec`` with the ancilla register truncated to Hamming weight k.

    The circuit acts on fudge qubit (x) encoded ancilla (x) index (x) system
    and makes exactly k oracle calls, independent of the gadget count.
    """
    if k < 1:
        raise ValidationError("truncation order must be at least 1")
    from .engine import encoded_segment_circuit
    circuit, ancilla = encoded_segment_circuit(spec, k)
    return ApproxSegment(circuit, ancilla, circuit.queries)
