"""End-to-end sparse Hamiltonian simulation with measured errors.

Planning follows the standard parameter choices: rounding scale
gamma = eps_dec / (sqrt(2) d^3 t), a first-order product formula over the
signed-permutation terms, segments of cost at most 1/5, and a Chernoff
truncation order per segment.  Execution builds each segment's zero-label
block with the weight-truncated gadget chain, amplifies it with one
oblivious amplification step, multiplies the segments together, and
compares against the dense exponential of sigma_x (x) H.
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .decompose import TermSet, bipartite_double, decompose_full, term_count_bound
from .engine import SimReport, amplified_block, gadget_weights
from .fracquery import (chernoff_bound, success_probability, tail_probability,
                        truncation_order_for_mean)
from .hamiltonian import HamiltonianStats, QueryMeter, SparseHamiltonianOracle, dense_of, stats
from .linalg import ValidationError, exact_expm, isometry_distance, spectral_distance

DEFAULT_SPLIT = (1 / 3, 1 / 3, 1 / 3)
MAX_STEPS = 8_000_000
MAX_SYSTEM_DIM = 64
SEGMENT_RULES = ("segments", "ceil_T", "five_T")


@dataclass
class SimulationPlan:
    d: int
    max_norm: float
    t: float
    epsilon: float
    eps_dec: float
    eps_trot: float
    eps_seg: float
    gamma: float
    eta: int
    eta_is_bound: bool
    h_bar: float
    r_formula: int
    r: int
    tau: float
    step_alpha: float
    steps: int
    total_cost: float
    segments: int
    steps_per_segment: int
    per_use_error: float
    mu: float
    k: int
    predicted_queries: int
    phase_target: float
    segment_error_rule: str
    executable: bool
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _segment_count(steps: int, alpha: float) -> int:
    """Fewest contiguous pieces of cost <= 1/5, never fewer than ceil(5T)."""
    if steps == 0 or alpha == 0:
        return 1
    per = int(math.floor((1.0 / (5.0 * alpha)) * (1 + 1e-12)))
    if per < 1:
        raise ValidationError(f"a single step of cost {alpha:.4g} exceeds 1/5")
    total = steps * alpha
    return max(1, math.ceil(5.0 * total - 1e-9), math.ceil(steps / per))


def segment_bounds(steps: int, segments: int) -> list[tuple[int, int]]:
    base, extra = divmod(steps, segments)
    out, at = [], 0
    for s in range(segments):
        n = base + (1 if s < extra else 0)
        out.append((at, n))
        at += n
    return out


def _per_use_error(eps_seg: float, segments: int, total_cost: float, rule: str) -> float:
    if rule == "segments":
        pieces = segments
    elif rule == "ceil_T":
        pieces = 2 * max(1, math.ceil(total_cost))
    elif rule == "five_T":
        pieces = max(1.0, 5.0 * total_cost)
    else:
        raise ValidationError(f"unknown segment error rule {rule!r}; choose from {SEGMENT_RULES}")
    return eps_seg / (3.0 * pieces)


def _assemble(d, max_norm, t, eps, split, gamma, eta, eta_is_bound, r_formula, r, rule,
              max_steps, note="") -> SimulationPlan:
    eps_dec, eps_trot, eps_seg = (eps * f for f in split)
    alpha = 2.0 * gamma * t / (math.pi * r) if eta else 0.0
    steps = eta * r if eta else 0
    total = steps * alpha
    segments = _segment_count(steps, alpha)
    per_seg = -(-steps // segments) if steps else 0
    w = math.sin(math.pi * alpha / 2) / (math.sin(math.pi * alpha / 2) + math.cos(math.pi * alpha / 2))
    mu = per_seg * w
    per_use = _per_use_error(eps_seg, segments, total, rule)
    k = truncation_order_for_mean(mu, min(per_use, 0.999))
    executable = steps <= max_steps
    if not executable and not note:
        note = f"not executable, formula-only: {steps} query steps exceed the limit {max_steps}"
    return SimulationPlan(
        d=d, max_norm=max_norm, t=t, epsilon=eps, eps_dec=eps_dec, eps_trot=eps_trot, eps_seg=eps_seg,
        gamma=gamma, eta=eta, eta_is_bound=eta_is_bound, h_bar=gamma, r_formula=r_formula, r=r,
        tau=d * d * max_norm * t, step_alpha=alpha, steps=steps, total_cost=total, segments=segments,
        steps_per_segment=per_seg, per_use_error=per_use, mu=mu, k=k,
        predicted_queries=segments * 3 * k, phase_target=float(np.mod(-2.0 * gamma * eta * t, 2 * math.pi)),
        segment_error_rule=rule, executable=executable, note=note)


def choose_gamma(d: int, t: float, eps_dec: float) -> float:
    return eps_dec / (math.sqrt(2.0) * max(d, 1) ** 3 * t)


def formula_r(eta: int, gamma: float, t: float, eps_trot: float, constant: float = 1.0) -> int:
    """ceil(c (eta h t)^2 / eps_trot) with h = gamma, the norm of each scaled term."""
    r_min = max(1, math.ceil(10.0 * gamma * t / math.pi))
    return max(r_min, math.ceil(constant * (eta * gamma * t) ** 2 / eps_trot))


def plan(d: int, max_norm: float, t: float, eps: float, split: Sequence[float] = DEFAULT_SPLIT,
         segment_error_rule: str = "segments", r_constant: float = 1.0,
         max_steps: int = MAX_STEPS, eta: Optional[int] = None) -> SimulationPlan:
    """Formula-level plan.  Without ``eta`` the term-count bound 6 d^2 ceil(hmax/gamma) is used."""
    if not 0.0 < eps < 1.0:
        raise ValidationError(f"epsilon must lie in (0, 1), got {eps}")
    if t <= 0:
        raise ValidationError("simulation time must be positive")
    if d < 0 or max_norm < 0:
        raise ValidationError("sparsity and max-norm must be nonnegative")
    split = tuple(float(f) for f in split)
    if len(split) != 3 or any(f <= 0 for f in split) or abs(sum(split) - 1.0) > 1e-9:
        raise ValidationError("epsilon split must be three positive fractions summing to 1")
    gamma = choose_gamma(d, t, eps * split[0])
    bound = eta is None
    if bound:
        eta = term_count_bound(HamiltonianStats(max_norm, d, 0), gamma)
    r_f = formula_r(eta, gamma, t, eps * split[1], r_constant) if eta else 1
    return _assemble(d, max_norm, t, eps, split, gamma, eta, bound, r_f, r_f,
                     segment_error_rule, max_steps)


def trotter_operator(terms: TermSet, gamma: float, t: float, r: int, kernel=None) -> np.ndarray:
    """prod over r rounds of prod_j exp(-i gamma G_j t / r), term by term.

    Uses exp(-i x G) = cos(x) I - i sin(x) G for G^2 = I.
    """
    rot = kernel or kernels.rotation_chain
    dim = terms.dim
    step = np.eye(dim, dtype=complex)
    if len(terms) == 0:
        return step
    x = gamma * t / r
    tab = terms.tables()
    rot(step, tab["perm"], tab["level"], tab["phase"], tab["fill"], tab["levels"],
        0, 1, 1, len(terms), math.cos(x), math.sin(x))
    return np.linalg.matrix_power(step, r)


def segment_program_product(terms: TermSet, tables: dict, start: int, nsteps: int, gamma: float,
                            t: float, r: int, kernel=None) -> np.ndarray:
    """Program product prod Q^alpha over one segment's steps (exact, no truncation)."""
    rot = kernel or kernels.rotation_chain
    out = np.eye(terms.dim, dtype=complex)
    if nsteps == 0:
        return out
    x = gamma * t / r
    cls, lvl, sign = terms.locate(start % len(terms))
    rot(out, tables["perm"], tables["level"], tables["phase"], tables["fill"], tables["levels"],
        cls, lvl, sign, nsteps, math.cos(x), math.sin(x))
    # e^{-i x G} = e^{i x} Q^alpha, so divide out the c-number
    return np.exp(-1j * x * nsteps) * out


def choose_r(terms: TermSet, gamma: float, t: float, eps_trot: float, exact: np.ndarray,
             r_min: int, r_cap: int) -> tuple[int, float]:
    """Smallest verified r (by a 1/r fit and upward search) with measured error <= eps_trot."""
    def err(r):
        return spectral_distance(trotter_operator(terms, gamma, t, r), exact)

    e = err(r_min)
    if e <= eps_trot:
        return r_min, e
    probe = max(r_min, 8)
    e_probe = err(probe)
    r = max(r_min, math.ceil(1.02 * e_probe * probe / eps_trot))
    e = err(r)
    while e > eps_trot:
        if r >= r_cap:
            raise ValidationError(f"no executable r reaches Trotter error {eps_trot:.3g}")
        r = min(r_cap, math.ceil(1.15 * r))
        e = err(r)
    # walk back down while still within budget
    while r > r_min:
        lower = math.floor(r / 1.05)
        e_low = err(lower)
        if e_low > eps_trot or lower == r:
            break
        r, e = lower, e_low
    return r, e


@dataclass
class SimulationOutput:
    raw: np.ndarray
    global_phase: complex
    target: np.ndarray
    n: int

    @property
    def corrected(self) -> np.ndarray:
        return np.conj(self.global_phase) * self.raw

    def plus_sector(self) -> np.ndarray:
        """(<+| (x) I) corrected (|+> (x) I): the evolution of H itself."""
        half = 1 << self.n
        u = self.corrected
        return 0.5 * (u[:half, :half] + u[:half, half:] + u[half:, :half] + u[half:, half:])

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self.corrected @ psi


def simulate_sparse(h: SparseHamiltonianOracle, t: float, eps: float,
                    split: Sequence[float] = DEFAULT_SPLIT, segment_error_rule: str = "segments",
                    r_constant: float = 1.0, max_steps: int = MAX_STEPS, r: Optional[int] = None,
                    kernel_backend: Optional[str] = None, measure_budget: bool = True,
                    meter: Optional[QueryMeter] = None) -> tuple[SimulationOutput, SimReport]:
    """Run the full compilation chain and measure it against the dense exponential.

    ``r`` forces the number of product-formula rounds (for ablations).
    """
    t0 = time.perf_counter()
    if h.dim * 2 > MAX_SYSTEM_DIM:
        raise ValidationError(f"doubled dimension {2 * h.dim} exceeds the executor limit {MAX_SYSTEM_DIM}")
    if t <= 0:
        raise ValidationError("simulation time must be positive")
    if not 0.0 < eps < 1.0:
        raise ValidationError(f"epsilon must lie in (0, 1), got {eps}")
    chain, rot = (kernels.chain_accumulate, kernels.rotation_chain) if kernel_backend is None \
        else kernels.backend(kernel_backend)
    meter = meter or QueryMeter()
    st = stats(h)
    split = tuple(float(f) for f in split)
    eps_dec, eps_trot, _ = (eps * f for f in split)
    gamma = choose_gamma(st.d, t, eps_dec)
    oracle_before = h.meter.count
    terms = decompose_full(h, gamma)
    oracle_queries = h.meter.count - oracle_before
    eta = len(terms)
    hb = bipartite_double(h)
    exact = exact_expm(dense_of(hb), t)
    approx_h = terms.weighted_sum(gamma)
    rounded = exact_expm(approx_h, t)

    r_f = formula_r(eta, gamma, t, eps_trot, r_constant) if eta else 1
    note = ""
    if r is not None:
        r_exec = int(r)
        trot_err = spectral_distance(trotter_operator(terms, gamma, t, r_exec, rot), rounded) if eta else 0.0
        note = "r fixed by caller"
    elif eta == 0:
        r_exec, trot_err = 1, 0.0
    elif eta * r_f <= max_steps:
        r_exec = r_f
        trot_err = spectral_distance(trotter_operator(terms, gamma, t, r_exec, rot), rounded)
    else:
        r_min = max(1, math.ceil(10.0 * gamma * t / math.pi))
        r_exec, trot_err = choose_r(terms, gamma, t, eps_trot, rounded, r_min, max(r_min, max_steps // eta))
        note = f"reduced r: formula r = {r_f} needs {eta * r_f} steps; executed r = {r_exec} (measured)"
    pl = _assemble(st.d, st.max_norm, t, eps, split, gamma, eta, False, r_f, r_exec,
                   segment_error_rule, max_steps, note)
    if pl.steps > max_steps:
        raise ValidationError(pl.note or "plan not executable")

    tables = terms.tables()
    dim = hb.dim
    total = np.eye(dim, dtype=complex)
    theta_sum = 0.0
    seg_errors, deficits = [], []
    k = pl.k
    alpha = pl.step_alpha
    for start, n in segment_bounds(pl.steps, pl.segments):
        coeff = np.zeros((k + 1, dim, dim), dtype=complex)
        coeff[0] = np.eye(dim)
        if n:
            cls, lvl, sign = terms.locate(start % eta)
            w0, w1 = gadget_weights(alpha)
            chain(coeff, tables["perm"], tables["level"], tables["phase"], tables["fill"], tables["levels"],
                  cls, lvl, sign, n, complex(w0), complex(w1), -1.0 + 0j, 0)
        alphas = np.full(n, alpha)
        p = success_probability(alphas)
        delta2 = tail_probability(alphas, k)
        theta = -math.pi * n * alpha / 2.0
        block = np.exp(-1j * math.pi * n * alpha) / (2.0 * math.sqrt(p) * (1.0 - delta2)) * coeff.sum(axis=0)
        amplified = amplified_block(block)
        meter.charge(3 * k)
        total = amplified @ total
        theta_sum += theta
        deficits.append(delta2)
        if measure_budget:
            ideal = np.exp(1j * theta) * segment_program_product(terms, tables, start, n, gamma, t, r_exec, rot)
            seg_errors.append(isometry_distance(amplified, ideal))

    prog_phase = np.exp(1j * gamma * eta * t)
    global_phase = complex(np.exp(1j * theta_sum) * np.conj(prog_phase))
    out = SimulationOutput(total, global_phase, exact, h.n)
    corrected = out.corrected
    spec_err = spectral_distance(corrected, exact)
    iso_err = isometry_distance(corrected, exact)
    plus_err = spectral_distance(out.plus_sector(), exact_expm(dense_of(h), t))
    dec_err = spectral_distance(rounded, exact)
    details = {
        "plan": pl.to_dict(),
        "backend": "python" if chain is kernels.backend("python")[0] else "compiled",
        "oracle_queries_decomposition": oracle_queries,
        "decomposition_error": dec_err,
        "trotter_error": trot_err,
        "segment_errors_max": max(seg_errors) if seg_errors else None,
        "segment_errors_sum": float(sum(seg_errors)) if seg_errors else None,
        "truncation_deficit_max": max(deficits) if deficits else 0.0,
        "truncation_chernoff_bound": chernoff_bound(pl.mu, k),
        "block_error": spec_err,
    }
    report = SimReport(
        discrete_queries=meter.count, predicted_queries=pl.predicted_queries,
        spectral_error=spec_err, global_phase=global_phase,
        wall_time=time.perf_counter() - t0, isometry_error=iso_err,
        plus_sector_error=plus_err, details=details)
    return out, report


SWEEP_COLUMNS = ("epsilon", "k", "segments", "queries_predicted", "queries_measured",
                 "error_measured", "seconds")


def sweep(h: SparseHamiltonianOracle, t: float, eps_list: Sequence[float], **kwargs) -> list[dict]:
    rows = []
    for eps in eps_list:
        _, rep = simulate_sparse(h, t, eps, **kwargs)
        pl = rep.details["plan"]
        rows.append({
            "epsilon": eps, "k": pl["k"], "segments": pl["segments"],
            "queries_predicted": rep.predicted_queries, "queries_measured": rep.discrete_queries,
            "error_measured": max(rep.spectral_error, rep.isometry_error),
            "seconds": rep.wall_time,
        })
    return rows


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str] = SWEEP_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({c: row[c] for c in columns})
    return buf.getvalue()
