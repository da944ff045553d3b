"""Acceptance criteria, one test and one PASS/FAIL line each.

Tolerances are pinned to the published acceptance thresholds; nothing here is
loosened to make a criterion pass.  Run directly with
``python tests/test_acceptance.py`` to get just the verdict lines.
"""
import itertools
import math
import time

import numpy as np
import pytest

from hamsim.decompose import bipartite_double, color_edge, decompose_full, slice_query
from hamsim.demos import (bessel_convergence_gap, bessel_j, bessel_overlap, parity, parity_decode,
                          parity_overlap, parity_overlap_closed_form)
from hamsim.engine import materialize, qubit_label_wires, qubit_segment_circuit, truncation_distance, zero_label_block
from hamsim.fracquery import (FractionalQueryProgram, build_segment, chernoff_bound, chernoff_mean,
                              gadget_circuit, GadgetParams)
from hamsim.hamiltonian import dense_of, load_coo, random_sparse, stats
from hamsim.linalg import (fractional_power, make_rng, max_norm, random_involution, random_state,
                           random_unitary)
from hamsim.oaa import OAAConfig, amplify, promise_unitary, verify_subspace, zero_block
from hamsim.pipeline import plan, simulate_sparse

from conftest import ACCEPTANCE_LINES

SEED = 20240601


def report(tag: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {tag}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _program(rng, m, cost, dim=2):
    alphas = rng.random(m) + 0.05
    alphas *= cost / alphas.sum()
    return FractionalQueryProgram([random_involution(dim, rng) for _ in range(m)], np.arange(m), alphas,
                                  [random_unitary(dim, rng) for _ in range(m + 1)])


def _segment_unitary(spec):
    circ = qubit_segment_circuit(spec)
    u = materialize(circ)
    return u, zero_label_block(u, circ.layout, qubit_label_wires(spec.m)), 1 << (spec.m + 1)


def test_c1_gadget_identity():
    rng = make_rng(SEED)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        dim = int(rng.choice([2, 4, 8]))
        q, alpha = random_involution(dim, rng), float(rng.random())
        want = math.sqrt(GadgetParams(alpha).q) * np.exp(-1j * math.pi * alpha / 2) * fractional_power(q, alpha)
        worst = max(worst, float(np.max(np.abs(gadget_circuit(q, alpha)[:dim, :dim] - want))))
    elapsed = time.perf_counter() - start
    report("c1 gadget identity", worst <= 1e-12 and elapsed < 5.0,
           f"max deviation {worst:.2e} (<= 1e-12) over 50 gadgets in {elapsed:.2f}s (< 5s)")


def test_c2_segment_amplitude():
    rng = make_rng(SEED + 2)
    amp_dev = phase_dev = 0.0
    for _ in range(20):
        prog = _program(rng, int(rng.integers(1, 6)), float(rng.uniform(0.01, 0.2)))
        spec = build_segment(prog)
        _, blk, _ = _segment_unitary(spec)
        for _ in range(20):
            amp_dev = max(amp_dev, abs(np.linalg.norm(blk @ random_state(2, rng)) - 0.5))
        measured = np.angle(np.trace(prog.product().conj().T @ blk)) % (2 * math.pi)
        expected = (-math.pi * float(np.sum(prog.alphas)) / 2) % (2 * math.pi)
        gap = abs(measured - expected)
        phase_dev = max(phase_dev, min(gap, 2 * math.pi - gap))
    report("c2 segment amplitude", amp_dev <= 1e-12 and phase_dev <= 1e-10,
           f"|amplitude - 0.5| {amp_dev:.2e} (<= 1e-12), phase deviation {phase_dev:.2e} (<= 1e-10)")


def test_c3_amplitude_amplification():
    rng = make_rng(SEED + 3)
    step_dev = sub_dev = 0.0
    for _ in range(5):
        spec = build_segment(_program(rng, 3, 0.2))
        u, _, ld = _segment_unitary(spec)
        sub_dev = max(sub_dev, verify_subspace(u, label_dim=ld)[1])
        blk = zero_block(amplify(u, 1, label_dim=ld), label_dim=ld)
        step_dev = max(step_dev, float(np.linalg.norm(blk - spec.target(), 2)))
    law_dev = 0.0
    for theta in (math.pi / 6, math.pi / 10, 0.3):
        v = random_unitary(2, rng)
        w = promise_unitary(v, theta, 4, rng)
        for ell in range(5):
            blk = zero_block(amplify(w, ell, label_dim=4), label_dim=4)
            law_dev = max(law_dev, float(np.max(np.abs(blk - OAAConfig(4, theta, ell).predicted_amplitude * v))))
    ok = step_dev <= 1e-10 and law_dev <= 1e-10 and sub_dev <= 1e-12
    report("c3 amplitude amplification", ok,
           f"one-step {step_dev:.2e} (<= 1e-10), law {law_dev:.2e} (<= 1e-10), subspace {sub_dev:.2e} (<= 1e-12)")


def test_c4_truncation():
    rng = make_rng(SEED + 4)
    m = 10
    prog = FractionalQueryProgram([random_involution(2, rng) for _ in range(m)], np.arange(m),
                                  np.full(m, 1 / 50), [random_unitary(2, rng) for _ in range(m + 1)])
    spec = build_segment(prog)
    mu = chernoff_mean(spec.alphas)
    start = time.perf_counter()
    dist = {k: truncation_distance(spec, k) for k in range(2, 9)}
    elapsed = time.perf_counter() - start
    under = all(dist[k] <= math.sqrt(2 * chernoff_bound(mu, k)) for k in dist)
    ratios = {k: dist[k - 1] / dist[k] for k in range(4, 9)}
    steep = all(r >= 10 for r in ratios.values())
    detail = (f"below bound {under}, ratios beyond k=3 "
              + ", ".join(f"{r:.2f}" for r in ratios.values()) + f" (each >= 10), {elapsed:.2f}s (< 30s)")
    report("c4 truncation", under and steep and elapsed < 30.0, detail)


def test_c5_decomposition():
    rng = make_rng(SEED + 5)
    colors_ok = charges_ok = True
    term_dev = 0.0
    bound_ok = True
    gamma = 0.1
    for _ in range(25):
        n = int(rng.integers(1, 5))
        d = int(rng.integers(1, min(4, 1 << n) + 1))
        h = random_sparse(n, d, int(rng.integers(0, 1 << 30)))
        dd = max(stats(h).d, 1)
        hb = bipartite_double(h)
        m = dense_of(hb)
        half = hb.dim // 2
        for u in range(hb.dim):
            nbrs = np.flatnonzero(m[u])
            cols = [color_edge(hb, u, int(v)) if u < half else color_edge(hb, int(v), u) for v in nbrs]
            colors_ok &= len(set(cols)) == len(cols)
        for color in itertools.product(range(1, dd + 1), repeat=2):
            for j in range(hb.dim):
                before = hb.meter.count
                slice_query(hb, color, j)
                charges_ok &= hb.meter.count - before == 2
        terms = decompose_full(h, gamma)
        for term in terms:
            g = term.dense()
            term_dev = max(term_dev, float(np.max(np.abs(g - g.conj().T))),
                           float(np.max(np.abs(g @ g - np.eye(g.shape[0])))))
        bound_ok &= max_norm(m - terms.weighted_sum(gamma)) <= math.sqrt(2) * gamma * dd * dd
    ok = colors_ok and charges_ok and term_dev <= 1e-12 and bound_ok
    report("c5 decomposition", ok,
           f"proper coloring {colors_ok}, term deviation {term_dev:.2e} (<= 1e-12), "
           f"max-norm bound {bound_ok}, two scans per slice query {charges_ok}")


@pytest.mark.parametrize("label,source,eps", [
    ("1-qubit 0.9X", "1 1\n0 1 0.9 0.0\n", 1e-3),
    ("3-qubit 2-sparse", None, 1e-2),
])
def test_c6_end_to_end(label, source, eps):
    h = load_coo(source) if source else random_sparse(3, 2, 7)
    start = time.perf_counter()
    _, rep = simulate_sparse(h, 1.0, eps)
    elapsed = time.perf_counter() - start
    pl = rep.details["plan"]
    expected = pl["segments"] * 3 * pl["k"]
    ok = rep.spectral_error <= eps and rep.discrete_queries == expected and elapsed < 60.0
    report(f"c6 end-to-end {label}", ok,
           f"error {rep.spectral_error:.2e} (<= {eps:g}), queries {rep.discrete_queries} "
           f"(= {pl['segments']}*3*{pl['k']} = {expected}), {elapsed:.2f}s (< 60s)")


def test_c7_epsilon_scaling():
    values = []
    for j in range(2, 11):
        k = plan(1, 0.9, 1.0, 10.0 ** -j).k
        values.append(k * math.log(k) / math.log(10.0 ** j))
    ok = all(0.2 <= v <= 5 for v in values)
    report("c7 epsilon scaling", ok,
           "k log k / log(1/eps) = " + ", ".join(f"{v:.2f}" for v in values) + " (within [0.2, 5])")


def test_c8_parity_demo():
    overlap_dev = 0.0
    for N in range(1, 9):
        for t in (0.5, 1.0, math.pi * N / 2):
            overlap_dev = max(overlap_dev, abs(parity_overlap(N, t) - parity_overlap_closed_form(N, t)))
    wrong = 0.0
    broken = True
    for x in itertools.product((0, 1), repeat=3):
        wrong = max(wrong, parity_decode(x, 1.0).wrong_clean)
        injected = parity_decode(x, 1.0, eps_sim=2 * parity_overlap_closed_form(3, 1.0))
        broken &= injected.parity != parity(x)
    ok = overlap_dev <= 1e-10 and wrong <= 1e-12 and broken
    report("c8 parity demo", ok,
           f"overlap deviation {overlap_dev:.2e} (<= 1e-10), wrong sector {wrong:.2e} (<= 1e-12), "
           f"injected error breaks decoding {broken}")


def test_c9_bessel_walk():
    rng = make_rng(SEED + 9)
    dev = gap = 0.0
    for N in range(1, 4):
        x = [int(b) for b in rng.integers(0, 2, N)]
        for t in (0.25, 0.5, 1.0, 1.5, 2.0):
            dev = max(dev, abs(bessel_overlap(N, t, 40, x) - abs(bessel_j(2 * N, t))))
            gap = max(gap, bessel_convergence_gap(N, t, 40))
    report("c9 bessel walk", dev <= 1e-8 and gap <= 1e-10,
           f"overlap deviation {dev:.2e} (<= 1e-8), W doubling shift {gap:.2e} (<= 1e-10)")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
