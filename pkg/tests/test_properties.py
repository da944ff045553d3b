"""Randomized invariants checked with hypothesis."""
import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from hamsim.decompose import bipartite_double, decompose_full, term_count_bound
from hamsim.fracquery import (GadgetParams, chernoff_bound, composition_count, compositions, gadget_circuit,
                              tail_probability)
from hamsim.hamiltonian import dense_of, load_coo, random_sparse, save_coo, stats
from hamsim.linalg import (TOL_COMPOSE, TOL_STRUCT, exact_expm, fractional_power, make_rng, max_norm,
                           random_involution, random_unitary)
from hamsim.oaa import OAAConfig, amplify, promise_unitary, zero_block

seeds = st.integers(min_value=0, max_value=2**32 - 1)
fractions = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
settings.register_profile("hamsim", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("hamsim")


@given(seeds, fractions, fractions)
def test_fractional_powers_add(seed, a, b):
    a, b = a / 2, b / 2
    q = random_involution(4, make_rng(seed))
    lhs = fractional_power(q, a) @ fractional_power(q, b)
    assert np.max(np.abs(lhs - fractional_power(q, a + b))) <= TOL_STRUCT


@given(seeds, fractions, st.sampled_from([2, 4, 8]))
def test_gadget_zero_block(seed, alpha, dim):
    q = random_involution(dim, make_rng(seed))
    want = math.sqrt(GadgetParams(alpha).q) * np.exp(-1j * math.pi * alpha / 2) * fractional_power(q, alpha)
    assert np.max(np.abs(gadget_circuit(q, alpha)[:dim, :dim] - want)) <= TOL_STRUCT


@given(seeds, st.floats(-3, 3), st.floats(-3, 3))
def test_exponential_group_law(seed, s, t):
    rng = make_rng(seed)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    h = (a + a.conj().T) / 2
    lhs = exact_expm(h, s) @ exact_expm(h, t)
    assert np.max(np.abs(lhs - exact_expm(h, s + t))) <= TOL_COMPOSE


@given(st.integers(1, 3), st.integers(1, 3), seeds, st.sampled_from([0.5, 0.2, 0.05]))
def test_decomposition_within_rounding_bound(n, d, seed, gamma):
    d = min(d, 1 << n)
    h = random_sparse(n, d, seed % 10_000)
    terms = decompose_full(h, gamma)
    err = max_norm(dense_of(bipartite_double(h)) - terms.weighted_sum(gamma))
    dd = stats(h).d
    assert err <= math.sqrt(2) * gamma * dd * dd + 1e-12
    assert len(terms) <= term_count_bound(stats(h), gamma)


@given(st.integers(0, 9), st.integers(0, 9))
def test_composition_enumeration_count(m, k):
    items = list(compositions(m, k))
    assert len(items) == len(set(items)) == composition_count(m, k)
    assert all(len(c) <= k and sum(c) + len(c) <= m for c in items)


@given(st.lists(st.floats(0.001, 0.2), min_size=1, max_size=30), st.integers(1, 12))
def test_tail_below_chernoff(alphas, k):
    a = np.asarray(alphas) * (math.pi / 2)
    mu = float(np.sum(np.sin(a) / (np.sin(a) + np.cos(a))))
    if k > mu:
        assert tail_probability(alphas, k) <= chernoff_bound(mu, k) * (1 + 1e-12)


@given(seeds, st.floats(0.05, math.pi / 2 - 0.05), st.integers(0, 4))
def test_amplification_law(seed, theta, ell):
    rng = make_rng(seed)
    v = random_unitary(2, rng)
    u = promise_unitary(v, theta, 4, rng)
    blk = zero_block(amplify(u, ell, label_dim=4), label_dim=4)
    assert np.max(np.abs(blk - OAAConfig(4, theta, ell).predicted_amplitude * v)) <= TOL_COMPOSE


@given(st.integers(1, 4), st.integers(1, 4), seeds)
def test_coo_round_trip(n, d, seed):
    h = random_sparse(n, min(d, 1 << n), seed % 10_000)
    again = load_coo(save_coo(h))
    assert np.array_equal(dense_of(again), dense_of(h))
    # once parsed, the header carries the measured occupancy and the text is a fixed point
    text = save_coo(again)
    assert save_coo(load_coo(text)) == text
