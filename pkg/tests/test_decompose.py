import itertools
import math

import numpy as np
import pytest

from hamsim.decompose import (bipartite_double, color_edge, colored_slices, decompose_full,
                              local_coloring, slice_query, split_one_sparse, term_count_bound)
from hamsim.hamiltonian import SparseHamiltonianOracle, dense_of, load_coo, random_sparse, stats
from hamsim.linalg import TOL_STRUCT, ValidationError, exact_expm, max_norm, random_state

from conftest import X


def k22():
    """Doubled all-ones 2x2 matrix: the complete bipartite graph K_{2,2} on {0,1} | {2,3}."""
    return bipartite_double(SparseHamiltonianOracle.from_dense(np.ones((2, 2))))


class TestBipartiteDouble:
    def test_zero(self):
        assert np.all(dense_of(bipartite_double(load_coo("1 0\n"))) == 0)

    def test_diagonal_blocks(self):
        h = SparseHamiltonianOracle.from_dense(np.diag([1.0, 2.0]))
        assert np.array_equal(dense_of(bipartite_double(h)), np.kron(X, np.diag([1.0, 2.0])))

    def test_plus_sector(self, rng):
        h = random_sparse(2, 2, 5)
        hd, hb = dense_of(h), dense_of(bipartite_double(h))
        psi = random_state(4, rng)
        plus = np.array([1.0, 1.0]) / math.sqrt(2)
        lhs = exact_expm(hb, 0.8) @ np.kron(plus, psi)
        assert np.max(np.abs(lhs - np.kron(plus, exact_expm(hd, 0.8) @ psi))) <= TOL_STRUCT

    def test_same_sparsity_and_norm(self):
        h = random_sparse(2, 3, 1)
        hb = bipartite_double(h)
        assert hb.d == h.d and stats(hb).max_norm == stats(h).max_norm


class TestColorEdge:
    def test_k22(self):
        hb = k22()
        assert color_edge(hb, 0, 2) == (1, 1)
        assert color_edge(hb, 1, 3) == (2, 2)

    def test_matching(self):
        hb = bipartite_double(load_coo("2 1\n0 3 1 0\n1 2 0.5 0\n"))
        for u in range(4):
            for v in range(4, 8):
                if dense_of(hb)[u, v] != 0:
                    assert color_edge(hb, u, v) == (1, 1)

    def test_not_an_edge(self):
        hb = bipartite_double(load_coo("1 1\n0 0 1 0\n"))
        with pytest.raises(ValidationError):
            color_edge(hb, 0, 3)

    def test_proper_coloring_exhaustive(self):
        for seed in range(10):
            hb = bipartite_double(random_sparse(3, 3, seed))
            m = dense_of(hb)
            half = hb.dim // 2
            for u in range(hb.dim):
                nbrs = np.flatnonzero(m[u])
                if u < half:
                    colors = [color_edge(hb, u, v) for v in nbrs]
                else:
                    colors = [color_edge(hb, v, u) for v in nbrs]
                assert len(set(colors)) == len(colors)


class TestSliceQuery:
    def test_k22_examples(self):
        hb = k22()
        assert slice_query(hb, (1, 1), 0) == (2, 1)
        assert slice_query(hb, (1, 2), 0) is None

    def test_union_is_doubled_matrix(self):
        hb = k22()
        total = sum(sl.dense() for sl in colored_slices(hb))
        assert np.array_equal(total, dense_of(hb))

    def test_charges_exactly_two(self):
        hb = bipartite_double(random_sparse(3, 3, 2))
        for color in itertools.product(range(1, 4), repeat=2):
            for j in range(hb.dim):
                before = hb.meter.count
                slice_query(hb, color, j)
                assert hb.meter.count - before == 2

    def test_matches_brute_force_slice(self):
        for seed in range(5):
            hb = bipartite_double(random_sparse(2, 3, seed))
            m = dense_of(hb)
            half = hb.dim // 2
            brute = {}
            for u in range(half):
                for v in np.flatnonzero(m[u]):
                    c = color_edge(hb, u, int(v))
                    brute.setdefault(c, np.zeros_like(m))
                    brute[c][u, v], brute[c][v, u] = m[u, v], m[v, u]
            for sl in colored_slices(hb):
                want = brute.get(sl.color, np.zeros_like(m))
                assert np.array_equal(sl.dense(), want)
                assert np.all(np.count_nonzero(want, axis=1) <= 1)


class TestSplitOneSparse:
    def test_zero(self):
        assert len(split_one_sparse(np.zeros((2, 2)), 0.3)) == 0

    def test_real_half(self):
        terms = split_one_sparse(0.5 * X, 0.25)
        assert len(terms) == 2
        for t in terms:
            assert np.array_equal(t.dense(), X)
        assert np.max(np.abs(terms.brute_sum(0.25) - 0.5 * X)) == 0

    def test_imaginary_entry(self):
        g = np.array([[0, 0.3j], [-0.3j, 0]])
        terms = split_one_sparse(g, 0.25)
        assert {t.tag for t in terms} == {"Y"}
        assert max_norm(g - terms.brute_sum(0.25)) <= math.sqrt(2) * 0.25

    def test_diagonal_gives_z_class(self):
        terms = split_one_sparse(np.diag([0.9, -0.2]), 0.1)
        assert {t.tag for t in terms} == {"Z"}
        assert max_norm(np.diag([0.9, -0.2]) - terms.brute_sum(0.1)) <= math.sqrt(2) * 0.1

    def test_ties_round_toward_zero(self):
        # 0.3 / (2 * 0.1) = 1.5 exactly halfway: rounds to 1, not 2
        terms = split_one_sparse(0.3 * X, 0.1)
        assert len(terms) == 2

    def test_rejects_two_sparse(self):
        with pytest.raises(ValidationError):
            split_one_sparse(np.ones((2, 2)), 0.1)

    def test_count_bound_and_term_invariants(self, rng):
        perm = rng.permutation(8)
        g = np.zeros((8, 8), dtype=complex)
        for i in range(8):
            j = int(perm[i])
            if i <= j and g[i].sum() == 0 and g[j].sum() == 0:
                v = rng.standard_normal() + 1j * rng.standard_normal()
                g[i, j] = v if i != j else v.real
                g[j, i] = np.conj(g[i, j])
        gamma = 0.07
        terms = split_one_sparse(g, gamma)
        assert len(terms) <= 6 * math.ceil(max_norm(g) / gamma)
        assert max_norm(g - terms.weighted_sum(gamma)) <= math.sqrt(2) * gamma
        for t in terms:
            t.check()


class TestDecomposeFull:
    def test_zero(self):
        assert len(decompose_full(load_coo("2 0\n"), 0.1)) == 0

    def test_pauli_x(self):
        h = load_coo("1 1\n0 1 1 0\n")
        terms = decompose_full(h, 1.0)
        assert len(terms) <= 6
        assert max_norm(dense_of(bipartite_double(h)) - terms.weighted_sum(1.0)) <= math.sqrt(2)

    def test_random_three_qubit(self):
        h = random_sparse(3, 2, 11)
        terms = decompose_full(h, 0.1)
        err = max_norm(dense_of(bipartite_double(h)) - terms.weighted_sum(0.1))
        assert err <= math.sqrt(2) * 0.1 * 4
        assert len(terms) <= term_count_bound(stats(h), 0.1)

    def test_weighted_sum_matches_term_by_term(self):
        h = random_sparse(2, 2, 4)
        terms = decompose_full(h, 0.05)
        assert np.max(np.abs(terms.weighted_sum(0.05) - terms.brute_sum(0.05))) <= 1e-12

    def test_every_term_squares_to_identity(self):
        h = random_sparse(2, 3, 9)
        for t in decompose_full(h, 0.2):
            t.check()

    def test_locate_round_trip(self):
        terms = decompose_full(random_sparse(2, 2, 3), 0.1)
        for j in range(len(terms)):
            c, lvl, sign = terms.locate(j)
            t = terms[j]
            assert (t.level, t.sign) == (lvl, sign) and t.tag == terms.classes[c].tag


class TestLocalColoring:
    def test_no_flip(self):
        assert local_coloring([0, 2], 5, 5) == (0, 0)

    def test_single_flip(self):
        assert local_coloring([1], 0, 2) == (1,)

    def test_outside_support(self):
        with pytest.raises(ValidationError):
            local_coloring([0], 0, 2)

    def test_two_local_term_is_properly_colored(self):
        zz = np.kron(np.diag([1, -1]), np.diag([1, -1]))
        xx = np.kron(X, X).real
        m = zz + xx
        for u in range(4):
            colors = [local_coloring([0, 1], u, int(v)) for v in np.flatnonzero(m[u])]
            assert len(set(colors)) == len(colors)
