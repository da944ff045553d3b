import math

import numpy as np
import pytest

from hamsim.demos import ParityChain
from hamsim.linalg import (TOL_COMPOSE, TOL_STRUCT, ValidationError, exact_expm, fractional_power,
                           is_unitary, isometry_distance, max_norm, random_involution, random_unitary,
                           spectral_distance)

from conftest import X, Z


class TestExactExpm:
    def test_zero_generator_gives_identity(self):
        assert np.allclose(exact_expm(np.zeros((3, 3)), 2.7), np.eye(3), atol=TOL_STRUCT)

    def test_diagonal_phase(self):
        u = exact_expm(np.diag([0.0, math.pi]), 1.0)
        assert np.max(np.abs(u - np.diag([1.0, -1.0]))) <= TOL_STRUCT

    def test_parity_chain_swap_at_quarter_period(self):
        u = exact_expm(ParityChain(1).dense(), math.pi / 2)
        assert abs(abs(u[1, 0]) - 1.0) <= TOL_STRUCT
        assert abs(u[0, 0]) <= TOL_STRUCT

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            exact_expm(np.array([[0, 1], [0, 0]]), 1.0)

    def test_group_law(self, rng):
        a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        h = a + a.conj().T
        lhs = exact_expm(h, 0.3) @ exact_expm(h, 0.9)
        assert np.max(np.abs(lhs - exact_expm(h, 1.2))) <= TOL_COMPOSE
        assert is_unitary(exact_expm(h, 5.0))


class TestSpectralDistance:
    def test_self_distance_zero(self, rng):
        u = random_unitary(4, rng)
        assert spectral_distance(u, u) == pytest.approx(0.0, abs=1e-15)

    def test_antipodal(self):
        assert spectral_distance(np.eye(2), -np.eye(2)) == pytest.approx(2.0, abs=1e-14)

    def test_dim_mismatch(self):
        with pytest.raises(ValidationError):
            spectral_distance(np.eye(2), np.eye(3))

    def test_triangle_inequality(self, rng):
        for _ in range(10):
            a, b, c = (random_unitary(4, rng) for _ in range(3))
            assert spectral_distance(a, c) <= spectral_distance(a, b) + spectral_distance(b, c) + 1e-14

    def test_symmetric(self, rng):
        a, b = random_unitary(3, rng), random_unitary(3, rng)
        assert spectral_distance(a, b) == pytest.approx(spectral_distance(b, a), abs=1e-14)


class TestFractionalPower:
    def test_zero_fraction_is_identity(self, rng):
        q = random_involution(4, rng)
        assert np.max(np.abs(fractional_power(q, 0.0) - np.eye(4))) <= TOL_STRUCT

    def test_full_fraction_is_query(self, rng):
        q = random_involution(4, rng)
        assert np.max(np.abs(fractional_power(q, 1.0) - q)) <= TOL_STRUCT

    def test_half_power_of_z(self):
        assert np.max(np.abs(fractional_power(Z, 0.5) - np.diag([1.0, -1j]))) <= TOL_STRUCT

    def test_rotation_form(self, rng):
        q, a = random_involution(4, rng), 0.37
        want = np.exp(-1j * math.pi * a / 2) * (math.cos(math.pi * a / 2) * np.eye(4)
                                                 + 1j * math.sin(math.pi * a / 2) * q)
        assert np.max(np.abs(fractional_power(q, a) - want)) <= TOL_STRUCT

    def test_additive_in_the_exponent(self, rng):
        q = random_involution(4, rng)
        lhs = fractional_power(q, 0.2) @ fractional_power(q, 0.45)
        assert np.max(np.abs(lhs - fractional_power(q, 0.65))) <= TOL_STRUCT

    def test_rejects_non_involution(self):
        with pytest.raises(ValidationError):
            fractional_power(np.diag([1.0, 1j]), 0.5)


def test_max_norm_and_isometry_distance():
    assert max_norm(np.array([[0.5, -2j], [2j, 0.1]])) == pytest.approx(2.0)
    # a contraction A = V / 2: distance picks up the missing norm
    assert isometry_distance(0.5 * X, X) == pytest.approx(math.sqrt(0.25 + 0.75), abs=1e-12)
    assert isometry_distance(X, X) == pytest.approx(0.0, abs=1e-7)
