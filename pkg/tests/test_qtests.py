import math

import numpy as np
import pytest

from quantumness.operator_core import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DensityState,
    PremiseError,
    ValidationError,
    expectation,
)
from quantumness.qtests import (
    AV_PAIR,
    bloch_ball_grid,
    minimality_check,
    qtest_a,
    qtest_b,
    witness_search,
)

from conftest import random_unitary


class TestQTestA:
    def test_pauli_sum(self):
        r = qtest_a(PAULI_X, PAULI_Z, PAULI_X + PAULI_Z)
        assert r.c_equals_sum
        np.testing.assert_allclose(r.sumset, [-2, 0, 2], atol=1e-12)
        np.testing.assert_allclose(r.sp_c.eigenvalues, [-math.sqrt(2), math.sqrt(2)], atol=1e-12)
        assert r.violation_distance == pytest.approx(2 - math.sqrt(2), abs=1e-12)
        assert r.quantum

    def test_commuting_projectors(self):
        r = qtest_a(np.diag([1, 0]), np.diag([0, 1]), np.eye(2))
        assert r.sp_c.eigenvalues == (1.0,)
        np.testing.assert_allclose(r.sumset, [0, 1, 2])
        assert r.violation_distance == 0.0
        assert not r.quantum

    def test_premise_fails(self):
        r = qtest_a(PAULI_X, PAULI_Z, PAULI_Y)
        assert not r.c_equals_sum
        assert r.premise == "premise fails"
        assert not r.quantum

    def test_random_diagonal_never_violates(self, rng):
        for _ in range(300):
            dim = int(rng.integers(1, 7))
            a = np.diag(rng.normal(size=dim))
            b = np.diag(rng.normal(size=dim))
            assert qtest_a(a, b, a + b).violation_distance == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            qtest_a(np.eye(2), np.eye(2), np.eye(3))


class TestQTestB:
    def test_av_pair(self):
        r = qtest_b(*AV_PAIR)
        assert r.order_holds
        assert r.order_margin == pytest.approx(0.0, abs=1e-12)
        # B^2 - A^2 = [[1.5, 1], [1, 0.5]]: eigenvalues 1 +- sqrt(1.25)
        assert r.square_margin == pytest.approx(1 - math.sqrt(1.25), abs=1e-12)
        assert r.violating_state is not None
        assert r.quantum

    def test_commuting_pair(self):
        r = qtest_b(np.diag([1, 0]), np.diag([2, 1]))
        assert r.order_holds
        assert r.square_margin == pytest.approx(1.0)
        assert r.violating_state is None

    def test_zero_a(self, rng):
        g = rng.normal(size=(3, 3))
        b = g @ g.T
        r = qtest_b(np.zeros((3, 3)), b)
        assert r.order_holds and r.square_margin >= -1e-12 and r.violating_state is None

    def test_negative_a_is_premise_error(self):
        with pytest.raises(PremiseError):
            qtest_b(PAULI_Z, np.eye(2))

    def test_violating_state_consistency(self):
        a, b = AV_PAIR
        r = qtest_b(a, b)
        gap = expectation(r.violating_state, a.square()) - expectation(r.violating_state, b.square())
        assert gap == pytest.approx(-r.square_margin, abs=1e-12)

    @pytest.mark.parametrize("c", [0.1, 2.0, 7.5])
    def test_scale_covariance(self, c):
        a, b = AV_PAIR
        base = qtest_b(a, b)
        scaled = qtest_b(c * a, c * b)
        assert scaled.square_margin == pytest.approx(c * c * base.square_margin, rel=1e-12)
        np.testing.assert_allclose(scaled.violating_state.entries, base.violating_state.entries, atol=1e-12)

    def test_commuting_direction_random(self, rng):
        # simultaneously diagonalizable 0 <= A <= B never violates
        for _ in range(500):
            dim = int(rng.integers(1, 6))
            u = random_unitary(rng, dim)
            da = rng.exponential(size=dim)
            db = da + rng.exponential(size=dim)
            a = u @ np.diag(da) @ u.conj().T
            b = u @ np.diag(db) @ u.conj().T
            assert qtest_b(a, b).square_margin >= -1e-9


class TestWitnessSearch:
    def test_dim2_finds_violation(self):
        r = witness_search(2, seed=3, iterations=2000)
        assert r.square_margin <= -0.05
        # the reported margin is reproducible from the returned pair
        assert qtest_b(r.a, r.b).square_margin == pytest.approx(r.square_margin, abs=1e-9)
        assert qtest_b(r.a, r.b).order_holds

    def test_dim1_cannot_violate(self):
        assert witness_search(1, seed=0, iterations=300).square_margin >= -1e-12

    def test_diagonal_mode_dim4(self):
        for seed in range(3):
            assert witness_search(4, seed=seed, iterations=600, diagonal=True).square_margin >= -1e-9

    def test_deterministic(self):
        r1 = witness_search(3, seed=11, iterations=400)
        r2 = witness_search(3, seed=11, iterations=400)
        assert r1.square_margin == r2.square_margin
        np.testing.assert_array_equal(r1.a.entries, r2.a.entries)

    def test_budget_respected(self):
        assert witness_search(2, seed=1, iterations=500).evaluations == 500

    @pytest.mark.slow
    @pytest.mark.parametrize("dim", [2, 3, 4, 5])
    def test_converse_suite(self, dim):
        margins = [witness_search(dim, seed=s, iterations=2000).square_margin for s in range(10)]
        assert max(margins) < -0.01


class TestMinimality:
    def test_maximally_mixed_only(self):
        r = minimality_check([np.eye(2) / 2], np.diag([1, 0]), PAULI_X + np.eye(2))
        assert r.accessible_order_holds
        assert not r.global_order_holds
        # B - A = [[0, 1], [1, 1]]: min eigenvalue (1 - sqrt 5) / 2
        assert r.global_margin == pytest.approx((1 - math.sqrt(5)) / 2, abs=1e-12)
        assert not r.minimality_holds

    def test_bloch_grid_commuting(self):
        r = minimality_check(bloch_ball_grid(5), np.diag([1, 0]), np.diag([2, 1]))
        assert r.accessible_order_holds and r.global_order_holds and r.minimality_holds

    def test_equal_observables(self):
        a = np.diag([1, 0])
        assert minimality_check([np.diag([1, 0])], a, a).minimality_holds

    def test_grid_detects_noncommuting_gap(self):
        # the full Bloch grid contains states that see B - A < 0
        r = minimality_check(bloch_ball_grid(5), np.diag([1, 0]), PAULI_X + np.eye(2))
        assert not r.accessible_order_holds and r.minimality_holds

    def test_empty_states(self):
        with pytest.raises(ValidationError):
            minimality_check([], np.eye(2), np.eye(2))

    def test_grid_states_valid(self):
        states = bloch_ball_grid(3)
        assert all(isinstance(s, DensityState) for s in states)
        assert len(states) == 7
