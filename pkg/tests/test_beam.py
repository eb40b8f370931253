import math

import numpy as np
import pytest
from scipy import sparse, stats

from quantumness.beam import (
    BeamAmplitude,
    TwoModeFock,
    coherent_beam,
    crossover_coefficients,
    crossover_scan,
    gamma_order_check,
    minimal_direction,
    moment_check,
    product_decomposition_check,
    second_quantize,
    stokes_reconstruct,
    weak_beam_photon_statistics,
)
from quantumness.operator_core import PAULI_X, PAULI_Y, PAULI_Z, PremiseError, ValidationError, commutator_norm
from quantumness.phase_space import coherent_coefficients
from quantumness.qtests import AV_PAIR

from conftest import random_hermitian

SPACE = TwoModeFock(30)


def dense_oracle(a, xi, per_mode=30):
    """Moments of sum_kl A_kl a_k^dag a_l on a product of single-mode truncations."""
    a = np.asarray(a, dtype=complex)
    lower = np.diag(np.sqrt(np.arange(1, per_mode + 1)), 1)
    eye = np.eye(per_mode + 1)
    modes = [np.kron(lower, eye), np.kron(eye, lower)]
    gamma = sum(a[k, l] * modes[k].conj().T @ modes[l] for k in range(2) for l in range(2))
    psi = np.kron(coherent_coefficients(xi[0], per_mode), coherent_coefficients(xi[1], per_mode))
    psi = psi / np.linalg.norm(psi)
    w = gamma @ psi
    return float(np.vdot(psi, w).real), float(np.vdot(w, w).real)


def random_xi(rng, max_n=4.0):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return BeamAmplitude.from_direction(v, rng.uniform(0, max_n))


class TestTwoModeFock:
    def test_dimension(self):
        assert SPACE.dim == 496
        assert TwoModeFock(6).occupations.shape == (28, 2)

    def test_index_roundtrip(self):
        s = TwoModeFock(7)
        for i, (n1, n2) in enumerate(s.occupations):
            assert s.index(n1, n2) == i

    def test_truncated_ccr(self):
        s = TwoModeFock(6)
        phi, psi = np.array([1, 1j]) / math.sqrt(2), np.array([0.6, -0.8])
        safe = s.sectors_up_to(5)
        for f, g in ((phi, phi), (phi, psi), (psi, psi)):
            comm = (s.annihilation(f) @ s.creation(g) - s.creation(g) @ s.annihilation(f)).toarray()
            np.testing.assert_allclose(comm[safe, safe], np.vdot(f, g) * np.eye(21), atol=1e-14)

    def test_rejects_zero_cutoff(self):
        with pytest.raises(ValidationError):
            TwoModeFock(0)


class TestSecondQuantize:
    def test_identity_is_number(self):
        g = second_quantize(np.eye(2), SPACE)
        np.testing.assert_allclose(g.diagonal(), SPACE.occupations.sum(axis=1))
        assert abs(g - SPACE.number()).max() < 1e-13

    def test_mode_projector(self):
        g = second_quantize(np.diag([1, 0]), TwoModeFock(8)).toarray()
        np.testing.assert_allclose(g, np.diag(TwoModeFock(8).occupations[:, 0]), atol=1e-14)

    def test_sigma_x_two_photon(self):
        g = second_quantize(PAULI_X, SPACE)
        np.testing.assert_allclose(np.linalg.eigvalsh(SPACE.block(g, 2)), [-2, 0, 2], atol=1e-12)

    def test_outcomes_are_occupation_sums(self, rng):
        a = random_hermitian(rng, 2)
        al = np.linalg.eigvalsh(a)
        g = second_quantize(a, SPACE)
        for n in (3, 7):
            expected = sorted(al[0] * k + al[1] * (n - k) for k in range(n + 1))
            np.testing.assert_allclose(np.linalg.eigvalsh(SPACE.block(g, n)), expected, atol=1e-10)

    def test_sector_conservation(self, rng):
        n = SPACE.number().toarray()
        for _ in range(5):
            g = second_quantize(random_hermitian(rng, 2), SPACE).toarray()
            assert commutator_norm(g, n) <= 1e-10

    def test_one_photon_faithful(self, rng):
        for _ in range(100):
            a = random_hermitian(rng, 2)
            block = SPACE.block(second_quantize(a, SPACE), 1)
            np.testing.assert_allclose(np.linalg.eigvalsh(block), np.linalg.eigvalsh(a), atol=1e-10)
            # basis |1,0>, |0,1> is the mode basis itself
            np.testing.assert_allclose(block, a, atol=1e-12)

    def test_linearity(self, rng):
        a, b, lam = random_hermitian(rng, 2), random_hermitian(rng, 2), rng.normal()
        lhs = second_quantize(a + lam * b, SPACE)
        rhs = second_quantize(a, SPACE) + lam * second_quantize(b, SPACE)
        assert abs(lhs - rhs).max() <= 1e-10

    def test_not_multiplicative(self, rng):
        s = TwoModeFock(2)
        a = random_hermitian(rng, 2)
        g = second_quantize(a, s)
        assert sparse.linalg.norm(second_quantize(a @ a, s) - g @ g) > 0.1

    def test_quadratic_form_oracle(self, rng):
        s = TwoModeFock(5)
        a = random_hermitian(rng, 2)
        a1, a2 = s._ladders
        modes = [a1, a2]
        oracle = sum(a[k, l] * (modes[k].conj().T @ modes[l]) for k in range(2) for l in range(2))
        assert abs(second_quantize(a, s) - oracle).max() <= 1e-12

    def test_rejects_wrong_dim(self):
        with pytest.raises(ValidationError):
            second_quantize(np.eye(3), SPACE)


class TestCoherentBeam:
    def test_vacuum(self):
        st = coherent_beam(BeamAmplitude(0, 0), SPACE)
        assert st.vector[0] == pytest.approx(1.0)
        assert np.sum(np.abs(st.vector[1:])) == 0

    def test_single_mode(self):
        st = coherent_beam(BeamAmplitude(1, 0), SPACE)
        assert st.expect(SPACE.number()) == pytest.approx(1.0, abs=1e-12)

    def test_balanced_circular(self):
        xi = BeamAmplitude(math.sqrt(0.5), 1j * math.sqrt(0.5))
        assert xi.N == pytest.approx(1.0)
        st = coherent_beam(xi, SPACE)
        n1 = second_quantize(np.diag([1, 0]), SPACE)
        n2 = second_quantize(np.diag([0, 1]), SPACE)
        assert st.expect(n1) == pytest.approx(0.5, abs=1e-12)
        assert st.expect(n2) == pytest.approx(0.5, abs=1e-12)

    def test_photon_distribution_is_poisson(self):
        xi = BeamAmplitude(1.1, 0.4 - 0.7j)
        st = coherent_beam(xi, SPACE)
        for n in range(8):
            p = np.sum(np.abs(st.vector[SPACE.sector(n)]) ** 2)
            assert p == pytest.approx(stats.poisson.pmf(n, xi.N), abs=1e-12)

    def test_cutoff_too_small(self):
        with pytest.raises(ValidationError, match="use >= 40"):
            coherent_beam(BeamAmplitude.from_direction((1, 0), 10), SPACE)


class TestMoments:
    def test_identity_poisson(self):
        r = moment_check(np.eye(2), BeamAmplitude(1, 0))
        assert r.mean == pytest.approx(1.0, abs=1e-8) and r.second_moment == pytest.approx(2.0, abs=1e-8)

    @pytest.mark.parametrize("N", [0.3, 1.0, 3.5])
    def test_mode_projector(self, N):
        r = moment_check(np.diag([1, 0]), BeamAmplitude(math.sqrt(N), 0))
        assert r.mean == pytest.approx(N, abs=1e-8)
        assert r.second_moment == pytest.approx(N * N + N, abs=1e-8)

    def test_sigma_x(self):
        r = moment_check(PAULI_X, BeamAmplitude(math.sqrt(2.0), 0))
        assert r.mean == pytest.approx(0.0, abs=1e-8)
        assert r.second_moment == pytest.approx(2.0, abs=1e-8)

    def test_random_pairs(self, rng):
        for _ in range(100):
            r = moment_check(random_hermitian(rng, 2), random_xi(rng), SPACE)
            assert r.within(1e-8)

    def test_dense_oracle(self, rng):
        for _ in range(5):
            a, xi = random_hermitian(rng, 2), random_xi(rng)
            r = moment_check(a, xi, SPACE)
            mean, second = dense_oracle(a, xi.vector)
            assert r.mean == pytest.approx(mean, abs=1e-8)
            assert r.second_moment == pytest.approx(second, abs=1e-8)


class TestDecomposition:
    def test_sigma_z(self):
        r = product_decomposition_check(PAULI_Z, TwoModeFock(8))
        assert r.safe_residual <= 1e-10
        assert r.low_sector_residual == pytest.approx(0.0, abs=1e-12)

    def test_identity_two_photon_differs(self):
        r = product_decomposition_check(np.eye(2), TwoModeFock(4))
        # (Gamma I)^2 = 4 vs Gamma(I) = 2 on two photons
        assert r.sector_gaps[2] == pytest.approx(2.0)
        assert r.sector_gaps[0] == r.sector_gaps[1] == 0.0

    def test_random(self, rng):
        for _ in range(10):
            r = product_decomposition_check(random_hermitian(rng, 2), TwoModeFock(10))
            assert r.safe_residual <= 1e-10 and r.low_sector_residual <= 1e-12

    def test_needs_two_photons(self):
        with pytest.raises(ValidationError):
            product_decomposition_check(PAULI_Z, TwoModeFock(1))


class TestGammaOrder:
    def test_av_pair(self):
        r = gamma_order_check(*AV_PAIR, TwoModeFock(6))
        assert r.order_preserved and r.order_margin >= -1e-9
        assert r.square_margin == pytest.approx(1 - math.sqrt(1.25), abs=1e-10)
        for n, m in enumerate(r.sector_square_margins):
            assert m == pytest.approx(n * r.square_margin, abs=1e-9)

    def test_equal(self):
        a = AV_PAIR[0]
        r = gamma_order_check(a, a, TwoModeFock(4))
        assert r.order_margin == pytest.approx(0, abs=1e-12)
        assert r.square_margin == pytest.approx(0, abs=1e-12)

    def test_commuting(self):
        r = gamma_order_check(np.diag([1, 0]), np.diag([2, 1]), TwoModeFock(5))
        assert r.square_margin >= 0

    def test_premise(self):
        with pytest.raises(PremiseError):
            gamma_order_check(np.diag([2, 0]), np.diag([1, 1]), TwoModeFock(3))


class TestCrossover:
    def test_closed_form_and_signs(self):
        a, b = AV_PAIR
        u = minimal_direction(a, b)
        quad, lin = crossover_coefficients(a, b, u)
        assert quad > 0 > lin
        t = crossover_scan(a, b, u, [0.01, 0.1, 1, 3, 5, 10])
        assert t.rows[0].margin < 0 < t.rows[-1].margin
        for r in t.rows:
            assert r.margin == pytest.approx(r.analytic_margin, abs=1e-8 + r.tail_bound)
        assert t.bracketed_root == pytest.approx(t.n_star, rel=1e-6)

    def test_single_sign_change(self):
        a, b = AV_PAIR
        u = minimal_direction(a, b)
        ns = np.geomspace(0.01, 7, 25)
        t = crossover_scan(a, b, u, ns)
        signs = np.sign([r.margin for r in t.rows])
        assert np.count_nonzero(np.diff(signs)) == 1

    def test_bad_direction(self):
        a, b = AV_PAIR
        with pytest.raises(ValidationError):
            crossover_scan(a, b, (1, 0), [1.0])

    def test_cutoff_grows_with_n(self):
        a, b = AV_PAIR
        t = crossover_scan(a, b, minimal_direction(a, b), [1.0, 12.0])
        assert t.total_cutoff == 48


class TestStokes:
    def test_horizontal(self):
        r = stokes_reconstruct(BeamAmplitude(math.sqrt(2), 0))
        np.testing.assert_allclose(r.bloch, (0, 0, 1), atol=1e-10)
        assert r.stokes.S0 == pytest.approx(2.0, abs=1e-10)

    def test_diagonal(self):
        r = stokes_reconstruct(BeamAmplitude(1, 1))
        np.testing.assert_allclose(r.bloch, (1, 0, 0), atol=1e-10)

    def test_random_full_polarization(self, rng):
        for _ in range(20):
            r = stokes_reconstruct(random_xi(rng))
            s = r.stokes
            assert s.S0**2 == pytest.approx(s.S1**2 + s.S2**2 + s.S3**2, abs=1e-9)
            assert r.state_error <= 1e-9

    def test_matches_pauli_expectations(self, rng):
        xi = random_xi(rng)
        r = stokes_reconstruct(xi)
        v = xi.vector
        for val, p in zip(r.stokes[1:], (PAULI_X, PAULI_Y, PAULI_Z)):
            assert val == pytest.approx(np.vdot(v, p @ v).real, abs=1e-10)

    def test_zero_beam(self):
        with pytest.raises(ValidationError):
            stokes_reconstruct(BeamAmplitude(0, 0))


def test_weak_beam_matches_single_photon():
    a, _ = AV_PAIR
    u = np.array([0.6, 0.8j])
    beam, photon = weak_beam_photon_statistics(a, u, 1e-4)
    np.testing.assert_allclose(beam, photon, rtol=1e-3)
