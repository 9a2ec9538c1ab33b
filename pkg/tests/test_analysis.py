import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contractix.analysis import (
    CompanionBlock2x2,
    OutsideClassWarning,
    block_for_eigenvalue,
    bk_norm_bound,
    companion_roots,
    geometric_fourier_identities,
    geometric_fourier_quadrature,
    hb_iteration_matrix,
    hb_matrix_power_norm,
    hb_power_norm_routes,
    integral_identity,
    integral_quadrature,
    schur_offdiag_bound,
    power_decomposition_2x2,
    spectral_norm,
    spectral_radius_block,
    z_roots,
)
from contractix.errors import ConsistencyError
from contractix.fixedpoint import HeavyBallParams, hb_params
from contractix.objective import SmoothnessBounds
from contractix.worstcase import minimizer_entry_closed_form


def params(kappa, L=1.0):
    return hb_params(SmoothnessBounds.from_kappa(kappa, L))


class TestCompanionRoots:
    @settings(max_examples=100, deadline=None)
    @given(a=st.floats(-5, 5), b=st.floats(-5, 5))
    def test_against_numpy_roots(self, a, b):
        ours = sorted(companion_roots(a, b), key=lambda z: (round(z.real, 9), round(z.imag, 9)))
        ref = sorted(np.roots([1.0, -a, -b]), key=lambda z: (round(z.real, 9), round(z.imag, 9)))
        np.testing.assert_allclose(ours, ref, atol=1e-7)

    def test_radius_matches_eigvals(self):
        rng = np.random.default_rng(0)
        for a, b in rng.uniform(-2, 2, (200, 2)):
            m = CompanionBlock2x2(a, b)
            assert m.spectral_radius == pytest.approx(max(abs(np.linalg.eigvals(m.matrix()))), rel=1e-7)

    def test_no_cancellation_for_small_root(self):
        # t^2 - 1e8 t + 1 = 0 has roots near 1e8 and 1e-8
        small = companion_roots(1e8, -1.0)[1]
        assert small.real == pytest.approx(1e-8, rel=1e-15)


class TestBlockForEigenvalue:
    def test_gd_at_exact_step(self):
        blk = block_for_eigenvalue(2.0, HeavyBallParams(0.5, 0.0, SmoothnessBounds(1.0, 4.0)))
        assert (blk.a, blk.b) == (0.0, 0.0)
        assert companion_roots(blk.a, blk.b) == (0j, 0j)

    @pytest.mark.parametrize("lam,a", [(1.0, 2 / 3), (4.0, -2 / 3)])
    def test_kappa_four_endpoints(self, lam, a):
        blk = block_for_eigenvalue(lam, params(4.0))
        assert blk.a == pytest.approx(a, rel=1e-15)
        assert blk.b == pytest.approx(-1 / 9, rel=1e-15)
        # a^2 - 4/9 = 0: a double root of modulus 1/3
        for t in blk.roots():
            assert abs(t) == pytest.approx(1 / 3, rel=1e-15)

    def test_roots_solve_characteristic_polynomial(self):
        p = params(10.0)
        for lam in np.linspace(1, 10, 7):
            blk = block_for_eigenvalue(lam, p)
            for t in blk.roots():
                assert abs(t * t - blk.a * t + p.beta_tilde) <= 1e-14


class TestSpectralRadiusBlock:
    @pytest.mark.parametrize("kappa", [2.0, 4.0, 100.0])
    def test_sweep_equals_sqrt_beta(self, kappa):
        p = params(kappa)
        for lam in np.linspace(1.0, kappa, 100):
            assert abs(spectral_radius_block(block_for_eigenvalue(lam, p)) - math.sqrt(p.beta_tilde)) <= 1e-10

    def test_kappa_100_value(self):
        p = params(100.0, L=3.0)
        for lam in (3.0, 17.0, 300.0):
            assert spectral_radius_block(block_for_eigenvalue(lam, p)) == pytest.approx(9 / 11, rel=1e-12)

    @pytest.mark.parametrize("lam", [1.0, 2.5, 4.0])
    def test_kappa_four(self, lam):
        assert spectral_radius_block(block_for_eigenvalue(lam, params(4.0))) == pytest.approx(1 / 3, rel=1e-14)

    def test_kappa_one(self):
        assert spectral_radius_block(block_for_eigenvalue(1.0, params(1.0))) == 0.0

    def test_agrees_with_dense_eigenvalues(self):
        p = params(50.0)
        for lam in np.linspace(1.0, 50.0, 13):
            blk = block_for_eigenvalue(lam, p)
            assert spectral_radius_block(blk) == pytest.approx(max(abs(np.linalg.eigvals(blk.matrix()))), rel=1e-7)

    def test_outside_class_flagged(self):
        p = params(4.0)
        with pytest.warns(OutsideClassWarning):
            rho = spectral_radius_block(block_for_eigenvalue(6.0, p))
        assert rho > 1 / 3

    def test_untuned_parameters(self):
        p = HeavyBallParams(0.1, 0.25, SmoothnessBounds(1.0, 4.0))
        blk = block_for_eigenvalue(2.0, p)
        assert spectral_radius_block(blk) == pytest.approx(max(abs(np.linalg.eigvals(blk.matrix()))), rel=1e-12)


class TestPowerDecomposition:
    def test_projector_block(self):
        m = CompanionBlock2x2(1.0, 0.0)
        for k in (1, 5, 20):
            s = power_decomposition_2x2(m, k)
            np.testing.assert_allclose(s.reconstruct(), np.linalg.matrix_power(m.matrix(), k), atol=1e-12)
            assert abs(s.d) <= 2 * k
        assert {round(abs(s.lambda1), 12), round(abs(s.lambda2), 12)} == {0.0, 1.0}

    def test_rotation_like(self):
        s = power_decomposition_2x2(CompanionBlock2x2(0.0, -1.0), 4)
        np.testing.assert_allclose(s.reconstruct(), np.eye(2), atol=1e-12)

    def test_hb_block_envelope(self):
        m = block_for_eigenvalue(2.0, params(4.0)).companion
        k = 10
        norm = spectral_norm(np.linalg.matrix_power(m.matrix(), k))
        assert norm <= (1 + k * (abs(m.a) + abs(m.b) + 1) * 3) * (1 / 3) ** k

    def test_jordan_block(self):
        # the endpoint block has a double root, so T is a genuine Jordan-like factor
        m = block_for_eigenvalue(1.0, params(4.0)).companion
        s = power_decomposition_2x2(m, 15)
        np.testing.assert_allclose(s.reconstruct(), np.linalg.matrix_power(m.matrix(), 15), atol=1e-14)
        assert abs(s.d) <= schur_offdiag_bound(m, 15) + 1e-10

    def test_unitary_factor(self):
        s = power_decomposition_2x2(CompanionBlock2x2(0.3, 1.2), 3)
        np.testing.assert_allclose(s.W.conj().T @ s.W, np.eye(2), atol=1e-15)
        assert s.Tk[1, 0] == 0

    def test_random_blocks(self):
        rng = np.random.default_rng(11)
        for a, b in rng.uniform(-2, 2, (300, 2)):
            m = CompanionBlock2x2(a, b)
            rho = m.spectral_radius
            for k in (1, 2, 7, 30):
                s = power_decomposition_2x2(m, k)
                direct = np.linalg.matrix_power(m.matrix(), k)
                assert np.abs(s.reconstruct() - direct).max() <= 1e-10 * spectral_norm(m.matrix()) ** k
                assert abs(s.lambda1) <= rho + 1e-12 and abs(s.lambda2) <= rho + 1e-12
                assert abs(s.d) <= schur_offdiag_bound(m, k) + 1e-10

    def test_k_zero_rejected(self):
        with pytest.raises(ValueError):
            power_decomposition_2x2(CompanionBlock2x2(1.0, 0.0), 0)


class TestSpectralNorm:
    def test_against_power_iteration(self):
        rng = np.random.default_rng(2)
        for size in (2, 4):
            A = rng.standard_normal((size, size))
            v = np.ones(size)
            for _ in range(2000):
                v = A.T @ (A @ v)
                v /= np.linalg.norm(v)
            assert spectral_norm(A) == pytest.approx(np.linalg.norm(A @ v), rel=1e-10)


class TestHbMatrixPowerNorm:
    def test_iteration_matrix_layout(self):
        p = params(4.0)
        R = hb_iteration_matrix(np.diag([1.0, 4.0]), p)
        np.testing.assert_allclose(R[:2, :2], np.diag([1 + 1 / 9 - 4 / 9, 1 + 1 / 9 - 16 / 9]), rtol=1e-15)
        np.testing.assert_allclose(R[:2, 2:], -np.eye(2) / 9, rtol=1e-15)
        np.testing.assert_array_equal(R[2:, :2], np.eye(2))
        np.testing.assert_array_equal(R[2:, 2:], np.zeros((2, 2)))

    def test_perfect_conditioning(self):
        p = params(1.0)
        dense, blocks = hb_power_norm_routes(np.eye(3), p, 1)
        assert abs(dense - blocks) <= 1e-12

    def test_diag_one_four(self):
        p = params(4.0)
        value = hb_matrix_power_norm(np.diag([1.0, 4.0]), p, 20)
        c = 2 + 2 / 9 + 4 / 9
        assert value <= (1 + 20 * c * 3) * (1 / 3) ** 20

    def test_decays(self):
        p = params(100.0)
        Q = np.diag(np.geomspace(1, 100, 5))
        assert hb_matrix_power_norm(Q, p, 400) < 1e-20

    @pytest.mark.parametrize("n", [2, 8])
    @pytest.mark.parametrize("kappa", [2.0, 100.0])
    def test_routes_agree_on_rotated_spectrum(self, n, kappa):
        rng = np.random.default_rng(n)
        V = np.linalg.qr(rng.standard_normal((n, n)))[0]
        Q = V @ np.diag(np.geomspace(1, kappa, n)) @ V.T
        Q = 0.5 * (Q + Q.T)
        p = params(kappa)
        for k in range(0, 51, 5):
            hb_matrix_power_norm(Q, p, k)

    def test_consistency_error(self, monkeypatch):
        import contractix.analysis as an

        monkeypatch.setattr(an, "hb_power_norm_routes", lambda Q, p, k: (1.0, 1.1))
        with pytest.raises(ConsistencyError):
            an.hb_matrix_power_norm(np.eye(2), params(4.0), 3)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            hb_matrix_power_norm(np.array([[1.0, 0.1], [0.0, 2.0]]), params(2.0), 2)


class TestBkNormBound:
    def test_kappa_four_k_one(self):
        assert bk_norm_bound(4.0, 1, params(4.0)) == pytest.approx(3.0, rel=1e-14)

    def test_kappa_100_rate(self):
        p = params(100.0)
        for k in range(1, 40):
            lead = lambda j: bk_norm_bound(100.0, j, p) - (9 / 11) ** j
            assert lead(k + 1) / lead(k) * k / (k + 1) == pytest.approx(9 / 11, rel=1e-12)

    @pytest.mark.parametrize("kappa", [2.0, 10.0, 100.0, 1e4])
    def test_dominates_measured_norms(self, kappa):
        p = params(kappa)
        Q = np.diag(np.geomspace(1, kappa, 8))
        for k in range(1, 51):
            assert hb_matrix_power_norm(Q, p, k) <= bk_norm_bound(kappa, k, p)


class TestIntegralIdentity:
    def test_z_roots(self):
        for kappa in (1.1, 4.0, 100.0):
            z1, z2 = z_roots(kappa)
            assert z1 * z2 == pytest.approx(1.0, rel=1e-15)
            assert z1 - z2 == pytest.approx(4 * math.sqrt(kappa) / (kappa - 1), rel=1e-12)

    def test_kappa_four_k_one(self):
        assert integral_identity(4.0, 1) == pytest.approx(3 / 8, rel=1e-15)

    def test_kappa_100_k_two(self):
        assert integral_identity(100.0, 2) == pytest.approx(99 / 40 * 9 / 11, rel=1e-15)

    @pytest.mark.parametrize("kappa", [1.1, 2.0, 4.0, 100.0, 1e4])
    def test_against_trapezoid(self, kappa):
        for k in range(1, 13):
            quad = integral_quadrature(kappa, k)
            assert abs(quad - integral_identity(kappa, k)) <= 1e-8 * integral_identity(kappa, k)

    @pytest.mark.parametrize("kappa,k", [(4.0, 1), (4.0, 3), (2.0, 6), (1e4, 2)])
    def test_against_adaptive_quadrature(self, kappa, k):
        with mpmath.workdps(40):
            shift = 4 / (mpmath.mpf(kappa) - 1)
            f = lambda t: mpmath.cos(2 * mpmath.pi * (k - 1) * t) / (2 * (1 - mpmath.cos(2 * mpmath.pi * t)) + shift)
            ref = float(mpmath.quad(f, mpmath.linspace(0, 1, 9)))
        assert integral_identity(kappa, k) == pytest.approx(ref, rel=1e-10)

    def test_near_one_escalates(self):
        kappa = 1.0001
        assert integral_quadrature(kappa, 3) == pytest.approx(integral_identity(kappa, 3), rel=1e-8)

    def test_decay_ratio(self):
        _, z2 = z_roots(100.0)
        assert integral_identity(100.0, 9) / integral_identity(100.0, 8) == pytest.approx(z2, rel=1e-14)

    def test_consistent_with_minimizer_entry(self):
        for kappa in (1.5, 4.0, 100.0):
            for k in range(1, 10):
                assert minimizer_entry_closed_form(kappa, k) == pytest.approx(-integral_identity(kappa, k), rel=1e-12)

    @pytest.mark.parametrize("kappa,k", [(1.0, 1), (0.5, 1), (4.0, 0)])
    def test_rejects(self, kappa, k):
        with pytest.raises(ValueError):
            integral_identity(kappa, k)


class TestGeometricFourier:
    @pytest.mark.parametrize("alpha,k,expected", [(0.0, 3, 0.0), (0.5, 1, 1.0), (3.0, 5, 0.0), (-0.5, 4, -0.125)])
    def test_values(self, alpha, k, expected):
        assert geometric_fourier_identities(alpha, k) == expected

    @pytest.mark.parametrize("alpha", [0.0, 0.5, -0.9, 3.0, -1.5])
    def test_against_quadrature(self, alpha):
        for k in range(1, 10):
            closed = geometric_fourier_identities(alpha, k)
            quad = geometric_fourier_quadrature(alpha, k)
            assert abs(quad - closed) <= 1e-8 * max(abs(closed), 1e-300) or abs(quad - closed) <= 1e-14

    @pytest.mark.parametrize("alpha", [1.0, -1.0])
    def test_unit_circle_rejected(self, alpha):
        with pytest.raises(ValueError):
            geometric_fourier_identities(alpha, 2)
