import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spincm.errors import InconsistentData, SingularDenominator, SingularShiftedDifference
from spincm.phase_space import POTENTIAL_SCALE, POTENTIAL_SIGN, CartanData, hamiltonian_cm
from spincm.rank1_kks import (
    Rank1Spin,
    calibrate_normalization,
    canonical_rank1,
    casimir_rank1,
    committed_reduced_ratio,
    conjugation_defect,
    degeneration_scan,
    degeneration_target,
    epsilon_exact,
    epsilon_leading,
    kks_spin,
    loglog_slope,
    random_degeneration_data,
    random_rank1_cm_point,
    random_rs_reduced,
    reduced_cm_hamiltonian,
    reduced_rank1,
    rs_consistency,
    rs_hamiltonians,
    rs_point,
    rs_reconstruct_g,
    rs_residual,
    solve_rs_products,
)

seeds = st.integers(0, 2**31 - 1)


def random_r1(rng, n):
    return Rank1Spin(rng.normal(size=n) + 1j * rng.normal(size=n), rng.normal(size=n) + 1j * rng.normal(size=n))


class TestKKS:
    def test_orthogonal_vectors(self):
        r1 = Rank1Spin([1.0, 0.0, 0.0], [0.0, 2.0, 0.0])
        assert np.allclose(kks_spin(r1).mu, np.outer(r1.phi, r1.psi))

    def test_all_ones(self):
        for n in (2, 3, 4):
            r1 = Rank1Spin(np.ones(n), np.ones(n), reduced=True)
            mu = kks_spin(r1).mu
            assert np.allclose(mu, np.ones((n, n)) - np.eye(n))
            direct, closed = casimir_rank1(r1)
            assert np.isclose(closed, (n - 1) * n) and np.isclose(direct, closed)

    def test_traceless(self):
        mu = kks_spin(random_r1(np.random.default_rng(0), 4)).mu
        assert abs(np.trace(mu)) < 1e-13

    def test_zero_pairing(self):
        r1 = Rank1Spin([1.0, 1.0], [1.0, -1.0])
        assert casimir_rank1(r1) == (0, 0)

    def test_reduced_flag_validated(self):
        with pytest.raises(ValueError):
            Rank1Spin([1.0, 2.0], [1.0, 1.0], reduced=True)

    def test_casimir_closed_form_many(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            r1 = random_r1(rng, int(rng.integers(2, 6)))
            direct, closed = casimir_rank1(r1)
            assert abs(direct - closed) < 1e-13 * max(1.0, abs(closed)) * 10

    @settings(max_examples=100, deadline=None)
    @given(st.integers(2, 5), seeds)
    def test_reduced_products_fixed_by_casimir(self, n, seed):
        rng = np.random.default_rng(seed)
        kappa = rng.normal() + 1j * rng.normal()
        r1 = reduced_rank1(rng.normal(size=n) + 1j * rng.normal(size=n) + 3, kappa)
        mu = kks_spin(r1).mu
        c = casimir_rank1(r1)[1]
        off = ~np.eye(n, dtype=bool)
        assert np.allclose((mu * mu.T)[off], c / (n * (n - 1)), atol=1e-12 * max(1, abs(c)))

    def test_phi_gauge(self):
        r1 = canonical_rank1(Rank1Spin([0.0, 2.0, 4.0], [1.0, 1.0, 1.0]))
        assert np.allclose(r1.phi, [0, 1, 2]) and np.allclose(r1.psi, [2, 2, 2])
        mu_before = kks_spin(Rank1Spin([0.0, 2.0, 4.0], [1.0, 1.0, 1.0])).mu
        assert np.allclose(kks_spin(r1).mu * kks_spin(r1).mu.T, mu_before * mu_before.T)


class TestReducedHamiltonian:
    def test_no_coupling(self):
        assert np.isclose(reduced_cm_hamiltonian([0.3, -0.3], [1.0, -1.0], 0.0), 1.0)

    def test_n2_potential(self):
        q, c = 0.4, 2.3
        val = reduced_cm_hamiltonian([q, -q], [0.0, 0.0], c)
        assert np.isclose(val, c / 8 / np.sinh(2 * q) ** 2)

    def test_collision(self):
        with pytest.raises(SingularDenominator):
            reduced_cm_hamiltonian([0.0, 0.0], [0.0, 0.0], 1.0)

    def test_calibration_reproduces_committed_constants(self):
        rng = np.random.default_rng(2)
        for n in (2, 3, 4):
            cartan = CartanData(n, gamma_convention="Exp2Q")
            pts = [random_rank1_cm_point(rng, n) for _ in range(10)]
            fit = calibrate_normalization(pts, cartan)
            assert fit["spread"] < 1e-10
            assert np.isclose(fit["scale"], POTENTIAL_SCALE)
            assert fit["sign"] == POTENTIAL_SIGN
            assert np.isclose(fit["reduced_ratio"], committed_reduced_ratio())

    def test_calibration_needs_exp2q(self):
        with pytest.raises(ValueError):
            calibrate_normalization([], CartanData(2))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 4), seeds)
    def test_matches_hamiltonian_cm(self, n, seed):
        cartan = CartanData(n, gamma_convention="Exp2Q")
        cm = random_rank1_cm_point(np.random.default_rng(seed), n)
        c = np.sum(cm.mu * cm.mu.T)
        red = reduced_cm_hamiltonian(cm.q, cm.p_tilde, c, POTENTIAL_SCALE * 2, POTENTIAL_SIGN)
        assert np.isclose(red, hamiltonian_cm(cm, cartan), atol=1e-10)


class TestRuijsenaars:
    def test_diagonal_g_no_spin(self):
        r1 = Rank1Spin(np.zeros(3), np.zeros(3))
        assert rs_residual([1.0, 0.0, -1.0], r1, np.diag([1.0, 2.0, 0.5])) == 0

    def test_zero_kappa_diagonal(self):
        r1 = Rank1Spin([1.0, 1.0], [1.0, -1.0])
        g = rs_reconstruct_g([0.5, -0.5], r1, [2.0, 0.5], check=False)
        assert np.allclose(g, np.diag([2.0, 0.5]))
        # a nonzero spin with kappa = 0 admits no such g
        with pytest.raises(InconsistentData):
            rs_reconstruct_g([0.5, -0.5], r1, [2.0, 0.5])

    def test_n1(self):
        r1 = Rank1Spin([2.0], [1.5])
        assert np.allclose(rs_consistency([0.0], r1), 0)

    def test_n2_solve(self):
        h, kappa = 0.6, 0.3 + 0.2j
        w = solve_rs_products([h, -h], kappa)
        d = np.array([[kappa, 2 * h + kappa], [-2 * h + kappa, kappa]])
        assert np.max(np.abs((w[:, None] / d).sum(axis=0) - 1)) < 1e-12
        assert np.isclose(w.sum(), 2 * kappa)

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_products_sum(self, n):
        rng = np.random.default_rng(n)
        for _ in range(20):
            red = random_rs_reduced(rng, n, kappa=rng.normal() + 1j * rng.normal())
            w = solve_rs_products(red.h, red.kappa)
            assert abs(w.sum() - n * red.kappa) < 1e-10 * max(1, abs(red.kappa))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 4), seeds)
    def test_reconstruction(self, n, seed):
        rng = np.random.default_rng(seed)
        red = random_rs_reduced(rng, n, kappa=0.2 + rng.uniform(0.1, 1.0))
        w = solve_rs_products(red.h, red.kappa)
        phi = rng.uniform(0.5, 2.0, size=n)
        r1 = Rank1Spin(phi, w / phi)
        assert np.max(np.abs(rs_consistency(red.h, r1))) < 1e-12
        g = rs_reconstruct_g(red.h, r1, red.g_diag)
        assert rs_residual(red.h, r1, g) < 1e-10
        tr1, tr2 = rs_hamiltonians(red.h, red.g_diag, red.kappa)
        assert abs(tr1 - np.trace(g)) < 1e-10 and abs(tr2 - np.trace(g @ g)) < 1e-10
        # g_ij phi_j / phi_i depends only on h_i - h_j and g_jj
        scaled = g * phi[None, :] / phi[:, None]
        i, j = 0, 1
        assert np.isclose(scaled[i, j], red.kappa * red.g_diag[j] / (red.h[i] - red.h[j] + red.kappa))

    def test_residual_linear_in_perturbation(self):
        rng = np.random.default_rng(3)
        red = random_rs_reduced(rng, 3)
        rs, r1 = rs_point(red.h, red.g_diag, red.kappa)
        g = np.array(rs.g)
        e = np.zeros((3, 3)); e[0, 1] = 1.0
        r_a = rs_residual(red.h, r1, g + 1e-3 * e)
        r_b = rs_residual(red.h, r1, g + 2e-3 * e)
        assert np.isclose(r_b / r_a, 2.0, rtol=1e-6)

    def test_inconsistent(self):
        r1 = Rank1Spin([1.0, 1.0, 1.0], [0.3, 0.5, 0.7])
        with pytest.raises(InconsistentData):
            rs_reconstruct_g([1.0, 0.0, -1.0], r1, [1.0, 1.0, 1.0])

    def test_shifted_singular(self):
        r1 = Rank1Spin([1.0, 1.0], [1.0, 1.0])  # kappa = 1
        with pytest.raises(SingularShiftedDifference):
            rs_consistency([-0.5, 0.5], r1)


class TestDegeneration:
    def test_leading_examples(self):
        h = [1.0, 0.0, -1.0]
        assert np.allclose(epsilon_leading(np.zeros((3, 3)), h), 0)
        mu, h, _ = random_degeneration_data(np.random.default_rng(0), 3)
        assert np.allclose(epsilon_leading(2.5 * mu, h), 2.5 * epsilon_leading(mu, h))

    def test_leading_residual_quadratic(self):
        mu, h, _ = random_degeneration_data(np.random.default_rng(1), 3)
        off = ~np.eye(3, dtype=bool)
        res = []
        for s in (1e-2, 1e-3):
            eps = epsilon_leading(s * mu, h)
            res.append(np.abs(conjugation_defect(eps, h)[off] - s * mu[off]).max())
        assert 50 < res[0] / res[1] < 200

    def test_exact_solution(self):
        mu, h, cart = random_degeneration_data(np.random.default_rng(2), 3)
        eps = epsilon_exact(0.05 * mu, h, 0.05 * cart)
        off = ~np.eye(3, dtype=bool)
        assert np.abs(conjugation_defect(eps, h)[off] - 0.05 * mu[off]).max() < 1e-13
        assert np.allclose(np.diag(eps), 0.05 * cart)

    def test_zero_data(self):
        rows = degeneration_scan(np.zeros((3, 3)), [1.0, 0.0, -1.0], [0.1, 0.01])
        assert all(abs(r["Q"]) < 1e-14 and r["abs_err"] < 1e-14 for r in rows)

    def test_linear_convergence(self):
        mu, h, cart = random_degeneration_data(np.random.default_rng(4), 3)
        rows = degeneration_scan(mu, h, [1e-1, 3e-2, 1e-2, 3e-3, 1e-3], cart)
        assert abs(loglog_slope(rows) - 1) < 0.2

    def test_target_is_rational_cm(self):
        mu, h, cart = random_degeneration_data(np.random.default_rng(5), 4)
        x = np.diag(cart).astype(complex)
        diff = h[:, None] - h[None, :]
        off = ~np.eye(4, dtype=bool)
        x[off] = mu[off] / diff[off]
        assert np.isclose(degeneration_target(mu, h, cart), 0.5 * np.trace(x @ x))
