import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spincm.errors import BranchCut, DecompositionFails, NearDegenerateSpectrum
from spincm.linalg_core import (
    MINUS_ZERO_PLUS,
    PLUS_MINUS_ZERO,
    centralizer_basis,
    eig_decompose,
    gauss_decompose,
    log_nearest,
    mat_exp,
    mat_log_principal,
    traceless_project,
)


def random_complex(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


class TestEigDecompose:
    def test_identity_is_degenerate(self):
        with pytest.raises(NearDegenerateSpectrum):
            eig_decompose(np.eye(3))

    def test_diagonal_sorted(self):
        es = eig_decompose(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(es.d, [1, 2, 3])
        assert np.allclose(np.abs(es.u), np.eye(3)[:, [1, 2, 0]])

    def test_random_residual(self):
        rng = np.random.default_rng(0)
        m = random_complex(rng, 4)
        es = eig_decompose(m)
        assert np.linalg.norm(m @ es.u - es.u * es.d[None, :]) < 1e-10
        assert np.allclose(es.reconstruct(), m)

    def test_order_is_lexicographic(self):
        es = eig_decompose(np.diag([1 + 1j, 1 - 1j, -2.0]))
        assert np.allclose(es.d, [-2, 1 - 1j, 1 + 1j])

    def test_deterministic(self):
        m = random_complex(np.random.default_rng(3), 4)
        a, b = eig_decompose(m), eig_decompose(m)
        assert np.array_equal(a.u, b.u) and np.array_equal(a.d, b.d)

    def test_outputs_read_only(self):
        es = eig_decompose(np.diag([1.0, 2.0]))
        with pytest.raises(ValueError):
            es.d[0] = 5


class TestGauss:
    @pytest.mark.parametrize("order", [PLUS_MINUS_ZERO, MINUS_ZERO_PLUS])
    def test_identity(self, order):
        f = gauss_decompose(np.eye(3), order)
        assert np.allclose(f.b_plus, np.eye(3))
        assert np.allclose(f.b_minus, np.eye(3))
        assert np.allclose(f.b_zero, 1)

    @pytest.mark.parametrize("order", [PLUS_MINUS_ZERO, MINUS_ZERO_PLUS])
    def test_diagonal(self, order):
        f = gauss_decompose(np.diag([2.0, -1.0, 0.5j]), order)
        assert np.allclose(f.b_zero, [2.0, -1.0, 0.5j])

    def test_two_by_two_torus(self):
        a, b, c, d = 1.3, -0.4, 2.2, 0.7
        f = gauss_decompose([[a, b], [c, d]])
        assert np.allclose(f.b_zero, [(a * d - b * c) / d, d])

    def test_trailing_minor_ratio(self):
        m = random_complex(np.random.default_rng(1), 4)
        f = gauss_decompose(m)
        minors = [np.linalg.det(m[k:, k:]) for k in range(4)] + [1.0]
        assert np.allclose(f.b_zero, [minors[k] / minors[k + 1] for k in range(4)])

    def test_vanishing_minor(self):
        # trailing 1x1 minor is zero
        with pytest.raises(DecompositionFails):
            gauss_decompose([[0.0, 1.0], [1.0, 0.0]])

    @pytest.mark.parametrize("order", [PLUS_MINUS_ZERO, MINUS_ZERO_PLUS])
    def test_many_random_reconstructions(self, order):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n = int(rng.integers(2, 5))
            m = random_complex(rng, n)
            f = gauss_decompose(m, order)
            assert np.allclose(np.diag(f.b_plus), 1) and np.allclose(np.diag(f.b_minus), 1)
            assert np.allclose(np.tril(f.b_plus, -1), 0)
            assert np.allclose(np.triu(f.b_minus, 1), 0)
            assert np.linalg.norm(f.reconstruct() - m) < 1e-8 * np.linalg.norm(m)


class TestExpLog:
    def test_zero(self):
        assert np.allclose(mat_exp(np.zeros((3, 3))), np.eye(3))

    def test_diagonal(self):
        assert np.allclose(mat_exp(np.diag([0.3, -1.1])), np.diag(np.exp([0.3, -1.1])))

    def test_nilpotent(self):
        assert np.allclose(mat_exp([[0, 2.5], [0, 0]]), [[1, 2.5], [0, 1]])

    def test_inverse(self):
        a = random_complex(np.random.default_rng(2), 4)
        assert np.allclose(mat_exp(a) @ mat_exp(-a), np.eye(4))

    def test_log_diagonal(self):
        out = mat_log_principal(np.diag([np.e**2, np.e**-2]))
        assert np.allclose(out, np.diag([2.0, -2.0]))

    def test_log_identity_rejected_as_degenerate(self):
        with pytest.raises(NearDegenerateSpectrum):
            mat_log_principal(np.eye(2))

    def test_branch_cut(self):
        with pytest.raises(BranchCut):
            mat_log_principal(np.diag([-1.0, 2.0]))

    def test_log_round_trip(self):
        rng = np.random.default_rng(4)
        s = random_complex(rng, 3)
        m = s @ np.diag(rng.uniform(0.5, 3.0, size=3)) @ np.linalg.inv(s)
        assert np.linalg.norm(mat_exp(mat_log_principal(m)) - m) < 1e-10 * np.linalg.norm(m)

    def test_log_nearest(self):
        z = np.exp(1j * 3.0)
        assert np.isclose(log_nearest([z], [3.0j + 2j * np.pi])[0], 3.0j + 2j * np.pi)


class TestTraceless:
    def test_examples(self):
        assert np.allclose(traceless_project(np.eye(2)), 0)
        assert np.allclose(traceless_project(np.diag([3.0, 1.0])), np.diag([1.0, -1.0]))
        m = np.array([[1.0, 2.0], [3.0, -1.0]])
        assert np.allclose(traceless_project(m), m)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 5), st.integers(0, 2**31 - 1))
    def test_trace_zero(self, n, seed):
        m = random_complex(np.random.default_rng(seed), n)
        assert abs(np.trace(traceless_project(m))) < 1e-12 * (1 + np.abs(m).sum())


class TestCentralizer:
    def test_n2_diagonal(self):
        (b,) = centralizer_basis(np.diag([1.0, -1.0]))
        # spans the same line as diag(1, -1)
        assert np.allclose(b, b[0, 0] * np.diag([1.0, -1.0]))
        assert abs(b[0, 0]) > 0

    def test_n3_diagonal_dimension(self):
        basis = centralizer_basis(np.diag([1.0, 2.0, -3.0]))
        assert len(basis) == 2
        flat = np.array([np.diag(b) for b in basis])
        assert np.linalg.matrix_rank(flat) == 2
        assert all(np.allclose(b, np.diag(np.diag(b))) for b in basis)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 4), st.integers(0, 2**31 - 1))
    def test_commutes(self, n, seed):
        m = random_complex(np.random.default_rng(seed), n)
        for b in centralizer_basis(m):
            assert np.linalg.norm(m @ b - b @ m) < 1e-10 * max(1, np.linalg.norm(m) ** 2)
            assert abs(np.trace(b)) < 1e-10
