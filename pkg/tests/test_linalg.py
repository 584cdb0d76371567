import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrcbench import linalg as la
from oracles import loop_kron, loop_partial_trace_first, mp_expm_minus_i

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def random_complex(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def depolarizing(p, dim):
    return lambda a: (1 - p) * a + p * np.trace(a) * np.eye(dim) / dim


class TestKronAndPartialTrace:
    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_kron_all_matches_loops(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = random_complex(rng, 2, 2), random_complex(rng, 2, 3), random_complex(rng, 1, 2)
        np.testing.assert_allclose(la.kron_all([a, b, c]), loop_kron(loop_kron(a, b), c), atol=1e-12)

    @given(seeds, st.sampled_from([2, 3]), st.sampled_from([2, 4]))
    @settings(max_examples=20, deadline=None)
    def test_partial_trace_matches_loops(self, seed, first, rest):
        a = random_complex(np.random.default_rng(seed), first * rest, first * rest)
        np.testing.assert_allclose(la.partial_trace_first(a, first), loop_partial_trace_first(a, first), atol=1e-12)

    def test_partial_trace_of_product(self):
        rho_a, rho_b = la.random_density(1, 1), la.random_density(2, 2)
        np.testing.assert_allclose(la.partial_trace_first(np.kron(rho_a, rho_b), 2), rho_b, atol=1e-14)

    def test_partial_trace_shape_errors(self):
        with pytest.raises(ValueError):
            la.partial_trace_first(np.zeros((6, 6)), 4)
        with pytest.raises(ValueError):
            la.partial_trace_first(np.zeros((4, 2)), 2)

    def test_pauli_places_qubit_zero_leftmost(self):
        z0 = la.pauli("Z", 0, 2)
        np.testing.assert_array_equal(np.diag(z0).real, [1, 1, -1, -1])
        np.testing.assert_array_equal(np.diag(la.pauli("Z", 1, 2)).real, [1, -1, 1, -1])

    def test_pauli_rejects_bad_arguments(self):
        with pytest.raises(IndexError):
            la.pauli("X", 3, 3)
        with pytest.raises(ValueError):
            la.pauli("W", 0, 1)


class TestHermitianExp:
    @pytest.mark.parametrize("t", [0.0, 0.3, 1.7])
    def test_against_mpmath(self, t):
        h = la.hermitize(random_complex(np.random.default_rng(5), 4, 4))
        np.testing.assert_allclose(la.hermitian_exp(h, t), mp_expm_minus_i(h, t), atol=1e-12)

    @given(seeds, st.floats(-3, 3))
    @settings(max_examples=25, deadline=None)
    def test_unitary(self, seed, t):
        h = la.hermitize(random_complex(np.random.default_rng(seed), 8, 8))
        u = la.hermitian_exp(h, t)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(8), atol=1e-12)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            la.hermitian_exp(np.array([[0, 1], [0, 0]]), 1.0)


class TestSuperoperators:
    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_vec_roundtrip(self, seed):
        a = random_complex(np.random.default_rng(seed), 4, 4)
        np.testing.assert_array_equal(la.unvec(la.vec(a)), a)
        assert la.vec(a)[1 + 2 * 4] == a[1, 2]

    @given(seeds)
    @settings(max_examples=15, deadline=None)
    def test_conjugation_superoperator(self, seed):
        rng = np.random.default_rng(seed)
        k, a = random_complex(rng, 4, 4), random_complex(rng, 4, 4)
        sup = la.to_superoperator(lambda x: k @ x @ k.conj().T, 4)
        np.testing.assert_allclose(sup, np.kron(k.conj(), k), atol=1e-12)
        np.testing.assert_allclose(la.apply_superoperator(sup, a), k @ a @ k.conj().T, atol=1e-10)

    def test_nonlinear_map_detected(self):
        with pytest.raises(la.NonlinearChannelError):
            la.to_superoperator(lambda a: a @ a, 2)

    def test_identity_choi_is_unnormalised_bell_projector(self):
        choi = la.choi_matrix(np.eye(16))
        omega = sum(np.kron(la.basis_projector(i, 4)[:, [i]], la.basis_projector(i, 4)[:, [i]]) for i in range(4))
        np.testing.assert_allclose(choi, omega @ omega.conj().T, atol=1e-14)

    @pytest.mark.parametrize("p", [0.0, 0.3, 1.0])
    def test_depolarizing_is_cptp(self, p):
        rep = la.verify_cptp(la.to_superoperator(depolarizing(p, 4), 4))
        assert rep.passed and rep.trace_preserving and rep.completely_positive

    def test_transpose_is_positive_but_not_cp(self):
        rep = la.verify_cptp(la.to_superoperator(lambda a: a.T, 2))
        assert rep.trace_preserving
        assert not rep.completely_positive
        assert rep.min_choi_eig == pytest.approx(-1.0)

    def test_trace_scaling_fails_trace_check(self):
        assert not la.verify_cptp(la.to_superoperator(lambda a: 2 * a, 2)).trace_preserving

    @pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
    def test_restricted_norm_of_depolarizing(self, p):
        sup = la.to_superoperator(depolarizing(p, 4), 4)
        assert la.traceless_restricted_norm(sup) == pytest.approx(1 - p, abs=1e-12)

    def test_gell_mann_basis_is_orthogonal_traceless(self):
        basis = la.traceless_hermitian_basis(4)
        assert len(basis) == 15
        gram = np.einsum("aij,bij->ab", basis.conj(), basis)
        np.testing.assert_allclose(gram, np.eye(15), atol=1e-12)
        np.testing.assert_allclose(np.trace(basis, axis1=1, axis2=2), 0, atol=1e-14)

    @given(seeds)
    @settings(max_examples=15, deadline=None)
    def test_restricted_norm_dominates_sampled_ratios(self, seed):
        rng = np.random.default_rng(seed)
        u = la.random_unitary(4, rng)
        sigma = la.random_density(2, rng)
        f = lambda a: 0.6 * u @ a @ u.conj().T + 0.4 * sigma * np.trace(a)
        bound = la.traceless_restricted_norm(la.to_superoperator(f, 4))
        for _ in range(20):
            d = la.random_density(2, rng) - la.random_density(2, rng)
            assert la.schatten2(f(d)) <= bound * la.schatten2(d) + 1e-12


class TestStates:
    @given(seeds, st.integers(1, 3))
    @settings(max_examples=20, deadline=None)
    def test_random_density_is_density(self, seed, n):
        assert la.is_density(la.random_density(n, seed))

    @given(seeds)
    @settings(max_examples=10, deadline=None)
    def test_random_unitary(self, seed):
        u = la.random_unitary(8, seed)
        np.testing.assert_allclose(u @ u.conj().T, np.eye(8), atol=1e-12)

    @pytest.mark.parametrize(
        "bad",
        [np.eye(2), np.diag([1.5, -0.5]), np.array([[0.5, 0.1], [0.2, 0.5]]), np.eye(3) / 3, np.ones((2, 3))],
    )
    def test_check_density_rejects(self, bad):
        with pytest.raises(ValueError):
            la.check_density(bad)

    def test_schatten2_is_frobenius(self):
        a = random_complex(np.random.default_rng(0), 3, 3)
        assert la.schatten2(a) == pytest.approx(np.linalg.norm(a, "fro"))

    def test_weighted_norm(self):
        assert la.weighted_seq_norm([3.0, -1.0, 2.0], [1.0, 0.5, 0.25]) == pytest.approx(2 + 0.5 + 0.75)
        with pytest.raises(ValueError):
            la.weighted_seq_norm([1.0], [1.0, 1.0])
        with pytest.raises(ValueError):
            la.weighted_seq_norm([1.0, 1.0], [1.0])

    def test_n_qubits(self):
        assert la.n_qubits(8) == 3
        with pytest.raises(ValueError):
            la.n_qubits(6)
