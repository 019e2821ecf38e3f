import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linear_sum_assignment

from skinpontus import numerics
from skinpontus.errors import ContractError, ConvergenceError, DimensionError, StiffnessError
from skinpontus.model import ChainParams, build_liouvillian, preparation_params, site_state, vec, unvec


def charpoly_roots(A):
    """Eigenvalues as roots of det(lambda I - A), coefficients by Faddeev-LeVerrier in 50-digit arithmetic."""
    mpmath.mp.dps = 50
    n = A.shape[0]
    M = mpmath.matrix([[mpmath.mpc(complex(A[i, j])) for j in range(n)] for i in range(n)])
    I = mpmath.eye(n)
    coeffs = [mpmath.mpc(1)]
    Mk = mpmath.zeros(n, n)
    for k in range(1, n + 1):
        Mk = M * Mk + coeffs[-1] * I
        AM = M * Mk
        c = -sum(AM[i, i] for i in range(n)) / k
        coeffs.append(c)
    roots = mpmath.polyroots(coeffs, maxsteps=200, extraprec=200)
    return np.array([complex(r) for r in roots])


def match_error(a, b):
    cost = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    r, c = linear_sum_assignment(cost)
    return cost[r, c].max()


class TestEigGeneral:
    def test_identity(self):
        vals = sorted(p.value.real for p in numerics.eig_general(np.eye(2)))
        assert vals == pytest.approx([1.0, 1.0])

    def test_swap_matrix(self):
        vals = sorted(p.value.real for p in numerics.eig_general(np.array([[0, 1], [1, 0]])))
        assert vals == pytest.approx([-1.0, 1.0])

    def test_random_matches_characteristic_polynomial(self, rng):
        A = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        w = [p.value for p in numerics.eig_general(A)]
        assert len(w) == 6
        assert match_error(w, charpoly_roots(A)) < 1e-8

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(1, 12), seed=st.integers(0, 2**32 - 1))
    def test_residual_invariant(self, n, seed):
        g = np.random.default_rng(seed)
        A = g.normal(size=(n, n)) + 1j * g.normal(size=(n, n))
        norm = np.linalg.norm(A)
        for p in numerics.eig_general(A):
            assert np.linalg.norm(A @ p.vector - p.value * p.vector) <= 1e-8 * norm

    def test_non_square_rejected(self):
        with pytest.raises(DimensionError):
            numerics.eig_general(np.zeros((2, 3)))

    def test_empty_rejected(self):
        with pytest.raises(DimensionError):
            numerics.eig_general(np.zeros((0, 0)))

    def test_lapack_failure_becomes_convergence_error(self, monkeypatch):
        def boom(_):
            raise np.linalg.LinAlgError("Eigenvalues did not converge")
        monkeypatch.setattr(numerics.np.linalg, "eig", boom)
        with pytest.raises(ConvergenceError) as info:
            numerics.eig_general(np.eye(3))
        assert info.value.iterations == 300

    def test_skin_generator_eigenvalues_accurate(self):
        # strongly non-normal tridiagonal matrix, r = 4, L = 50
        L, JR, JL = 50, 4.0, 1.0
        M = np.zeros((L, L))
        i = np.arange(L - 1)
        M[i + 1, i] = JR
        M[i, i + 1] = JL
        M[i, i] -= JR
        M[i + 1, i + 1] -= JL
        w = np.array([p.value for p in numerics.eig_general(M)])
        k = np.arange(1, L)
        exact = np.concatenate([[0.0], -JL - JR + 2 * math.sqrt(JL * JR) * np.cos(np.pi * k / L)])
        assert match_error(w, exact) < 1e-10


class TestBalance:
    def test_tridiagonal_symmetrized(self):
        A = np.diag(np.full(5, 3.0), 1) + np.diag(np.full(5, 1 / 3), -1)
        B, d = numerics.balance_matrix(A)
        assert np.allclose(B, B.T, atol=1e-12)
        assert np.allclose(np.diag(1 / d) @ A @ np.diag(d), B)

    def test_zero_matrix_untouched(self):
        B, d = numerics.balance_matrix(np.zeros((3, 3)))
        assert np.all(B == 0) and np.allclose(d, 1)


class TestEigHermitian:
    def test_diagonal(self):
        pairs = numerics.eig_hermitian(np.diag([3.0, -1.0]))
        assert [p.value for p in pairs] == pytest.approx([-1.0, 3.0])

    def test_swap_vectors(self):
        pairs = numerics.eig_hermitian(np.array([[0, 1], [1, 0]], dtype=complex))
        assert [p.value for p in pairs] == pytest.approx([-1.0, 1.0])
        v_minus, v_plus = pairs[0].vector, pairs[1].vector
        assert abs(abs(np.vdot(v_minus, [1, -1])) / math.sqrt(2) - 1) < 1e-12
        assert abs(abs(np.vdot(v_plus, [1, 1])) / math.sqrt(2) - 1) < 1e-12

    def test_symmetrized_birth_death_matrix(self):
        # U of the similarity-transformed generator, L=4, J_R=1, J_L=0.5
        JR, JL, L = 1.0, 0.5, 4
        g = math.sqrt(JR * JL)
        U = np.diag([-JR, -(JR + JL), -(JR + JL), -JL]) + g * (np.eye(L, k=1) + np.eye(L, k=-1))
        vals = [p.value for p in numerics.eig_hermitian(U)]
        k = np.arange(1, L)
        exact = np.sort(np.concatenate([[0.0], -JL - JR + 2 * g * np.cos(np.pi * k / L)]))
        assert np.allclose(vals, exact, atol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(n=st.integers(1, 15), seed=st.integers(0, 2**32 - 1))
    def test_reconstruction_and_unitarity(self, n, seed):
        g = np.random.default_rng(seed)
        X = g.normal(size=(n, n)) + 1j * g.normal(size=(n, n))
        A = X + X.conj().T
        pairs = numerics.eig_hermitian(A)
        V = np.column_stack([p.vector for p in pairs])
        lam = np.array([p.value for p in pairs])
        assert np.all(np.diff(lam) >= 0)
        assert np.abs(V.conj().T @ V - np.eye(n)).max() < 1e-10
        assert np.abs(V @ np.diag(lam) @ V.conj().T - A).max() < 1e-10

    def test_non_hermitian_rejected(self):
        with pytest.raises(ContractError):
            numerics.eig_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))


class TestIntegrateLinear:
    def test_zero_generator(self, rng):
        y0 = rng.normal(size=4) + 1j * rng.normal(size=4)
        ys = numerics.integrate_linear(np.zeros((4, 4)), y0, [0.0, 0.7, 3.0])
        assert np.allclose(ys, y0[None, :], atol=0)

    def test_swap_stage_two_sites(self):
        S = build_liouvillian(preparation_params(2, 1.0)).matrix
        ys = numerics.integrate_linear(S, vec(site_state(2, 1)), [0.0, math.pi / 2], tol=1e-12)
        assert np.abs(unvec(ys[-1], 2) - site_state(2, 2)).max() < 1e-6

    def test_matches_matrix_exponential(self, rng):
        from scipy.linalg import expm
        p = ChainParams(L=5, J=1.0, eps=0.3, J_R=1.0, J_L=0.5)
        S = build_liouvillian(p).matrix
        y0 = vec(site_state(5, 1))
        ys = numerics.integrate_linear(S, y0, np.linspace(0, 2, 21), tol=1e-12)
        assert np.abs(ys[-1] - expm(2 * S) @ y0).max() < 1e-9

    def test_callable_generator_agrees(self, rng):
        A = rng.normal(size=(5, 5)) * 0.5
        y0 = rng.normal(size=5)
        t = np.linspace(0, 1, 11)
        ym = numerics.integrate_linear(A, y0, t, tol=1e-12)
        yc = numerics.integrate_linear(lambda y: A @ y, y0, t, tol=1e-12)
        assert np.abs(ym - yc).max() < 1e-12

    def test_fourth_order_convergence(self):
        A = np.array([[-0.3, 1.0], [-1.0, -0.3]])
        y0 = np.array([1.0, 0.0])
        exact = np.exp(-0.3 * 4) * np.array([math.cos(4.0), -math.sin(4.0)])
        errs = []
        for h in (0.2, 0.1):
            y = numerics.integrate_linear(A, y0, [0.0, 4.0], tol=np.inf, h_max=h)[-1]
            errs.append(np.abs(y - exact).max())
        assert errs[0] / errs[1] >= 8

    def test_step_underflow(self):
        A = np.array([[-1e6]])
        with pytest.raises(StiffnessError):
            numerics.integrate_linear(A, [1.0], [0.0, 1.0], tol=1e-14, h_min=1e-3)

    def test_bad_grid(self):
        with pytest.raises(ContractError):
            numerics.integrate_linear(np.eye(1), [1.0], [1.0, 0.0])
        with pytest.raises(ContractError):
            numerics.integrate_linear(np.eye(1), [1.0], [0.0, 1.0], tol=0)
