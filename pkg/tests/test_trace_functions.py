import numpy as np
import pytest
from hypothesis import given, strategies as st

from traceconvex.errors import DimensionMismatch, InvalidExponent, NotSelfAdjoint
from traceconvex.linalg import dagger
from traceconvex.sampling import Rng, random_matrix
from traceconvex.trace_functions import (
    ParamTransform,
    PsiParams,
    lieb_ando,
    normalize_params,
    psi,
    psi_direct,
    skew_commutator_form,
    skew_functional,
    tensor_dilate,
    three_var,
    upsilon,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
exps = st.floats(-2, 2).filter(lambda x: abs(x) > 1e-3)
svals = st.floats(0.1, 3)


def _triple(seed, dim=3):
    g = Rng(seed)
    return (random_matrix("pd", dim, g), random_matrix("pd", dim, g), random_matrix("invertible", dim, g))


class TestPsi:
    def test_identity_inputs(self):
        for params in [(0.5, 0.5, 1), (2, -1, 3), (-0.3, 0.7, 0.2)]:
            assert psi(np.eye(3), np.eye(3), np.eye(3), params) == pytest.approx(3)

    def test_commuting_oracle(self):
        assert psi(np.diag([4.0, 1.0]), np.diag([1.0, 9.0]), None, (0.5, 0.5, 1)) == pytest.approx(5)

    def test_scalar_oracle(self):
        assert psi([[4.0]], [[9.0]], [[1.0]], (2, 1, 1)) == pytest.approx(144)

    def test_zero_s(self):
        with pytest.raises(InvalidExponent):
            psi(np.eye(2), np.eye(2), None, (1, 0, 0))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            psi(np.eye(2), np.eye(3), None, (1, 0, 1))

    def test_both_exponents_zero(self, rng):
        K = random_matrix("invertible", 3, rng)
        assert psi(np.eye(3) * 2, np.eye(3) * 5, K, (0, 0, 0.7)) == pytest.approx(
            np.sum(np.linalg.svd(K, compute_uv=False) ** 1.4)
        )

    @given(seeds, exps, exps, svals)
    def test_factorization_matches_direct(self, seed, p, q, s):
        A, B, K = _triple(seed)
        assert psi(A, B, K, (p, q, s)) == pytest.approx(psi_direct(A, B, K, (p, q, s)), rel=1e-9)

    @given(seeds, exps, exps, svals)
    def test_swap_symmetry(self, seed, p, q, s):
        A, B, K = _triple(seed)
        assert psi(B, A, dagger(K), (q, p, s)) == pytest.approx(psi(A, B, K, (p, q, s)), rel=1e-9)

    @given(seeds, exps, exps, svals)
    def test_negate_symmetry(self, seed, p, q, s):
        A, B, K = _triple(seed)
        Kt = dagger(np.linalg.inv(K))
        assert psi(A, B, Kt, (-p, -q, -s)) == pytest.approx(psi(A, B, K, (p, q, s)), rel=1e-9)

    @given(seeds, exps, exps, svals)
    def test_unitary_covariance(self, seed, p, q, s):
        A, B, K = _triple(seed)
        U = random_matrix("unitary", 3, Rng(seed, 9))
        lhs = psi(U @ A @ dagger(U), U @ B @ dagger(U), U @ K @ dagger(U), (p, q, s))
        assert lhs == pytest.approx(psi(A, B, K, (p, q, s)), rel=1e-9)

    @given(seeds, exps, exps, svals)
    def test_commuting_reduction(self, seed, p, q, s):
        g = Rng(seed)
        a = np.exp(g.uniform(np.log(0.1), np.log(10), size=4))
        b = np.exp(g.uniform(np.log(0.1), np.log(10), size=4))
        want = np.sum((a**p * b**q) ** s)
        assert psi(np.diag(a), np.diag(b), None, (p, q, s)) == pytest.approx(want, rel=1e-10)

    def test_batched(self, rng):
        A = random_matrix("pd", 3, rng, size=5)
        B = random_matrix("pd", 3, rng, size=5)
        out = psi(A, B, None, (0.5, 0.3, 1.2))
        assert out.shape == (5,)
        assert out[2] == pytest.approx(psi(A[2], B[2], None, (0.5, 0.3, 1.2)))


class TestNormalize:
    def test_swap(self):
        params, t = normalize_params(PsiParams(0, 1, 1))
        assert params == PsiParams(1, 0, 1) and t == ParamTransform(swap=True)

    def test_negate(self):
        # negation alone already gives p >= q here
        params, t = normalize_params(PsiParams(-1, 0, -1))
        assert params == PsiParams(1, 0, 1) and t == ParamTransform(negate=True)

    def test_negate_then_swap(self):
        params, t = normalize_params(PsiParams(0, -1, -1))
        assert params == PsiParams(1, 0, 1) and t == ParamTransform(negate=True, swap=True)

    def test_unchanged(self):
        params, t = normalize_params(PsiParams(2, -1, 1))
        assert params == PsiParams(2, -1, 1) and t.describe() == "identity"

    @given(seeds, exps, exps, st.floats(-3, 3).filter(lambda x: abs(x) > 0.1))
    def test_transform_preserves_value(self, seed, p, q, s):
        A, B, K = _triple(seed)
        params, t = normalize_params(PsiParams(p, q, s))
        assert params.normalized
        A2, B2, K2 = t.apply(A, B, K)
        assert psi(A2, B2, K2, params) == pytest.approx(psi(A, B, K, (p, q, s)), rel=1e-9)


class TestUpsilon:
    def test_identity(self):
        assert upsilon(np.eye(4), None, 0.7, 1.3) == pytest.approx(4)

    def test_oracle(self):
        assert upsilon(np.diag([4.0, 9.0]), None, 0.5, 2) == pytest.approx(13)

    def test_linear_case(self, rng):
        A = random_matrix("pd", 3, rng)
        assert upsilon(A, None, 1, 1) == pytest.approx(np.trace(A).real)


class TestSkew:
    def test_commuting_vanishes(self, rng):
        rho = np.diag([0.2, 0.3, 0.5])
        assert skew_functional(rho, np.diag([1.0, -2.0, 0.5]), 0.3) == pytest.approx(0, abs=1e-14)

    def test_maximally_mixed(self, rng):
        K = random_matrix("self_adjoint", 3, rng)
        assert skew_functional(np.eye(3) / 3, K, 0.4) == pytest.approx(0, abs=1e-14)

    def test_oracle(self):
        rho = np.diag([0.25, 0.75])
        K = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert skew_functional(rho, K, 0.5) == pytest.approx(np.sqrt(3) / 2 - 1, abs=1e-14)

    def test_rejects_non_self_adjoint(self):
        with pytest.raises(NotSelfAdjoint):
            skew_functional(np.eye(2) / 2, np.array([[0, 1], [0, 0]]), 0.5)

    @given(seeds, st.floats(0.01, 0.99))
    def test_commutator_form_and_symmetry(self, seed, p):
        g = Rng(seed)
        rho = random_matrix("density", 3, g)
        K = random_matrix("self_adjoint", 3, g)
        val = skew_functional(rho, K, p)
        assert val <= 1e-12
        assert skew_commutator_form(rho, K, p) == pytest.approx(val, rel=1e-8, abs=1e-13)
        assert skew_functional(rho, K, 1 - p) == pytest.approx(val, rel=1e-9, abs=1e-13)


class TestLiebAndo:
    def test_equal_arguments(self, rng):
        A = random_matrix("pd", 3, rng)
        assert lieb_ando(A, A, None, 0.3) == pytest.approx(np.trace(A).real)

    def test_oracle(self):
        assert lieb_ando(np.diag([4.0, 1.0]), np.diag([1.0, 4.0]), None, 0.5) == pytest.approx(4)

    def test_p_one(self, rng):
        A, B = random_matrix("pd", 3, rng), random_matrix("pd", 3, rng)
        assert lieb_ando(A, B, None, 1.0) == pytest.approx(np.trace(A).real)

    def test_is_psi_slice(self, rng):
        A, B, K = _triple(5)
        assert lieb_ando(A, B, K, 0.3) == pytest.approx(psi(A, B, K, (0.3, 0.7, 1)), rel=1e-10)


class TestThreeVar:
    def test_identity(self):
        assert three_var(np.eye(3), np.eye(3), np.eye(3), 1, 2, -0.5) == pytest.approx(3)

    def test_oracle(self):
        assert three_var(np.diag([2.0, 1.0]), np.eye(2), np.diag([1.0, 2.0]), 1, 1, 1) == pytest.approx(4)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            three_var(np.eye(2), np.eye(2), np.eye(3), 1, 1, 1)

    def test_reduces_to_psi(self, rng):
        A, C = random_matrix("pd", 3, rng), random_matrix("pd", 3, rng)
        assert three_var(A, np.eye(3), C, 0.7, 1.0, 0.4) == pytest.approx(psi(A, C, None, (0.7, 0.4, 1)), rel=1e-10)


class TestTensorDilate:
    def test_m_one(self, rng):
        A, B = random_matrix("pd", 2, rng), random_matrix("pd", 2, rng)
        assert tensor_dilate(A, B, 1, (2, -1, 1)) == pytest.approx(psi(A, B, None, (2, -1, 1)))

    def test_identity(self):
        assert tensor_dilate(np.eye(3), np.eye(3), 2, (0.5, 0.5, 1)) == pytest.approx(3)

    def test_random_pair(self, rng):
        A, B = random_matrix("pd", 2, rng), random_matrix("pd", 2, rng)
        assert abs(tensor_dilate(A, B, 3, (2, -1, 1)) - psi(A, B, None, (2, -1, 1))) <= 1e-10 * psi(A, B, None, (2, -1, 1))

    def test_requires_critical_s(self):
        with pytest.raises(InvalidExponent):
            tensor_dilate(np.eye(2), np.eye(2), 2, (2, -1, 2))
