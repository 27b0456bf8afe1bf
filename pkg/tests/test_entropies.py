import numpy as np
import pytest
from hypothesis import given, strategies as st

from traceconvex.entropies import (
    AlphaZ,
    Divergence,
    alpha_z,
    az_to_pq,
    classical_kl,
    classical_renyi,
    d_prime,
    dpi_region,
    renyi_alpha,
    sandwiched,
    umegaki,
)
from traceconvex.errors import InvalidExponent
from traceconvex.linalg import dagger
from traceconvex.sampling import Rng, random_matrix

seeds = st.integers(min_value=0, max_value=2**32 - 1)
# below about 0.3 the eigenvalue route of `sandwiched` loses relative accuracy
# in the tiny eigenvalues of sigma^g rho sigma^g, so keep alpha moderate
alphas = st.floats(0.3, 4).filter(lambda a: abs(a - 1) > 1e-2)

P, Q = (0.5, 0.5), (0.25, 0.75)


class TestClassical:
    def test_kl(self):
        assert classical_kl(P, P) == 0
        assert classical_kl(P, Q) == pytest.approx(0.5 * np.log(4 / 3), abs=1e-15)

    def test_kl_near_degenerate(self):
        eps = 1e-6
        assert classical_kl(np.array([1, eps]) / (1 + eps), P) == pytest.approx(np.log(2), abs=1e-4)

    def test_renyi(self):
        assert classical_renyi(P, P, 0.3) == pytest.approx(0, abs=1e-15)
        assert classical_renyi(P, Q, 2) == pytest.approx(np.log(4 / 3), abs=1e-15)

    def test_renyi_limit(self):
        # one-sided error is h * Var_P[log P/Q] / 2 to first order; for this
        # pair that is 1.5e-5, so the 1e-5 check uses the central average
        h = 1e-4
        kl = classical_kl(P, Q)
        llr = np.log(np.array(P) / np.array(Q))
        var = float(np.dot(P, (llr - kl) ** 2))
        lo, hi = classical_renyi(P, Q, 1 - h), classical_renyi(P, Q, 1 + h)
        assert abs(0.5 * (lo + hi) - kl) <= 1e-5
        for val in (lo, hi):
            assert abs(val - kl) <= h * var / 2 * (1 + 1e-2)

    def test_bad_input(self):
        with pytest.raises(ValueError):
            classical_kl((0.5, 0.6), P)
        with pytest.raises(InvalidExponent):
            classical_renyi(P, Q, 1)


class TestQuantum:
    rho = np.diag([0.5, 0.5])
    sigma = np.diag([0.25, 0.75])

    def test_equal_states(self, rng):
        r = random_matrix("density", 3, rng)
        for f in (umegaki, d_prime):
            assert f(r, r) == pytest.approx(0, abs=1e-12)
        assert renyi_alpha(r, r, 0.5) == pytest.approx(0, abs=1e-12)
        assert sandwiched(r, r, 2) == pytest.approx(0, abs=1e-12)
        assert alpha_z(r, r, AlphaZ(2, 0.7)) == pytest.approx(0, abs=1e-12)

    def test_diagonal_oracles(self):
        assert umegaki(self.rho, self.sigma) == pytest.approx(0.5 * np.log(4 / 3), abs=1e-14)
        assert d_prime(self.rho, self.sigma) == pytest.approx(0.5 * np.log(4 / 3), abs=1e-14)
        assert renyi_alpha(self.rho, self.sigma, 2) == pytest.approx(np.log(4 / 3), abs=1e-14)
        assert sandwiched(self.rho, self.sigma, 2) == pytest.approx(np.log(4 / 3), abs=1e-14)

    @given(seeds, alphas)
    def test_commuting_reduction(self, seed, a):
        g = Rng(seed)
        p = g.uniform(0.1, 1, size=3)
        q = g.uniform(0.1, 1, size=3)
        p, q = p / p.sum(), q / q.sum()
        U = random_matrix("unitary", 3, g)
        rho, sigma = U @ np.diag(p) @ dagger(U), U @ np.diag(q) @ dagger(U)
        kl = classical_kl(p, q)
        assert umegaki(rho, sigma) == pytest.approx(kl, rel=1e-8, abs=1e-12)
        assert d_prime(rho, sigma) == pytest.approx(kl, rel=1e-8, abs=1e-12)
        ren = classical_renyi(p, q, a)
        assert renyi_alpha(rho, sigma, a) == pytest.approx(ren, rel=1e-8, abs=1e-12)
        assert sandwiched(rho, sigma, a) == pytest.approx(ren, rel=1e-8, abs=1e-12)

    @given(seeds, alphas)
    def test_alpha_z_specializations(self, seed, a):
        g = Rng(seed)
        rho, sigma = random_matrix("density", 3, g), random_matrix("density", 3, g)
        assert abs(alpha_z(rho, sigma, AlphaZ(a, 1)) - renyi_alpha(rho, sigma, a)) <= 1e-12 * max(1, abs(renyi_alpha(rho, sigma, a))) + 1e-12
        assert abs(alpha_z(rho, sigma, AlphaZ(a, a)) - sandwiched(rho, sigma, a)) <= 1e-12 * max(1, abs(sandwiched(rho, sigma, a))) + 1e-12

    @given(seeds)
    def test_unitary_invariance(self, seed):
        g = Rng(seed)
        rho, sigma = random_matrix("density", 3, g), random_matrix("density", 3, g)
        U = random_matrix("unitary", 3, g)
        conj = lambda m: U @ m @ dagger(U)
        for f in (umegaki, d_prime, lambda r, s: alpha_z(r, s, AlphaZ(1.5, 0.8))):
            assert f(conj(rho), conj(sigma)) == pytest.approx(f(rho, sigma), rel=1e-9, abs=1e-12)

    def test_d_prime_differs_from_umegaki(self, rng):
        rho, sigma = random_matrix("density", 3, rng), random_matrix("density", 3, rng)
        assert abs(d_prime(rho, sigma) - umegaki(rho, sigma)) > 1e-3


class TestAlphaZMap:
    @pytest.mark.parametrize(
        "az,want", [((2, 1), (2, -1, 1)), ((0.5, 0.5), (1, 1, 0.5)), ((2, 2), (1, -0.5, 2))]
    )
    def test_az_to_pq(self, az, want):
        assert az_to_pq(AlphaZ(*az)) == pytest.approx(want)

    @pytest.mark.parametrize(
        "az,want", [((2, 1), True), ((2, 0.5), False), ((0.5, 0.4), False), ((0.5, 0.5), True),
                    ((3, 2.5), True), ((3, 1.9), False), ((-0.5, 1), False), ((1.5, 1.6), False)]
    )
    def test_dpi_region(self, az, want):
        assert dpi_region(AlphaZ(*az)) is want

    def test_validation(self):
        with pytest.raises(InvalidExponent):
            AlphaZ(1, 1)
        with pytest.raises(InvalidExponent):
            AlphaZ(2, 0)


class TestDivergenceParsing:
    def test_parse(self):
        d = Divergence.parse("alpha_z:2,0.5")
        assert (d.kind, d.alpha, d.z) == ("alpha_z", 2.0, 0.5)
        assert d.in_dpi_region is False
        assert Divergence.parse("umegaki").in_dpi_region is True
        assert Divergence.parse("d_prime").in_dpi_region is False
        assert Divergence.parse("sandwiched:2").in_dpi_region is True

    def test_label_round_trip(self):
        for text in ("alpha_z:2.0,0.5", "renyi:0.5", "umegaki"):
            assert Divergence.parse(Divergence.parse(text).label) == Divergence.parse(text)

    def test_unknown(self):
        with pytest.raises(ValueError):
            Divergence.parse("petz")

    def test_call(self, rng):
        rho, sigma = random_matrix("density", 2, rng), random_matrix("density", 2, rng)
        assert Divergence.parse("renyi:0.5")(rho, sigma) == pytest.approx(renyi_alpha(rho, sigma, 0.5))
