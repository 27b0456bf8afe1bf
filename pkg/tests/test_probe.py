import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from traceconvex import report
from traceconvex.errors import InvalidExponent
from traceconvex.probe import (
    CRITICAL,
    Label,
    ProbeConfig,
    agrees,
    classify,
    doubling_check,
    grid_nodes,
    midpoint_margin,
    probe_point,
    probe_skew,
    probe_three_var,
    probe_upsilon,
    scan_grid,
    search_counterexample,
    theory_label,
    upsilon_theory,
)
from traceconvex.sampling import Rng, random_matrix
from traceconvex.trace_functions import psi

FIXTURES = Path(__file__).parent / "fixtures"
L = Label


class TestDecisionTable:
    def test_classify(self):
        assert classify(0, 3, False) is L.CONVEX_CONSISTENT
        assert classify(2, 0, False) is L.CONCAVE_CONSISTENT
        assert classify(1, 1, True) is L.NEITHER
        assert classify(0, 0, True) is L.LINEAR_CONSISTENT
        assert classify(0, 0, False) is L.INCONCLUSIVE

    def test_agrees(self):
        assert agrees(L.CONCAVE_CONSISTENT, 5, 0)
        assert not agrees(L.CONCAVE_CONSISTENT, 0, 1)
        assert not agrees(L.CONVEX_CONSISTENT, 1, 0)
        assert agrees(L.NEITHER, 4, 4)
        assert not agrees(L.LINEAR_CONSISTENT, 0, 1)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ProbeConfig(trials=0)
        with pytest.raises(ValueError):
            ProbeConfig(k_mode="cheese")
        assert ProbeConfig(k_mode="random").k_mode == "random_fixed"


class TestTheoryLabel:
    @pytest.mark.parametrize(
        "pqs,label",
        [((0.5, 0.5, 1), L.CONCAVE_CONSISTENT), ((1, -1, 5), L.NEITHER), ((2, -1, 0.5), L.NEITHER),
         ((2, -1, 1), L.CONVEX_CONSISTENT), ((-0.5, -0.5, 3), L.CONVEX_CONSISTENT),
         ((1, 0, 1), L.LINEAR_CONSISTENT), ((0, 1, 1), L.LINEAR_CONSISTENT), ((1, 1, 1), L.NEITHER),
         ((0.5, 0.5, 2), L.NEITHER), ((1, -1, 2), L.NEITHER), ((0.5, 0.25, 0.4), L.CONCAVE_CONSISTENT),
         ((2, -0.5, 2 / 3), L.CONVEX_CONSISTENT), ((2.5, -1, 1), L.NEITHER)]
    )
    def test_examples(self, pqs, label):
        assert theory_label(*pqs) is label

    def test_boundary_snap(self):
        assert theory_label(0.5, 0.25, 1 / 0.75 + 5e-10) is L.CONCAVE_CONSISTENT

    def test_excluded(self):
        with pytest.raises(InvalidExponent):
            theory_label(0, 0, 1)

    @given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-3, 3).filter(lambda s: abs(s) > 1e-3))
    def test_symmetry_invariance(self, p, q, s):
        if abs(p) + abs(q) < 1e-9:
            return
        lab = theory_label(p, q, s)
        assert theory_label(q, p, s) is lab
        assert theory_label(-p, -q, -s) is lab

    def test_upsilon_theory(self):
        assert upsilon_theory(0.5, 2) is L.CONCAVE_CONSISTENT
        assert upsilon_theory(-0.5, 3) is L.CONVEX_CONSISTENT
        assert upsilon_theory(2, 0.5) is L.CONVEX_CONSISTENT
        assert upsilon_theory(1, 1) is L.LINEAR_CONSISTENT
        assert upsilon_theory(0.5, 3) is L.NEITHER


class TestMidpointMargin:
    def test_equal_points(self, rng):
        A, B = random_matrix("pd", 3, rng), random_matrix("pd", 3, rng)
        f = lambda a, b: psi(a, b, None, (0.3, 0.4, 1.2))
        assert midpoint_margin(f, (A, B), (A, B)) == pytest.approx(0, abs=1e-13)

    def test_linear(self, rng):
        A1, A2, B1, B2 = (random_matrix("pd", 3, rng) for _ in range(4))
        f = lambda a, b: psi(a, b, None, (1, 0, 1))
        assert abs(midpoint_margin(f, (A1, B1), (A2, B2))) <= 1e-12

    def test_bilinear_oracle(self, rng):
        # [f11 + f22]/2 - f(mid) = +(1/4) Tr K*(A1-A2)K(B1-B2) for bilinear f
        signs = set()
        for _ in range(200):
            A1, A2, B1, B2 = (random_matrix("pd", 2, rng) for _ in range(4))
            K = random_matrix("invertible", 2, rng)
            f = lambda a, b: psi(a, b, K, (1, 1, 1))
            want = 0.25 * np.trace(K.conj().T @ (A1 - A2) @ K @ (B1 - B2)).real
            got = midpoint_margin(f, (A1, B1), (A2, B2))
            assert got == pytest.approx(want, rel=1e-9, abs=1e-12)
            signs.add(np.sign(want))
        assert signs >= {-1.0, 1.0}


class TestProbePoint:
    def test_concave_region(self):
        res = probe_point(0.5, 0.5, 1, ProbeConfig(dim=3, trials=1000))
        assert res.concave_violations == 0 and res.convex_violations > 0

    def test_convex_region(self):
        res = probe_point(2, -1, 1, ProbeConfig(dim=3, trials=1000))
        assert res.convex_violations == 0 and res.concave_violations > 0

    def test_sign_indefinite(self):
        res = probe_point(1, 1, 1, ProbeConfig(dim=2, trials=1000))
        assert res.convex_violations >= 1 and res.concave_violations >= 1
        assert res.empirical is L.NEITHER
        for w in res.witnesses.values():
            assert w.violates

    def test_linear_point(self):
        res = probe_point(1, 0, 1, ProbeConfig(dim=3, trials=200))
        assert res.empirical is L.LINEAR_CONSISTENT

    def test_determinism(self):
        cfg = ProbeConfig(dim=3, trials=100, seed=5, k_mode="random")
        a, b = probe_point(0.7, -0.3, 1.5, cfg), probe_point(0.7, -0.3, 1.5, cfg)
        assert (a.convex_violations, a.concave_violations) == (b.convex_violations, b.concave_violations)

    def test_more_trials_never_flip(self):
        # extra trials may add violations of the other sign, never swap labels
        small = probe_point(0.5, 0.5, 1, ProbeConfig(dim=3, trials=50))
        big = probe_point(0.5, 0.5, 1, ProbeConfig(dim=3, trials=500))
        assert big.empirical in (small.empirical, L.NEITHER)

    def test_zero_s(self):
        with pytest.raises(InvalidExponent):
            probe_point(1, 0, 0, ProbeConfig())


class TestScan:
    def test_single_node(self):
        rep = scan_grid([0.5], [0.5], [1], ProbeConfig(trials=100))
        assert len(rep) == 1 and rep.all_agree

    def test_empty(self):
        assert len(scan_grid([0.5], [0.5], [], ProbeConfig(trials=10))) == 0

    def test_grid_nodes_critical(self):
        nodes = grid_nodes([0.5, -1], [0.5], [1, CRITICAL])
        assert nodes == [(0.5, 0.5, 1.0), (-1.0, 0.5, 1.0)]

    def test_unit_grid_partition(self):
        vals = np.arange(-1, 2.01, 0.5)
        rep = scan_grid(vals, vals, [1], ProbeConfig(dim=3, trials=100))
        assert rep.all_agree
        labels = {(e.p, e.q): e.theoretical for e in rep}
        assert labels[(0.5, 0.5)] is L.CONCAVE_CONSISTENT
        assert labels[(2.0, -1.0)] is L.CONVEX_CONSISTENT
        assert labels[(-0.5, -1.0)] is L.CONVEX_CONSISTENT
        assert labels[(1.0, -1.0)] is L.NEITHER
        assert labels[(0.0, 0.0)] is L.LINEAR_CONSISTENT
        for e in rep:
            if e.empirical is L.NEITHER:
                assert all(w.violates for w in e.witnesses.values())


class TestSearch:
    def test_bilinear_point(self):
        w = search_counterexample(1, 1, 1, "concavity", 2, 1000, Rng(1))
        assert w is not None and w.reverify() > 10 * w.tau

    def test_above_critical(self):
        w = search_counterexample(0.5, 0.5, 2, "concavity", 2, 10_000, Rng(2))
        assert w is not None and w.violates

    def test_none_inside_region(self):
        assert search_counterexample(0.5, 0.5, 1, "concavity", 2, 10_000, Rng(3)) is None

    @pytest.mark.parametrize("name", ["psi_1_1_1", "psi_half_half_2", "psi_2_m1_half", "psi_1_m1_2"])
    def test_stored_witness(self, name):
        w = report.witness_from_dict(json.loads((FIXTURES / f"{name}.json").read_text()))
        m = w.reverify()
        assert m == pytest.approx(w.margin, rel=1e-9)
        assert abs(m) > 10 * w.tau and w.violates


class TestAuxiliary:
    @pytest.mark.parametrize("p", [0.25, 0.5, 0.75])
    def test_skew(self, p):
        res = probe_skew(p, 3, 1000, Rng(7))
        assert res.concave_violations == 0

    def test_skew_commuting(self):
        res = probe_skew(0.5, 3, 200, Rng(7), commuting=True)
        assert res.max_abs_rel_margin <= 1e-12

    def test_skew_symmetry(self):
        a, b = probe_skew(0.25, 3, 300, Rng(9)), probe_skew(0.75, 3, 300, Rng(9))
        assert (a.convex_violations, a.concave_violations) == (b.convex_violations, b.concave_violations)
        assert a.max_abs_rel_margin == pytest.approx(b.max_abs_rel_margin, rel=1e-8)

    @pytest.mark.parametrize("p,s,sign", [(0.5, 2, "concave"), (-0.5, 3, "convex"), (2, 0.5, "convex")])
    def test_upsilon(self, p, s, sign):
        res = probe_upsilon(p, s, 3, 500, Rng(4))
        assert (res.concave_violations if sign == "concave" else res.convex_violations) == 0
        assert res.agrees

    def test_three_var_convex(self):
        res = probe_three_var(-0.5, 2, -0.25, 3, 500, Rng(5))
        assert res.convex_violations == 0 and res.concave_violations > 0

    def test_three_var_not_concave(self):
        assert probe_three_var(1, 1, 1, 3, 500, Rng(5)).concave_violations > 0

    def test_three_var_not_convex(self):
        assert probe_three_var(-0.5, 1, -0.25, 3, 2000, Rng(5)).convex_violations > 0

    def test_doubling_concave(self):
        rep = doubling_check(0.5, 0.5, 1, 2, 300, Rng(6))
        assert rep.consistent
        assert rep.joint.concave_violations == rep.embedded.concave_violations == 0

    def test_doubling_indefinite(self):
        rep = doubling_check(1, 1, 1, 2, 300, Rng(6))
        assert rep.consistent
        assert rep.joint.concave_violations and rep.embedded.concave_violations
        assert rep.joint.convex_violations and rep.embedded.convex_violations
        assert rep.max_abs_diff <= 1e-10
