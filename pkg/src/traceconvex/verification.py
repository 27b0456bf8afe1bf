"""Batched numerical checks of the variational identities.

Each suite returns a :class:`SuiteResult` with the worst relative error at
the explicit optimizers and the number of random ``Z`` that beat the
optimum in the forbidden direction by more than ``1e-10 * scale``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrix
from .linalg import schatten
from .sampling import Rng, random_matrix
from .variational import (
    REDUCTION_CASES,
    ChainPlan,
    HolderTriple,
    chain_max_objective,
    chain_min_objective,
    chain_optimal_max,
    chain_optimal_min,
    max_objective,
    min_objective,
    optimal_z_max,
    optimal_z_min,
    verify_reduction,
)

__all__ = [
    "SuiteResult",
    "DEFAULT_TRIPLES",
    "identity_suite",
    "chain_suite",
    "reduction_suite",
    "sample_case_params",
    "SUITES",
]

IDENTITY_TOL = 1e-8
BOUND_TOL = 1e-10

DEFAULT_TRIPLES = tuple(
    HolderTriple.from_r1_r2(r1, r2) for r1 in (0.5, 1.0, 2.0, 3.0, 4.5) for r2 in (0.7, 1.0, 2.0, 5.0)
)


@dataclass
class SuiteResult:
    name: str
    checks: int
    max_rel_error: float
    bound_checks: int
    bound_violations: int
    redrawn: int = 0

    @property
    def ok(self) -> bool:
        return self.max_rel_error <= IDENTITY_TOL and self.bound_violations == 0


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b) / np.maximum(np.abs(b), 1.0)


def identity_suite(dims=(2, 3, 4), trials: int = 500, triples=DEFAULT_TRIPLES, rng: Rng | None = None, z_samples: int = 10_000) -> SuiteResult:
    """Min and max two-factor identities for random invertible ``X, Y``.

    ``z_samples`` random ``Z`` are spread over all (dim, triple) cells and
    tested against both one-sided bounds.
    """
    rng = rng or Rng(0)
    worst, checks, bchecks, bad = 0.0, 0, 0, 0
    per_cell = max(1, -(-z_samples // (len(dims) * len(triples))))
    for d in dims:
        X = random_matrix("invertible", d, rng, size=trials)
        Y = random_matrix("invertible", d, rng, size=trials)
        for t in triples:
            lhs_min = schatten(X @ Y, t.r0)
            lhs_max = schatten(X @ Y, t.r1)
            got_min = min_objective(X, Y, optimal_z_min(X, Y, t), t)
            got_max = max_objective(X, Y, optimal_z_max(X, Y, t), t)
            worst = max(worst, float(np.max(_rel(got_min, lhs_min))), float(np.max(_rel(got_max, lhs_max))))
            checks += 2 * trials
            Z = random_matrix("well_conditioned", d, rng, size=per_cell)
            idx = np.arange(per_cell) % trials  # cycle through the (X, Y) pairs
            Xb, Yb, lo, hi = X[idx], Y[idx], lhs_min[idx], lhs_max[idx]
            bad += int(np.sum(lo - min_objective(Xb, Yb, Z, t) > BOUND_TOL * np.maximum(lo, 1.0)))
            bad += int(np.sum(max_objective(Xb, Yb, Z, t) - hi > BOUND_TOL * np.maximum(hi, 1.0)))
            bchecks += 2 * per_cell
    return SuiteResult("identity", checks, worst, bchecks, bad)


def chain_suite(n: int = 3, dims=(2, 3), trials: int = 200, rng: Rng | None = None, z_samples: int = 20) -> SuiteResult:
    """n-factor min and max identities.

    ``r_1`` is log-uniform on [0.5, 2] and ``r_2..r_n`` on [1, 4].  The
    max optimizer carries ``|M*|^{beta_j}`` with ``beta_j`` up to about
    ``(n - 1) r_1``, so its condition number grows like a power of that of
    the product; draws whose optimizer is numerically singular are redrawn
    and counted in ``redrawn``.
    """
    rng = rng or Rng(0)
    worst, checks, bchecks, bad, redrawn = 0.0, 0, 0, 0, 0
    for d in dims:
        done = 0
        while done < trials:
            rj = [np.exp(rng.uniform(np.log(0.5), np.log(2.0)))]
            rj += list(np.exp(rng.uniform(np.log(1.0), np.log(4.0), size=n - 1)))
            plan = ChainPlan.from_factors(*rj)
            Xs = [random_matrix("invertible", d, rng) for _ in range(n)]
            prod = Xs[0]
            for x in Xs[1:]:
                prod = prod @ x
            try:
                zmin = chain_optimal_min(Xs, plan)
                zmax = chain_optimal_max(Xs, plan)
                got_min = chain_min_objective(Xs, zmin, plan)
                got_max = chain_max_objective(Xs, zmax, plan)
            except SingularMatrix:
                redrawn += 1
                continue
            done += 1
            lhs_min = schatten(prod, plan.exponents[0])
            lhs_max = schatten(prod, plan.exponents[1])
            worst = max(worst, float(_rel(got_min, lhs_min)), float(_rel(got_max, lhs_max)))
            checks += 2
            Zs = [random_matrix("well_conditioned", d, rng, size=z_samples) for _ in range(n - 1)]
            bad += int(np.sum(lhs_min - chain_min_objective(Xs, Zs, plan) > BOUND_TOL * max(lhs_min, 1.0)))
            bad += int(np.sum(chain_max_objective(Xs, Zs, plan) - lhs_max > BOUND_TOL * max(lhs_max, 1.0)))
            bchecks += 2 * z_samples
    return SuiteResult(f"chain(n={n})", checks, worst, bchecks, bad, redrawn)


def sample_case_params(case: str, rng: Rng) -> tuple[float, float, float]:
    """A random ``(p, q, s)`` strictly inside the region of ``case``."""
    u = lambda lo, hi: float(rng.uniform(lo, hi))
    if case == "step1":
        p = u(0.05, 1.0)
        q = u(0.05, p)
        return p, q, u(0.05, 1.0) / (p + q)
    if case == "step2":
        q = u(-1.0, -0.05)
        return u(q, 0.0), q, u(0.1, 3.0)
    if case == "step3":
        while True:
            p, q = u(1.0, 2.0), u(-1.0, -0.05)
            if p + q >= 0.2:
                return p, q, 1 / (p + q) + u(0.0, 2.0)
    if case == "upsilon_concave":
        p = u(0.05, 1.0)
        return p, 0.0, u(0.05, 0.95) / p
    if case == "upsilon_convex_negative":
        return u(-1.0, -0.05), 0.0, u(1.05, 4.0)
    if case == "upsilon_convex":
        p = u(1.0, 2.0)
        return p, 0.0, 1 / p + u(0.05, 2.0)
    if case == "epstein":
        p = u(0.05, 0.95)
        return p, 0.0, 1 / p
    if case == "hiai":
        return u(-1.0, -0.05), 0.0, u(0.05, 0.95)
    if case == "carlen_lieb":
        p = u(1.05, 2.0)
        return p, 0.0, 1 / p
    raise ValueError(case)


def reduction_suite(cases=None, dim: int = 3, instances: int = 200, rng: Rng | None = None, z_samples: int = 10) -> dict:
    """One :class:`SuiteResult` per reduction case."""
    rng = rng or Rng(0)
    out = {}
    for case in cases or REDUCTION_CASES:
        worst, bad = 0.0, 0
        for i in range(instances):
            r = rng.child(i)
            p, q, s = sample_case_params(case, r)
            A = random_matrix("pd", dim, r)
            B = random_matrix("pd", dim, r)
            K = random_matrix("invertible", dim, r)
            rep = verify_reduction(A, B, K, p, q, s, case, r, trials=z_samples)
            worst = max(worst, rep.rel_error)
            bad += rep.violations
        out[case] = SuiteResult(f"reduction:{case}", instances, worst, instances * z_samples, bad)
    return out


SUITES = ("identity", "chain", "reduction")
