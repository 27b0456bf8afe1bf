"""Variational (min/max) representations of Schatten quasi-norm traces.

For exponents ``1/r0 = 1/r1 + 1/r2`` and invertible ``X, Y``::

    Tr|XY|^r0 = min_Z (r0/r1) Tr|XZ|^r1 + (r0/r2) Tr|Z^-1 Y|^r2
    Tr|XY|^r1 = max_Z (r1/r0) Tr|XZ|^r0 - (r1/r2) Tr|Y^-1 Z|^r2

with explicit optimizers built from the polar decomposition of ``Y*X*``.
The module also covers the n-factor versions and the concrete
reductions used to pass from ``psi`` to the one-variable functional
``upsilon`` and from there to ``Tr K*A^pKZ^{1-p}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidExponent, OutOfRegion, SingularMatrix
from .linalg import as_matrix, dagger, matrix_power, polar, schatten, singular_values, trace
from .sampling import Rng, random_matrix
from .trace_functions import PsiParams, psi, upsilon

__all__ = [
    "HolderTriple",
    "ChainPlan",
    "ReductionPlan",
    "ReductionReport",
    "ChainResult",
    "inverse",
    "min_objective",
    "max_objective",
    "optimal_z_min",
    "optimal_z_max",
    "holder_bound",
    "chain_min_objective",
    "chain_max_objective",
    "chain_optimal_min",
    "chain_optimal_max",
    "chain_min",
    "chain_max",
    "reduction_plan",
    "reduction_objective",
    "reduction_optimizer",
    "reduction_lhs",
    "verify_reduction",
    "REDUCTION_CASES",
]

EXPONENT_TOL = 1e-12


@dataclass(frozen=True)
class HolderTriple:
    r0: float
    r1: float
    r2: float

    def __post_init__(self):
        if min(self.r0, self.r1, self.r2) <= 0:
            raise InvalidExponent("Holder exponents must be positive")
        if abs(1 / self.r0 - 1 / self.r1 - 1 / self.r2) > EXPONENT_TOL:
            raise InvalidExponent(f"1/r0 != 1/r1 + 1/r2 for {self}")

    @classmethod
    def from_r1_r2(cls, r1: float, r2: float) -> "HolderTriple":
        return cls(1.0 / (1.0 / r1 + 1.0 / r2), r1, r2)


def inverse(Z) -> np.ndarray:
    """Matrix inverse, refusing inputs with condition number above 1e12."""
    Z = as_matrix(Z)
    sv = singular_values(Z)
    if np.any(sv[..., 0] <= 1e-12 * sv[..., -1]):
        raise SingularMatrix("matrix is numerically singular")
    return np.linalg.inv(Z)


def min_objective(X, Y, Z, triple: HolderTriple):
    r0, r1, r2 = triple.r0, triple.r1, triple.r2
    Zi = inverse(Z)
    return (r0 / r1) * schatten(X @ Z, r1) + (r0 / r2) * schatten(Zi @ Y, r2)


def max_objective(X, Y, Z, triple: HolderTriple):
    r0, r1, r2 = triple.r0, triple.r1, triple.r2
    Yi = inverse(Y)
    return (r1 / r0) * schatten(X @ Z, r0) - (r1 / r2) * schatten(Yi @ Z, r2)


def _polar_of_product(X, Y):
    # Y* X* = U |Y* X*|
    return polar(dagger(Y) @ dagger(X))


def optimal_z_min(X, Y, triple: HolderTriple) -> np.ndarray:
    """Minimizer ``Z = Y U |Y*X*|^{-r1/(r1+r2)}``."""
    U, H = _polar_of_product(X, Y)
    return Y @ U @ matrix_power(H, -triple.r1 / (triple.r1 + triple.r2))


def optimal_z_max(X, Y, triple: HolderTriple) -> np.ndarray:
    """Maximizer ``Z = Y U |Y*X*|^{r1/r2}``."""
    U, H = _polar_of_product(X, Y)
    return Y @ U @ matrix_power(H, triple.r1 / triple.r2)


@dataclass(frozen=True)
class HolderChain:
    lhs: float
    holder: float
    young: float

    def __iter__(self):
        return iter((self.lhs, self.holder))


def holder_bound(X, Y, Z, triple: HolderTriple) -> HolderChain:
    """``Tr|XY|^r0 <= ||XZ||^r0_r1 ||Z^-1 Y||^r0_r2 <= min_objective``.

    Iterating the result yields ``(lhs, holder)``; the Young-inequality
    upper bound is in ``.young``.
    """
    r0, r1, r2 = triple.r0, triple.r1, triple.r2
    a = schatten(X @ Z, r1)
    b = schatten(inverse(Z) @ Y, r2)
    return HolderChain(
        lhs=schatten(X @ Y, r0),
        holder=a ** (r0 / r1) * b ** (r0 / r2),
        young=(r0 / r1) * a + (r0 / r2) * b,
    )


# ---------------------------------------------------------------- n factors


@dataclass(frozen=True)
class ChainPlan:
    """Exponents ``r_0..r_n`` with ``1/r_0 = sum_{j>=1} 1/r_j``.

    ``alphas[j-1] = sum_{k<=j} r0/r_k - 1`` are the minimizer powers and
    ``betas[j-1] = sum_{k>j} r1/r_k`` the maximizer powers, ``j = 1..n-1``.
    """

    exponents: tuple[float, ...]
    alphas: tuple[float, ...] = field(init=False)
    betas: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        r = tuple(float(x) for x in self.exponents)
        if len(r) < 3:
            raise InvalidExponent("a chain needs at least two factors")
        if min(r) <= 0:
            raise InvalidExponent("chain exponents must be positive")
        if abs(1 / r[0] - sum(1 / x for x in r[1:])) > EXPONENT_TOL:
            raise InvalidExponent("1/r0 must equal the sum of 1/r_j")
        n = len(r) - 1
        alphas = tuple(sum(r[0] / r[k] for k in range(1, j + 1)) - 1 for j in range(1, n))
        betas = tuple(sum(r[1] / r[k] for k in range(j + 1, n + 1)) for j in range(1, n))
        object.__setattr__(self, "exponents", r)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "betas", betas)

    @classmethod
    def from_factors(cls, *rj: float) -> "ChainPlan":
        return cls((1.0 / sum(1.0 / x for x in rj), *rj))

    @property
    def n(self) -> int:
        return len(self.exponents) - 1


@dataclass
class ChainResult:
    lhs: float
    objective: float
    Zs: list

    @property
    def rel_error(self) -> float:
        return abs(self.objective - self.lhs) / max(abs(self.lhs), 1.0)


def _check_chain(Xs, plan: ChainPlan):
    Xs = [as_matrix(X) for X in Xs]
    if len(Xs) != plan.n:
        raise DimensionMismatch(f"plan has {plan.n} factors, got {len(Xs)} matrices")
    return Xs


def _product(mats):
    out = mats[0]
    for m in mats[1:]:
        out = out @ m
    return out


def chain_min_objective(Xs, Zs, plan: ChainPlan):
    """``(r0/r1)Tr|X1Z1|^r1 + sum (r0/rj)Tr|Z_{j-1}^-1 Xj Zj|^rj + (r0/rn)Tr|Z_{n-1}^-1 Xn|^rn``."""
    Xs = _check_chain(Xs, plan)
    r = plan.exponents
    n = plan.n
    Zi = [inverse(Z) for Z in Zs]
    total = (r[0] / r[1]) * schatten(Xs[0] @ Zs[0], r[1])
    for j in range(2, n):
        total = total + (r[0] / r[j]) * schatten(Zi[j - 2] @ Xs[j - 1] @ Zs[j - 1], r[j])
    return total + (r[0] / r[n]) * schatten(Zi[n - 2] @ Xs[n - 1], r[n])


def chain_max_objective(Xs, Zs, plan: ChainPlan):
    """``(r1/r0)Tr|X1Z1|^r0 - sum (r1/rj)Tr|Zj^-1 Xj^-1 Z_{j-1}|^rj - (r1/rn)Tr|Xn^-1 Z_{n-1}|^rn``."""
    Xs = _check_chain(Xs, plan)
    r = plan.exponents
    n = plan.n
    Zi = [inverse(Z) for Z in Zs]
    Xi = [inverse(X) for X in Xs]
    total = (r[1] / r[0]) * schatten(Xs[0] @ Zs[0], r[0])
    for j in range(2, n):
        total = total - (r[1] / r[j]) * schatten(Zi[j - 1] @ Xi[j - 1] @ Zs[j - 2], r[j])
    return total - (r[1] / r[n]) * schatten(Xi[n - 1] @ Zs[n - 2], r[n])


def _chain_optimizer(Xs, powers):
    # X_n* ... X_1* = U |X_n* ... X_1*|
    U, H = polar(dagger(_product(Xs)))
    Zs = []
    for j, a in enumerate(powers, start=1):
        Zs.append(_product(Xs[j:]) @ U @ matrix_power(H, a))
    return Zs


def chain_optimal_min(Xs, plan: ChainPlan) -> list:
    """``Z_j = X_{j+1}...X_n U |X_n*...X_1*|^{alpha_j}``."""
    return _chain_optimizer(_check_chain(Xs, plan), plan.alphas)


def chain_optimal_max(Xs, plan: ChainPlan) -> list:
    """``Z_j = X_{j+1}...X_n U |X_n*...X_1*|^{beta_j}``.

    With these choices every factor of the telescoping product
    ``X1 Z1 = (X1...Xn)(Xn^-1 Z_{n-1})...(Z_2^-1 X_2^-1 Z_1)`` becomes a
    power of the same positive matrix, which is the equality case of the
    Holder and Young steps.
    """
    return _chain_optimizer(_check_chain(Xs, plan), plan.betas)


def chain_min(Xs, plan: ChainPlan) -> ChainResult:
    Xs = _check_chain(Xs, plan)
    Zs = chain_optimal_min(Xs, plan)
    return ChainResult(schatten(_product(Xs), plan.exponents[0]), chain_min_objective(Xs, Zs, plan), Zs)


def chain_max(Xs, plan: ChainPlan) -> ChainResult:
    Xs = _check_chain(Xs, plan)
    Zs = chain_optimal_max(Xs, plan)
    return ChainResult(schatten(_product(Xs), plan.exponents[1]), chain_max_objective(Xs, Zs, plan), Zs)


# ---------------------------------------------------------------- reductions

_EPS = 1e-12


def _between(lo, x, hi):
    return lo - _EPS <= x <= hi + _EPS


def _region_step1(p, q, s):
    return 0 < q and _between(0, q, p) and p <= 1 + _EPS and 0 < s <= 1 / (p + q) + _EPS


def _region_step2(p, q, s):
    return _between(-1, q, p) and p <= _EPS and q < 0 and s > 0


def _region_step3(p, q, s):
    return (
        _between(-1, q, 0)
        and q < 0
        and _between(1, p, 2)
        and not (abs(p - 1) < _EPS and abs(q + 1) < _EPS)
        and s >= 1 / (p + q) - _EPS
    )


REDUCTION_CASES = {
    # two-variable psi -> one-variable upsilon
    "step1": "psi jointly concave, 0<q<=p<=1, 0<s<=1/(p+q): min form",
    "step2": "psi jointly convex, -1<=q<=p<=0, q<0, s>0: max form",
    "step3": "psi jointly convex, -1<=q<0, 1<=p<=2, s>=1/(p+q): max form",
    # upsilon_{p,s} -> upsilon_{p,1/p} or upsilon_{p,1}
    "upsilon_concave": "0<p<=1, 0<s<1/p: min form",
    "upsilon_convex_negative": "-1<=p<0, s>1: max form",
    "upsilon_convex": "1<=p<=2, s>1/p: max form",
    # upsilon -> Tr K*A^pKZ^{1-p} over positive definite Z
    "epstein": "0<p<1, s=1/p: max over PD Z (alias step3a)",
    "hiai": "-1<=p<0, 0<s<1: min over PD Z (alias step3b)",
    "carlen_lieb": "1<p<=2, s=1/p: min over PD Z",
}
_ALIASES = {"step3a": "epstein", "step3b": "hiai", "step3c": "carlen_lieb"}


@dataclass(frozen=True)
class ReductionPlan:
    case: str
    p: float
    q: float
    s: float
    triple: HolderTriple
    mode: str  # "min" or "max"
    lam: float | None = None
    t: float | None = None
    positive_z: bool = False


def reduction_plan(p: float, q: float, s: float, case: str) -> ReductionPlan:
    """Exponent bookkeeping for one reduction; ``q`` is ignored by one-variable cases."""
    case = _ALIASES.get(case, case)
    p, q, s = float(p), float(q), float(s)
    bad = OutOfRegion(f"(p, q, s) = ({p}, {q}, {s}) is outside case {case!r}")
    if case == "step1":
        if not _region_step1(p, q, s):
            raise bad
        lam = s * (p + q)
        return ReductionPlan(case, p, q, s, HolderTriple(2 * s, 2 * lam / p, 2 * lam / q), "min", lam=lam)
    if case in ("step2", "step3"):
        if not (_region_step2 if case == "step2" else _region_step3)(p, q, s):
            raise bad
        t = 1.0 / (1.0 / s - q)
        return ReductionPlan(case, p, q, s, HolderTriple(2 * t, 2 * s, -2 / q), "max", t=t)
    if case == "upsilon_concave":
        if not (0 < p <= 1 + _EPS and 0 < s < 1 / p):
            raise bad
        t = 1.0 / (1.0 / s - p)
        return ReductionPlan(case, p, q, s, HolderTriple(2 * s, 2 / p, 2 * t), "min", t=t)
    if case == "upsilon_convex_negative":
        if not (-1 - _EPS <= p < 0 and s > 1):
            raise bad
        return ReductionPlan(case, p, q, s, HolderTriple(2.0, 2 * s, 2 * s / (s - 1)), "max")
    if case == "upsilon_convex":
        if not (_between(1, p, 2) and s > 1 / p):
            raise bad
        t = 1.0 / (p - 1.0 / s)
        return ReductionPlan(case, p, q, s, HolderTriple(2 / p, 2 * s, 2 * t), "max", t=t)
    if case == "epstein":
        if not (0 < p < 1 and abs(s - 1 / p) < _EPS * max(1, 1 / p)):
            raise bad
        return ReductionPlan(case, p, q, 1 / p, HolderTriple(2.0, 2 / p, 2 / (1 - p)), "max", positive_z=True)
    if case == "hiai":
        if not (-1 - _EPS <= p < 0 and 0 < s < 1):
            raise bad
        return ReductionPlan(case, p, q, s, HolderTriple(2 * s, 2.0, 2 * s / (1 - s)), "min", positive_z=True)
    if case == "carlen_lieb":
        if not (1 < p <= 2 + _EPS and abs(s - 1 / p) < _EPS):
            raise bad
        return ReductionPlan(case, p, q, 1 / p, HolderTriple(2 / p, 2.0, 2 / (p - 1)), "min", positive_z=True)
    raise ValueError(f"unknown reduction case {case!r}")


def _xy(plan: ReductionPlan, A, B, K):
    """The (X, Y) pair the variational identity is applied to."""
    p, q = plan.p, plan.q
    Ap = matrix_power(A, p / 2)
    if plan.case in ("step1", "step2", "step3"):
        return Ap @ K, matrix_power(B, q / 2)
    if plan.case.startswith("upsilon"):
        return Ap, K
    return Ap @ K, np.eye(A.shape[-1], dtype=np.complex128)


def reduction_lhs(plan: ReductionPlan, A, B, K) -> float:
    if plan.case in ("step1", "step2", "step3"):
        return psi(A, B, K, PsiParams(plan.p, plan.q, plan.s))
    return upsilon(A, K, plan.p, plan.s)


def reduction_objective(plan: ReductionPlan, A, B, K, Z):
    """The variational objective written in the form the reduction uses.

    For the positive-definite cases ``Z`` must be positive definite and
    the objective is expressed through ``Tr K*A^pK Z^{1-p}``.
    """
    p, q, s = plan.p, plan.q, plan.s
    c = plan.case
    if c == "step1":
        lam = plan.lam
        Zi = inverse(Z)
        return (p / (p + q)) * upsilon(A, K @ Z, p, lam / p) + (q / (p + q)) * upsilon(B, dagger(Zi), q, lam / q)
    if c in ("step2", "step3"):
        t = plan.t
        return (s / t) * upsilon(A, K @ Z, p, t) + s * q * upsilon(B, Z, -q, -1 / q)
    if c == "upsilon_concave":
        t = plan.t
        return s * p * upsilon(A, Z, p, 1 / p) + (s / t) * schatten(inverse(Z) @ K, 2 * t)
    if c == "upsilon_convex_negative":
        return s * upsilon(A, Z, p, 1.0) - (s - 1) * schatten(inverse(K) @ Z, 2 * s / (s - 1))
    if c == "upsilon_convex":
        t = plan.t
        return s * p * upsilon(A, Z, p, 1 / p) - (s / t) * schatten(inverse(K) @ Z, 2 * t)
    main = trace(dagger(K) @ matrix_power(A, p) @ K @ matrix_power(Z, 1 - p))
    if c == "epstein":
        return main / p - ((1 - p) / p) * trace(Z)
    if c == "hiai":
        return s * main + (1 - s) * trace(matrix_power(Z, s * (1 - p) / (s - 1)))
    if c == "carlen_lieb":
        return main / p + ((p - 1) / p) * trace(Z)
    raise ValueError(c)


def reduction_optimizer(plan: ReductionPlan, A, B, K) -> np.ndarray:
    """Explicit optimizer; PD cases transport ``Z -> ZZ* -> (ZZ*)^{1/(1-p)}``."""
    X, Y = _xy(plan, A, B, K)
    Z = (optimal_z_min if plan.mode == "min" else optimal_z_max)(X, Y, plan.triple)
    if plan.positive_z:
        W = Z @ dagger(Z)
        Z = matrix_power(0.5 * (W + dagger(W)), 1 / (1 - plan.p))
    return Z


@dataclass
class ReductionReport:
    case: str
    lhs: float
    optimum: float
    rel_error: float
    trials: int
    violations: int
    worst_gap: float
    scale: float

    @property
    def ok(self) -> bool:
        return self.rel_error <= 1e-8 and self.violations == 0


def verify_reduction(A, B, K, p, q, s, case: str, rng: Rng, trials: int = 100) -> ReductionReport:
    """Check one reduction: identity at the explicit optimizer plus the
    one-sided bound over ``trials`` random ``Z``.

    ``worst_gap`` is the largest amount (relative to ``scale = max(lhs, 1)``)
    by which a random ``Z`` beat the optimum in the wrong direction; values
    above ``1e-10`` count as violations.
    """
    A = as_matrix(A)
    B = as_matrix(B) if B is not None else np.eye(A.shape[-1], dtype=np.complex128)
    K = np.eye(A.shape[-1], dtype=np.complex128) if K is None else as_matrix(K)
    plan = reduction_plan(p, q, s, case)
    lhs = reduction_lhs(plan, A, B, K)
    opt = reduction_objective(plan, A, B, K, reduction_optimizer(plan, A, B, K))
    scale = max(abs(lhs), 1.0)
    kind = "pd" if plan.positive_z else "well_conditioned"
    Zs = random_matrix(kind, A.shape[-1], rng, size=trials)
    vals = np.atleast_1d(reduction_objective(plan, A, B, K, Zs))
    gaps = (lhs - vals) if plan.mode == "min" else (vals - lhs)
    gaps = gaps / scale
    return ReductionReport(
        case=plan.case,
        lhs=float(lhs),
        optimum=float(opt),
        rel_error=abs(opt - lhs) / scale,
        trials=trials,
        violations=int(np.sum(gaps > 1e-10)),
        worst_gap=float(np.max(gaps)) if trials else float("-inf"),
        scale=scale,
    )
