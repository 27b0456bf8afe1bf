"""Randomized joint convexity/concavity probes and region classification.

A probe draws pairs ``P1 = (A1, B1)``, ``P2 = (A2, B2)`` of positive
definite matrices and records the midpoint margin

    m = [f(P1) + f(P2)] / 2 - f((P1 + P2) / 2).

With ``tau = tol_rel * max(|f(P1)|, |f(P2)|, 1)`` a margin below ``-tau``
refutes convexity and a margin above ``+tau`` refutes concavity.
Sampling can only refute, so labels read "consistent with".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InvalidExponent, NoConvergence, TraceConvexError
from .linalg import _rebuild, as_matrix, dagger, hermitian_eig, schatten
from .sampling import Rng, random_matrix
from .trace_functions import PsiParams, normalize_params, psi, skew_functional, three_var, upsilon

__all__ = [
    "Label",
    "ProbeConfig",
    "MidpointWitness",
    "ProbeResult",
    "ProbeCounts",
    "RegionEntry",
    "RegionReport",
    "SampleSet",
    "CRITICAL",
    "classify",
    "agrees",
    "midpoint_margin",
    "probe_point",
    "theory_label",
    "upsilon_theory",
    "three_var_theory",
    "scan_grid",
    "search_counterexample",
    "probe_skew",
    "probe_upsilon",
    "probe_three_var",
    "doubling_check",
]

BOUNDARY_SNAP = 1e-9
CRITICAL = "crit"


class Label(str, Enum):
    CONCAVE_CONSISTENT = "CONCAVE_CONSISTENT"
    CONVEX_CONSISTENT = "CONVEX_CONSISTENT"
    NEITHER = "NEITHER"
    LINEAR_CONSISTENT = "LINEAR_CONSISTENT"
    INCONCLUSIVE = "INCONCLUSIVE"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ProbeConfig:
    dim: int = 3
    trials: int = 500
    tol_rel: float = 1e-8
    seed: int = 0
    k_mode: str = "identity"
    k_shift: float = 0.0  # use K + k_shift * I

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.tol_rel > 0:
            raise ValueError("tol_rel must be positive")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        mode = {"random": "random_fixed"}.get(self.k_mode, self.k_mode)
        if mode not in ("identity", "random_fixed"):
            raise ValueError(f"unknown k_mode {self.k_mode!r}")
        object.__setattr__(self, "k_mode", mode)

    def fixed_k(self) -> np.ndarray:
        """The K used by every trial: identity, or one seeded invertible draw."""
        eye = np.eye(self.dim, dtype=np.complex128)
        if self.k_mode == "identity":
            K = eye
        else:
            K = random_matrix("invertible", self.dim, Rng(self.seed, 1))
        return K + self.k_shift * eye


def classify(convex_violations: int, concave_violations: int, all_small: bool) -> Label:
    if convex_violations and concave_violations:
        return Label.NEITHER
    if concave_violations:
        return Label.CONVEX_CONSISTENT
    if convex_violations:
        return Label.CONCAVE_CONSISTENT
    return Label.LINEAR_CONSISTENT if all_small else Label.INCONCLUSIVE


def agrees(theoretical: Label, convex_violations: int, concave_violations: int) -> bool:
    """False iff a violation forbidden by ``theoretical`` was recorded."""
    if theoretical in (Label.CONVEX_CONSISTENT, Label.LINEAR_CONSISTENT) and convex_violations:
        return False
    if theoretical in (Label.CONCAVE_CONSISTENT, Label.LINEAR_CONSISTENT) and concave_violations:
        return False
    return True


def midpoint_margin(f: Callable, P1: Sequence, P2: Sequence):
    """``[f(*P1) + f(*P2)]/2 - f(*mid)`` for argument tuples of equal length."""
    P1 = tuple(as_matrix(a) for a in P1)
    P2 = tuple(as_matrix(a) for a in P2)
    mid = tuple(0.5 * (a + b) for a, b in zip(P1, P2))
    return 0.5 * (f(*P1) + f(*P2)) - f(*mid)


def _tau(tol_rel, f1, f2):
    return tol_rel * np.maximum(np.maximum(np.abs(f1), np.abs(f2)), 1.0)


# ---------------------------------------------------------------- theory


def _snap(p, q, s):
    if p + q != 0:
        crit = 1.0 / (p + q)
        if abs(s - crit) < BOUNDARY_SNAP:
            return crit
    return s


def theory_label(p: float, q: float, s: float) -> Label:
    """Joint convexity/concavity of psi for all invertible K.

    Concave iff ``0 <= q <= p <= 1, 0 < s <= 1/(p+q)``; convex iff
    ``-1 <= q <= p <= 0, s > 0`` or ``-1 <= q <= 0, 1 <= p <= 2,
    (p, q) != (1, -1), s >= 1/(p+q)``; neither otherwise.  The single
    point in both regions, ``(1, 0, 1)``, is linear.  Parameters are
    normalized first.
    """
    params, _ = normalize_params(PsiParams(p, q, s))
    p, q, s = params
    if p == 0 and q == 0:
        raise InvalidExponent("(p, q) = (0, 0) is excluded")
    s = _snap(p, q, s)
    concave = 0 <= q <= p <= 1 and 0 < s <= 1 / (p + q)
    convex = (-1 <= q <= p <= 0) or (
        -1 <= q <= 0 and 1 <= p <= 2 and (p, q) != (1, -1) and s >= 1 / (p + q)
    )
    if concave and convex:
        return Label.LINEAR_CONSISTENT
    if concave:
        return Label.CONCAVE_CONSISTENT
    if convex:
        return Label.CONVEX_CONSISTENT
    return Label.NEITHER


def _grid_theory(p, q, s) -> Label:
    # at p = q = 0 psi is Tr|K|^{2s}, constant in (A, B)
    if p == 0 and q == 0:
        return Label.LINEAR_CONSISTENT
    return theory_label(p, q, s)


def upsilon_theory(p: float, s: float) -> Label:
    """Convexity/concavity of ``A -> Tr(K*A^pK)^s`` for all K, ``s > 0``."""
    if p == 0:
        return Label.LINEAR_CONSISTENT
    concave = 0 < p <= 1 and 0 < s <= 1 / p
    convex = (-1 <= p < 0 and s > 0) or (1 <= p <= 2 and s >= 1 / p)
    if concave and convex:
        return Label.LINEAR_CONSISTENT
    if concave:
        return Label.CONCAVE_CONSISTENT
    if convex:
        return Label.CONVEX_CONSISTENT
    return Label.NEITHER


def three_var_theory(p: float, q: float, r: float) -> Label:
    """``||A^{p/2}B^{q/2}C^{r/2}||_F^2`` is never jointly concave and is
    jointly convex iff ``q = 2``, ``p, r < 0`` and ``-1 <= p + r < 0``."""
    if q == 2 and p < 0 and r < 0 and -1 <= p + r < 0:
        return Label.CONVEX_CONSISTENT
    return Label.NEITHER


# ---------------------------------------------------------------- samples


class _Spectral:
    """Eigen-decomposition of a PD stack, reused for many powers."""

    def __init__(self, a: np.ndarray):
        self.w, self.v = hermitian_eig(a)

    def power(self, alpha: float) -> np.ndarray:
        if alpha == 0:
            return np.broadcast_to(np.eye(self.v.shape[-1], dtype=np.complex128), self.v.shape)
        return _rebuild(self.w**alpha, self.v)


@dataclass
class SampleSet:
    """``trials`` pairs ``(A1, B1), (A2, B2)`` of PD matrices with cached spectra."""

    A1: np.ndarray
    B1: np.ndarray
    A2: np.ndarray
    B2: np.ndarray

    def __post_init__(self):
        self.Am = 0.5 * (self.A1 + self.A2)
        self.Bm = 0.5 * (self.B1 + self.B2)
        self._spec = {}

    @classmethod
    def draw(cls, dim: int, trials: int, rng: Rng, kind: str = "pd") -> "SampleSet":
        return cls(*(random_matrix(kind, dim, rng, size=trials) for _ in range(4)))

    @classmethod
    def for_config(cls, config: ProbeConfig) -> "SampleSet":
        return cls.draw(config.dim, config.trials, Rng(config.seed, 0))

    def __len__(self) -> int:
        return self.A1.shape[0]

    def _spectral(self, name: str) -> _Spectral:
        if name not in self._spec:
            self._spec[name] = _Spectral(getattr(self, name))
        return self._spec[name]

    def psi_values(self, params: PsiParams, K: np.ndarray):
        """``(f(P1), f(P2), f(mid))`` for ``f = psi(., .; K, params)``."""
        p, q, s = params
        if s < 0:
            K = dagger(np.linalg.inv(K))
            p, q, s = -p, -q, -s
        out = []
        for a, b in (("A1", "B1"), ("A2", "B2"), ("Am", "Bm")):
            X = self._spectral(a).power(p / 2) @ K @ self._spectral(b).power(q / 2)
            out.append(np.asarray(schatten(X, 2 * s)))
        return tuple(out)


@dataclass
class MidpointWitness:
    """Two argument pairs whose midpoint margin refutes one property."""

    target: str  # "convexity" or "concavity"
    params: tuple
    A1: np.ndarray
    B1: np.ndarray
    A2: np.ndarray
    B2: np.ndarray
    K: np.ndarray
    margin: float
    tau: float

    def reverify(self) -> float:
        """Margin recomputed by direct evaluation of psi."""
        prm = PsiParams(*self.params)
        f = lambda A, B: psi(A, B, self.K, prm)
        return float(midpoint_margin(f, (self.A1, self.B1), (self.A2, self.B2)))

    @property
    def violates(self) -> bool:
        m = self.reverify()
        return m < -self.tau if self.target == "convexity" else m > self.tau


@dataclass
class ProbeResult:
    p: float
    q: float
    s: float
    dim: int
    trials: int
    convex_violations: int
    concave_violations: int
    failures: int
    empirical: Label
    witnesses: dict = field(default_factory=dict)


def _witness(target, params, S: SampleSet, i, K, margin, tau):
    return MidpointWitness(
        target, tuple(params), S.A1[i], S.B1[i], S.A2[i], S.B2[i], np.array(K), float(margin[i]), float(tau[i])
    )


def probe_point(p: float, q: float, s: float, config: ProbeConfig, samples: SampleSet | None = None) -> ProbeResult:
    """Midpoint test of psi at ``(p, q, s)`` over ``config.trials`` pairs.

    Samples depend only on ``(seed, dim, trials)``, so every grid node of a
    scan sees the same pairs.  Non-finite evaluations count as failures
    and are excluded from the violation counts.  The most violating pair
    of each sign is kept as a witness.
    """
    if s == 0:
        raise InvalidExponent("s must be nonzero")
    S = samples if samples is not None else SampleSet.for_config(config)
    K = config.fixed_k()
    params = PsiParams(float(p), float(q), float(s))
    failures = 0
    try:
        with np.errstate(all="ignore"):
            f1, f2, fm = S.psi_values(params, K)
    except NoConvergence:
        raise
    except TraceConvexError:
        f1, f2, fm = _psi_values_one_by_one(S, params, K)
    margin = 0.5 * (f1 + f2) - fm
    ok = np.isfinite(margin)
    failures = int(np.sum(~ok))
    tau = _tau(config.tol_rel, np.where(ok, f1, 0), np.where(ok, f2, 0))
    margin = np.where(ok, margin, 0.0)
    convex_bad = margin < -tau
    concave_bad = margin > tau
    witnesses = {}
    if convex_bad.any():
        i = int(np.argmin(margin / tau))
        witnesses["convexity"] = _witness("convexity", params, S, i, K, margin, tau)
    if concave_bad.any():
        i = int(np.argmax(margin / tau))
        witnesses["concavity"] = _witness("concavity", params, S, i, K, margin, tau)
    nconv, nconc = int(convex_bad.sum()), int(concave_bad.sum())
    all_small = bool(np.all(np.abs(margin[ok]) <= tau[ok]))
    return ProbeResult(
        params.p, params.q, params.s, S.A1.shape[-1], len(S), nconv, nconc, failures,
        classify(nconv, nconc, all_small), witnesses,
    )


def _psi_values_one_by_one(S: SampleSet, params, K):
    out = np.full((3, len(S)), np.nan)
    for i in range(len(S)):
        for j, (a, b) in enumerate(((S.A1, S.B1), (S.A2, S.B2), (S.Am, S.Bm))):
            try:
                out[j, i] = psi(a[i], b[i], K, params)
            except NoConvergence:
                raise
            except TraceConvexError:
                pass
    return out[0], out[1], out[2]


# ---------------------------------------------------------------- scans


@dataclass
class RegionEntry:
    p: float
    q: float
    s: float
    dim: int
    trials: int
    convex_violations: int
    concave_violations: int
    empirical: Label
    theoretical: Label
    agrees: bool
    failures: int = 0
    witnesses: dict = field(default_factory=dict)


@dataclass
class RegionReport:
    entries: list
    config: ProbeConfig | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def all_agree(self) -> bool:
        return all(e.agrees for e in self.entries)


def grid_nodes(p_values: Iterable[float], q_values: Iterable[float], s_values: Iterable) -> list:
    """Grid in ``p``-major order; ``CRITICAL`` in ``s_values`` means
    ``1/(p+q)`` and is skipped where ``p + q <= 0``.  Duplicate ``s``
    at one ``(p, q)`` are emitted once."""
    nodes = []
    s_values = list(s_values)
    for p in p_values:
        for q in q_values:
            seen = []
            for s in s_values:
                if s == CRITICAL:
                    if p + q <= 0:
                        continue
                    s = 1.0 / (p + q)
                s = float(s)
                if s == 0 or any(abs(s - t) < 1e-12 for t in seen):
                    continue
                seen.append(s)
                nodes.append((float(p), float(q), s))
    return nodes


def scan_grid(p_values, q_values, s_values, config: ProbeConfig, progress: Callable | None = None) -> RegionReport:
    samples = SampleSet.for_config(config)
    entries = []
    for p, q, s in grid_nodes(p_values, q_values, s_values):
        res = probe_point(p, q, s, config, samples)
        theo = _grid_theory(p, q, s)
        entries.append(
            RegionEntry(
                p, q, s, config.dim, config.trials, res.convex_violations, res.concave_violations,
                res.empirical, theo, agrees(theo, res.convex_violations, res.concave_violations),
                res.failures, res.witnesses,
            )
        )
        if progress:
            progress(entries[-1])
    return RegionReport(entries, config)


# ---------------------------------------------------------------- search


def _pd_from_factor(G, densities: bool):
    m = G @ dagger(G)
    m = 0.5 * (m + dagger(m))
    if densities:
        m = m / np.trace(m, axis1=-2, axis2=-1).real[..., None, None]
    return m


def search_counterexample(
    p: float,
    q: float,
    s: float,
    target: str,
    dim: int,
    budget: int,
    rng: Rng,
    K=None,
    tol_rel: float = 1e-8,
    densities: bool = False,
    batch: int = 256,
    restarts: int = 8,
    steps: int = 50,
) -> MidpointWitness | None:
    """Look for pairs refuting ``target`` ("concavity" or "convexity") of psi.

    Half of ``budget`` goes to random restarts with ``A = GG*`` for
    Ginibre ``G``; the rest to greedy ascent of the violating margin
    (in units of ``tau``) from the best ``restarts`` candidates, using
    ``G -> G (I + step * Ginibre)`` with step 0.1 halved on failure.
    A witness must exceed ``10 * tau``.  ``densities`` normalizes every
    matrix to unit trace.
    """
    if target not in ("concavity", "convexity"):
        raise ValueError("target must be 'concavity' or 'convexity'")
    sign = 1.0 if target == "concavity" else -1.0
    K = np.eye(dim, dtype=np.complex128) if K is None else as_matrix(K)
    params = PsiParams(float(p), float(q), float(s))
    used = 0
    pool = []

    def score(Gs):
        S = SampleSet(*(_pd_from_factor(g, densities) for g in Gs))
        with np.errstate(all="ignore"):
            f1, f2, fm = S.psi_values(params, K)
        margin = 0.5 * (f1 + f2) - fm
        tau = _tau(tol_rel, f1, f2)
        val = sign * margin / tau
        val[~np.isfinite(val)] = -np.inf
        return S, margin, tau, val

    def witness(S, margin, tau, i):
        return _witness(target, params, S, i, K, margin, tau)

    phase1 = max(1, budget // 2)
    while used < phase1:
        k = min(batch, phase1 - used)
        Gs = [random_matrix("ginibre", dim, rng, size=k) for _ in range(4)]
        S, margin, tau, val = score(Gs)
        used += k
        i = int(np.argmax(val))
        if val[i] > 10:
            return witness(S, margin, tau, i)
        for j in np.argsort(-val)[:restarts]:
            if np.isfinite(val[j]):
                pool.append((val[j], [g[j] for g in Gs]))
        pool.sort(key=lambda t: -t[0])
        del pool[restarts:]

    eye = np.eye(dim)
    for best, G in pool:
        step = 0.1
        for _ in range(steps):
            if used >= budget:
                return None
            k = min(max(batch // 4, 1), budget - used)
            Gs = [g @ (eye + step * random_matrix("ginibre", dim, rng, size=k)) for g in G]
            S, margin, tau, val = score(Gs)
            used += k
            i = int(np.argmax(val))
            if val[i] > 10:
                return witness(S, margin, tau, i)
            if val[i] > best:
                best, G = val[i], [g[i] for g in Gs]
            else:
                step /= 2
    return None


# ---------------------------------------------------------------- auxiliary probes


@dataclass
class ProbeCounts:
    trials: int
    convex_violations: int
    concave_violations: int
    failures: int
    empirical: Label
    max_abs_rel_margin: float
    theoretical: Label | None = None

    @property
    def agrees(self) -> bool:
        return self.theoretical is None or agrees(self.theoretical, self.convex_violations, self.concave_violations)


def _counts(f1, f2, fm, tol_rel, theoretical=None) -> ProbeCounts:
    f1, f2, fm = (np.atleast_1d(np.asarray(x, dtype=float)) for x in (f1, f2, fm))
    margin = 0.5 * (f1 + f2) - fm
    ok = np.isfinite(margin)
    tau = _tau(tol_rel, f1[ok], f2[ok])
    m = margin[ok]
    nconv, nconc = int(np.sum(m < -tau)), int(np.sum(m > tau))
    rel = np.abs(m) / (tau / tol_rel) if m.size else np.zeros(0)
    return ProbeCounts(
        trials=margin.size,
        convex_violations=nconv,
        concave_violations=nconc,
        failures=int(np.sum(~ok)),
        empirical=classify(nconv, nconc, bool(np.all(np.abs(m) <= tau))),
        max_abs_rel_margin=float(rel.max()) if rel.size else 0.0,
        theoretical=theoretical,
    )


def probe_skew(p: float, dim: int, trials: int, rng: Rng, tol_rel: float = 1e-9, commuting: bool = False) -> ProbeCounts:
    """Midpoint test of ``rho -> -Tr rho K^2 + Tr rho^p K rho^{1-p} K``
    over random density pairs and a random self-adjoint ``K`` per trial.

    The functional is concave, so ``concave_violations`` should be 0.
    ``commuting`` draws diagonal states and diagonal ``K``.
    """
    if not 0 < p < 1:
        raise InvalidExponent("p must lie in (0, 1)")
    r1 = random_matrix("density", dim, rng, size=trials)
    r2 = random_matrix("density", dim, rng, size=trials)
    K = random_matrix("self_adjoint", dim, rng, size=trials)
    if commuting:
        diag = lambda m: np.einsum("...ii->...i", m)[..., None] * np.eye(dim)
        r1, r2, K = diag(r1).real.astype(complex), diag(r2).real.astype(complex), diag(K).real.astype(complex)
    rm = 0.5 * (r1 + r2)
    f = [skew_functional(r, K, p) for r in (r1, r2, rm)]
    return _counts(*f, tol_rel, Label.CONCAVE_CONSISTENT)


def probe_upsilon(p: float, s: float, dim: int, trials: int, rng: Rng, K=None, tol_rel: float = 1e-8) -> ProbeCounts:
    """Midpoint test of ``A -> Tr(K*A^pK)^s`` with one fixed ``K``
    (a random invertible draw when ``K`` is None)."""
    if not -1 <= p <= 2 or not s > 0:
        raise InvalidExponent("need p in [-1, 2] and s > 0")
    K = random_matrix("invertible", dim, rng) if K is None else as_matrix(K)
    A1 = random_matrix("pd", dim, rng, size=trials)
    A2 = random_matrix("pd", dim, rng, size=trials)
    Am = 0.5 * (A1 + A2)
    f = [upsilon(a, K, p, s) for a in (A1, A2, Am)]
    return _counts(*f, tol_rel, upsilon_theory(p, s))


def probe_three_var(p: float, q: float, r: float, dim: int, trials: int, rng: Rng, tol_rel: float = 1e-8) -> ProbeCounts:
    """Joint midpoint test of ``(A, B, C) -> ||A^{p/2}B^{q/2}C^{r/2}||_F^2``."""
    if 0 in (p, q, r):
        raise InvalidExponent("exponents must be nonzero")
    P1 = [random_matrix("pd", dim, rng, size=trials) for _ in range(3)]
    P2 = [random_matrix("pd", dim, rng, size=trials) for _ in range(3)]
    Pm = [0.5 * (a + b) for a, b in zip(P1, P2)]
    f = [three_var(*P, p, q, r) for P in (P1, P2, Pm)]
    return _counts(*f, tol_rel, three_var_theory(p, q, r))


@dataclass
class DoublingReport:
    joint: ProbeCounts
    embedded: ProbeCounts
    max_abs_diff: float  # of margins, relative to max(|f|, 1)

    @property
    def consistent(self) -> bool:
        j, e = self.joint, self.embedded
        return (
            self.max_abs_diff <= 1e-10
            and bool(j.convex_violations) == bool(e.convex_violations)
            and bool(j.concave_violations) == bool(e.concave_violations)
        )


def _block_diag(a, b):
    z = np.zeros_like(a)
    return np.concatenate([np.concatenate([a, z], -1), np.concatenate([z, b], -1)], -2)


def doubling_check(p: float, q: float, s: float, dim: int, trials: int, rng: Rng, K=None, tol_rel: float = 1e-8) -> DoublingReport:
    """Compare joint margins of psi at ``(A_i, B_i)`` with one-variable
    margins of ``A~ -> psi(A~, A~; K~)`` at ``A~_i = diag(A_i, B_i)``.

    The embedding uses ``K~ = [[0, K], [0, 0]]``: then
    ``A~^{p/2} K~ A~^{q/2} = [[0, A^{p/2} K B^{q/2}], [0, 0]]`` has the same
    nonzero singular values, so both families see identical values.
    Parameters are normalized first so that ``K~`` is never inverted.
    """
    params, transform = normalize_params(PsiParams(p, q, s))
    K = np.eye(dim, dtype=np.complex128) if K is None else as_matrix(K)
    S = SampleSet.draw(dim, trials, rng)
    A1, B1, K1 = transform.apply(S.A1, S.B1, K)
    A2, B2, _ = transform.apply(S.A2, S.B2, K)
    f = lambda A, B: psi(A, B, K1, params)
    joint = [f(A1, B1), f(A2, B2), f(0.5 * (A1 + A2), 0.5 * (B1 + B2))]
    Kt = np.zeros((2 * dim, 2 * dim), dtype=np.complex128)
    Kt[:dim, dim:] = K1
    g = lambda T: psi(T, T, Kt, params)
    T1, T2 = _block_diag(A1, B1), _block_diag(A2, B2)
    emb = [g(T1), g(T2), g(0.5 * (T1 + T2))]
    mj = 0.5 * (joint[0] + joint[1]) - joint[2]
    me = 0.5 * (emb[0] + emb[1]) - emb[2]
    scale = np.maximum(np.maximum(np.abs(joint[0]), np.abs(joint[1])), 1.0)
    theo = _grid_theory(params.p, params.q, params.s)
    return DoublingReport(
        joint=_counts(*joint, tol_rel, theo),
        embedded=_counts(*emb, tol_rel, theo),
        max_abs_diff=float(np.max(np.abs(mj - me) / scale)),
    )
