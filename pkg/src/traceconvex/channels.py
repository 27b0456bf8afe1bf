"""Quantum channels: Kraus and Stinespring forms, pinching, Haar twirls,
and data-processing (DPI) margins of divergences.

Tensor products are ordered ``H (x) H'`` with the environment ``H'``
second, so a composite index is ``a * env_dim + e``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .entropies import AlphaZ, Divergence, az_to_pq
from .errors import DimensionMismatch, NotPSD, SingularMatrix, SingularOutput
from .linalg import as_matrix, dagger, eigvalsh, hermitian_eig, kron, partial_trace
from .sampling import Rng, random_matrix

__all__ = [
    "KrausChannel",
    "StinespringDilation",
    "DpiWitness",
    "apply",
    "stinespring_apply",
    "kraus_from_stinespring",
    "random_dilation",
    "random_channel",
    "pinching_channel",
    "block_embed",
    "twirl_exact",
    "twirl_monte_carlo",
    "dpi_margin",
    "dpi_search_violation",
    "random_margins",
]

TP_TOL = 1e-10
OUTPUT_FLOOR = 1e-12
VIOLATION_REL = 1e-7


@dataclass(frozen=True)
class KrausChannel:
    """``rho -> sum_i K_i rho K_i*`` with ``kraus_ops`` of shape ``(k, d_out, d_in)``."""

    kraus_ops: np.ndarray

    def __post_init__(self):
        ops = np.asarray(self.kraus_ops, dtype=np.complex128)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[0] == 0:
            raise DimensionMismatch("kraus_ops must have shape (k, d_out, d_in)")
        gram = np.einsum("kji,kjl->il", ops.conj(), ops)
        if np.linalg.norm(gram - np.eye(ops.shape[2])) > TP_TOL:
            raise ValueError("Kraus operators are not trace preserving")
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def dim_in(self) -> int:
        return self.kraus_ops.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus_ops.shape[1]

    def __len__(self) -> int:
        return self.kraus_ops.shape[0]

    def __call__(self, rho):
        return apply(self, rho)

    @classmethod
    def identity(cls, n: int) -> "KrausChannel":
        return cls(np.eye(n, dtype=np.complex128)[None])

    @classmethod
    def unitary(cls, U) -> "KrausChannel":
        return cls(as_matrix(U)[None])

    @classmethod
    def depolarizing(cls, n: int) -> "KrausChannel":
        """Complete depolarization ``rho -> Tr(rho) I/n`` via ``|i><j|/sqrt(n)``."""
        ops = np.zeros((n * n, n, n), dtype=np.complex128)
        for i in range(n):
            for j in range(n):
                ops[i * n + j, i, j] = 1 / np.sqrt(n)
        return cls(ops)


def _apply_ops(ops: np.ndarray, rho: np.ndarray) -> np.ndarray:
    # ops (..., k, o, i) broadcast against rho (..., i, i)
    return np.einsum("...kab,...bc,...kdc->...ad", ops, rho, ops.conj())


def apply(channel: KrausChannel, rho) -> np.ndarray:
    rho = as_matrix(rho)
    if rho.shape[-1] != channel.dim_in:
        raise DimensionMismatch(f"channel acts on dim {channel.dim_in}, got {rho.shape[-1]}")
    return _apply_ops(channel.kraus_ops, rho)


@dataclass(frozen=True)
class StinespringDilation:
    """``E(gamma) = Tr_2 U (gamma (x) delta) U*`` on ``H (x) H'``."""

    unitary: np.ndarray
    env_state: np.ndarray
    env_dim: int = field(default=0)

    def __post_init__(self):
        U = as_matrix(self.unitary)
        delta = as_matrix(self.env_state)
        n_env = delta.shape[-1]
        if self.env_dim and self.env_dim != n_env:
            raise DimensionMismatch("env_dim disagrees with env_state")
        if U.shape[-1] % n_env:
            raise DimensionMismatch("unitary dimension is not a multiple of env_dim")
        if np.linalg.norm(dagger(U) @ U - np.eye(U.shape[-1])) > TP_TOL:
            raise ValueError("dilation operator is not unitary")
        if np.linalg.norm(delta - dagger(delta)) > TP_TOL or abs(np.trace(delta).real - 1) > TP_TOL:
            raise ValueError("env_state is not a density matrix")
        if eigvalsh(delta, check=False)[0] < -TP_TOL:
            raise NotPSD("env_state is not positive semidefinite")
        object.__setattr__(self, "unitary", U)
        object.__setattr__(self, "env_state", delta)
        object.__setattr__(self, "env_dim", n_env)

    @property
    def dim(self) -> int:
        return self.unitary.shape[-1] // self.env_dim


def stinespring_apply(dilation: StinespringDilation, gamma) -> np.ndarray:
    gamma = as_matrix(gamma)
    n, m = dilation.dim, dilation.env_dim
    if gamma.shape[-1] != n:
        raise DimensionMismatch(f"dilation acts on dim {n}, got {gamma.shape[-1]}")
    U = dilation.unitary
    joint = U @ kron(gamma, dilation.env_state) @ dagger(U)
    return partial_trace(joint, n, m, over=2)


def kraus_from_stinespring(dilation: StinespringDilation, drop_tol: float = 1e-14) -> KrausChannel:
    """``K_ij = sqrt(mu_j) (I (x) <i|) U (I (x) |e_j>)`` over an env basis ``i``
    and eigenpairs ``(mu_j, e_j)`` of ``delta``; zero operators are dropped."""
    n, m = dilation.dim, dilation.env_dim
    mu, e = hermitian_eig(dilation.env_state)
    U4 = dilation.unitary.reshape(n, m, n, m)
    ops = []
    for j in range(m):
        if mu[j] <= drop_tol:
            continue
        V = np.einsum("aibe,e->iab", U4, e[:, j]) * np.sqrt(mu[j])
        ops.extend(k for k in V if np.linalg.norm(k) > drop_tol)
    return KrausChannel(np.array(ops))


def _pure_env_kraus(U: np.ndarray, n: int, m: int) -> np.ndarray:
    # delta = |0><0|: K_i = (I (x) <i|) U (I (x) |0>), batched over U
    return np.moveaxis(U.reshape(*U.shape[:-2], n, m, n, m)[..., 0], -2, -3)


def random_dilation(dim: int, env_dim: int, rng: Rng) -> StinespringDilation:
    """Haar unitary on ``H (x) H'`` with pure environment state ``|0><0|``."""
    if dim < 1 or env_dim < 1:
        raise ValueError("dimensions must be >= 1")
    delta = np.zeros((env_dim, env_dim), dtype=np.complex128)
    delta[0, 0] = 1
    return StinespringDilation(random_matrix("unitary", dim * env_dim, rng), delta)


def random_channel(dim: int, env_dim: int, rng: Rng) -> KrausChannel:
    d = random_dilation(dim, env_dim, rng)
    return KrausChannel(_pure_env_kraus(d.unitary, dim, env_dim))


def pinching_channel(n: int) -> KrausChannel:
    """Kraus ``{P1, P2, S P1, S P2} / sqrt(2)`` on ``C^n (+) C^n``.

    ``P1, P2`` project onto the two blocks and ``S`` swaps them, so
    ``[[a, b], [c, d]] -> (1/2) diag(a + d, a + d)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    eye, zero = np.eye(n), np.zeros((n, n))
    P1 = np.block([[eye, zero], [zero, zero]])
    P2 = np.block([[zero, zero], [zero, eye]])
    S = np.block([[zero, eye], [eye, zero]])
    return KrausChannel(np.array([P1, P2, S @ P1, S @ P2]) / np.sqrt(2))


def block_embed(rho1, rho2, lam: float = 0.5) -> np.ndarray:
    """``diag(lam rho1, (1 - lam) rho2)`` on ``H (+) H``."""
    rho1 = as_matrix(rho1)
    rho2 = as_matrix(rho2)
    if rho1.shape != rho2.shape:
        raise DimensionMismatch("block_embed needs equal shapes")
    if not 0 < lam < 1:
        raise ValueError("lam must lie in (0, 1)")
    zero = np.zeros_like(rho1)
    top = np.concatenate([lam * rho1, zero], axis=-1)
    bottom = np.concatenate([zero, (1 - lam) * rho2], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def _check_twirl_dims(M, dim_h, dim_env):
    M = as_matrix(M)
    if M.shape[-1] != dim_h * dim_env:
        raise DimensionMismatch(f"matrix of size {M.shape[-1]} is not on C^{dim_h} (x) C^{dim_env}")
    return M


def twirl_exact(M, dim_h: int, dim_env: int) -> np.ndarray:
    """Haar average of ``(I (x) u) M (I (x) u*)``, i.e. ``Tr_2(M) (x) I/N'``."""
    M = _check_twirl_dims(M, dim_h, dim_env)
    return kron(partial_trace(M, dim_h, dim_env, over=2), np.eye(dim_env) / dim_env)


def twirl_monte_carlo(M, dim_h: int, dim_env: int, samples: int, rng: Rng | None = None, unitaries=None, chunk: int = 2048):
    """Empirical average of ``(I (x) u_k) M (I (x) u_k*)``.

    Pass ``unitaries`` (shape ``(samples, N', N')``) to fix the sample
    instead of drawing Haar unitaries from ``rng``.
    """
    M = _check_twirl_dims(M, dim_h, dim_env)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    eye = np.eye(dim_h)
    total = np.zeros_like(M)
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        if unitaries is not None:
            u = np.asarray(unitaries[done : done + k], dtype=np.complex128)
        else:
            u = random_matrix("unitary", dim_env, rng, size=k)
        W = kron(eye, u)
        total = total + np.sum(W @ M @ dagger(W), axis=0)
        done += k
    return total / samples


# ---------------------------------------------------------------- DPI


def _as_divergence(div) -> Divergence:
    if isinstance(div, Divergence):
        return div
    if isinstance(div, AlphaZ):
        return Divergence("alpha_z", div.alpha, div.z)
    return Divergence.parse(str(div))


def _check_output(out: np.ndarray) -> None:
    w = eigvalsh(out, check=False)
    if np.any(w[..., 0] <= OUTPUT_FLOOR * w[..., -1]):
        raise SingularOutput("channel output is numerically singular")


def dpi_margin(divergence, channel: KrausChannel, rho, sigma, regularize: float | None = None):
    """``D(rho||sigma) - D(E rho||E sigma)``; nonnegative when DPI holds.

    ``regularize`` mixes ``eps * I/d`` into the outputs (renormalized)
    instead of raising ``SingularOutput`` for rank-deficient outputs.
    """
    div = _as_divergence(divergence)
    rho = as_matrix(rho)
    sigma = as_matrix(sigma)
    er, es = apply(channel, rho), apply(channel, sigma)
    if regularize:
        d = er.shape[-1]
        er = (er + regularize * np.eye(d) / d) / (1 + regularize)
        es = (es + regularize * np.eye(d) / d) / (1 + regularize)
    _check_output(er)
    _check_output(es)
    return div(rho, sigma) - div(er, es)


def _batched_margin(div: Divergence, ops, rho, sigma):
    """Margins and scales for stacks of channels and states; NaN where undefined."""
    er, es = _apply_ops(ops, rho), _apply_ops(ops, sigma)
    out = np.full(rho.shape[0], np.nan)
    scale = np.ones(rho.shape[0])
    ok = np.ones(rho.shape[0], dtype=bool)
    for m in (er, es):
        w = eigvalsh(0.5 * (m + dagger(m)), check=False)
        ok &= w[:, 0] > OUTPUT_FLOOR * w[:, -1]
    if not ok.any():
        return out, scale
    with np.errstate(all="ignore"):
        try:
            d_in = np.atleast_1d(div(rho[ok], sigma[ok]))
            d_out = np.atleast_1d(div(er[ok], es[ok]))
        except (SingularMatrix, NotPSD, ValueError):
            return out, scale
    out[ok] = d_in - d_out
    scale[ok] = np.maximum(1.0, np.abs(d_in))
    out[~np.isfinite(out)] = np.nan
    return out, scale


def random_margins(divergence, dim: int, env_dim: int, trials: int, rng: Rng):
    """DPI margins over ``trials`` random dilations and random PD density pairs.

    Returns ``(margins, scales)`` with ``scales = max(1, |D(rho||sigma)|)``;
    margins are NaN where an output was numerically singular.
    """
    div = _as_divergence(divergence)
    rho = random_matrix("density", dim, rng, size=trials)
    sigma = random_matrix("density", dim, rng, size=trials)
    U = random_matrix("unitary", dim * env_dim, rng, size=trials)
    return _batched_margin(div, _pure_env_kraus(U, dim, env_dim), rho, sigma)


@dataclass
class DpiWitness:
    """A channel and state pair with ``margin < -threshold``."""

    divergence: str
    channel: KrausChannel
    rho: np.ndarray
    sigma: np.ndarray
    margin: float
    threshold: float
    method: str
    evaluations: int

    def reverify(self) -> float:
        """Recompute the margin by direct (unbatched) evaluation."""
        return float(dpi_margin(self.divergence, self.channel, self.rho, self.sigma))


def _factor_state(G):
    m = G @ dagger(G)
    m = 0.5 * (m + dagger(m))
    return m / np.trace(m, axis1=-2, axis2=-1).real[..., None, None]


def _unitary_from(G):
    q, r = np.linalg.qr(G)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., None, :]


def dpi_search_violation(
    divergence,
    dim: int,
    env_dim: int,
    budget: int,
    rng: Rng,
    batch: int = 256,
    restarts: int = 8,
    steps: int = 50,
    fallback: bool = True,
) -> DpiWitness | None:
    """Search for a channel and states violating DPI for ``divergence``.

    Phase 1 evaluates random dilations and states in batches.  Phase 2
    runs greedy descent on the relative margin from the best ``restarts``
    candidates, perturbing the factors ``G`` of ``rho = GG*/Tr``,
    ``sigma = HH*/Tr`` and the dilation unitary multiplicatively by
    ``I + step * Ginibre`` (step 0.1, halved on failure).  For alpha-z
    divergences a last phase builds a witness from a joint-convexity
    (or concavity) counterexample of psi via the pinching channel.
    Every margin evaluation counts against ``budget``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    div = _as_divergence(divergence)
    n, m = dim, env_dim
    used = 0
    pool = []  # (relative margin, G, H, U)

    def found(ops, rho, sigma, margin, scale, method):
        return DpiWitness(
            div.label, KrausChannel(ops), rho, sigma, float(margin), VIOLATION_REL * float(scale), method, used
        )

    phase1 = budget // 2 if restarts else budget
    while used < phase1:
        k = min(batch, phase1 - used)
        G = random_matrix("ginibre", n, rng, size=k)
        H = random_matrix("ginibre", n, rng, size=k)
        U = random_matrix("unitary", n * m, rng, size=k)
        rho, sigma, ops = _factor_state(G), _factor_state(H), _pure_env_kraus(U, n, m)
        marg, scale = _batched_margin(div, ops, rho, sigma)
        used += k
        rel = marg / scale
        bad = np.flatnonzero(rel < -VIOLATION_REL)
        if bad.size:
            i = bad[np.argmin(rel[bad])]
            return found(ops[i], rho[i], sigma[i], marg[i], scale[i], "random")
        good = np.flatnonzero(np.isfinite(rel))
        for i in good[np.argsort(rel[good])][:restarts]:
            pool.append((rel[i], G[i], H[i], U[i]))
        pool.sort(key=lambda t: t[0])
        del pool[restarts:]

    for rel0, G, H, U in pool:
        step = 0.1
        best = rel0
        for _ in range(steps):
            if used >= budget:
                break
            k = min(batch // 4 or 1, budget - used)
            eye_n, eye_u = np.eye(n), np.eye(n * m)
            Gs = G @ (eye_n + step * random_matrix("ginibre", n, rng, size=k))
            Hs = H @ (eye_n + step * random_matrix("ginibre", n, rng, size=k))
            Us = _unitary_from(U @ (eye_u + step * random_matrix("ginibre", n * m, rng, size=k)))
            rho, sigma, ops = _factor_state(Gs), _factor_state(Hs), _pure_env_kraus(Us, n, m)
            marg, scale = _batched_margin(div, ops, rho, sigma)
            used += k
            rel = np.where(np.isfinite(marg), marg / scale, np.inf)
            i = int(np.argmin(rel))
            if rel[i] < -VIOLATION_REL:
                return found(ops[i], rho[i], sigma[i], marg[i], scale[i], "greedy")
            if rel[i] < best:
                best, G, H, U = rel[i], Gs[i], Hs[i], Us[i]
            else:
                step /= 2
    if fallback and div.kind == "alpha_z" and used < budget:
        return _pinching_witness(div, budget - used, rng, used)
    return None


def _pinching_witness(div: Divergence, budget: int, rng: Rng, used: int) -> DpiWitness | None:
    """Turn a midpoint-convexity (alpha > 1) or concavity (alpha < 1)
    counterexample of psi at ``(a/z, (1-a)/z, z)`` into a DPI witness:
    the pinching channel maps ``diag(rho1, rho2)/2`` to ``diag(m, m)``
    with ``m`` the (halved) midpoint, and at ``s = 1/(p+q)`` the drop of
    psi equals the midpoint margin.
    """
    from .probe import search_counterexample

    az = AlphaZ(div.alpha, div.z)
    p, q, s = az_to_pq(az)
    target = "convexity" if az.alpha > 1 else "concavity"
    for d in (2, 4):
        w = search_counterexample(p, q, s, target, d, max(1, budget // 2), rng, densities=True)
        if w is None:
            continue
        rho = block_embed(w.A1, w.A2)
        sigma = block_embed(w.B1, w.B2)
        chan = pinching_channel(d)
        try:
            margin = float(dpi_margin(div, chan, rho, sigma))
        except SingularMatrix:
            continue
        scale = max(1.0, abs(float(div(rho, sigma))))
        if margin < -VIOLATION_REL * scale:
            return DpiWitness(div.label, chan, rho, sigma, margin, VIOLATION_REL * scale, "pinching", used + budget)
    return None
