"""Trace functionals built from matrix powers.

The central object is

    psi(A, B; K, p, q, s) = Tr (B^{q/2} K* A^p K B^{q/2})^s
                          = Tr |A^{p/2} K B^{q/2}|^{2s},

evaluated through the second (factorized) form.  All functions broadcast
over leading batch axes of their matrix arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidExponent, NotSelfAdjoint
from .linalg import (
    _out,
    as_matrix,
    dagger,
    hermitian_eig,
    kron,
    matrix_power,
    schatten,
    trace,
)

__all__ = [
    "PsiParams",
    "ParamTransform",
    "normalize_params",
    "psi",
    "psi_direct",
    "upsilon",
    "skew_functional",
    "skew_commutator_form",
    "lieb_ando",
    "three_var",
    "tensor_dilate",
]


def _clean(x: float) -> float:
    x = float(x)
    return 0.0 if x == 0 else x


@dataclass(frozen=True)
class PsiParams:
    p: float
    q: float
    s: float

    @property
    def normalized(self) -> bool:
        return self.p >= self.q and self.s > 0

    @property
    def critical_s(self) -> float | None:
        """``1/(p+q)``, or None when ``p + q == 0``."""
        total = self.p + self.q
        return None if total == 0 else 1.0 / total

    def __iter__(self):
        return iter((self.p, self.q, self.s))


@dataclass(frozen=True)
class ParamTransform:
    """Argument transform that keeps psi invariant under re-parametrization.

    ``negate``: ``(p, q, s) -> (-p, -q, -s)`` with ``K -> (K^{-1})*``.
    ``swap``:   ``(p, q) -> (q, p)`` with ``(A, B) -> (B, A)`` and ``K -> K*``.
    Negation is applied first.
    """

    negate: bool = False
    swap: bool = False

    def apply(self, A, B, K):
        if self.negate:
            K = dagger(np.linalg.inv(K))
        if self.swap:
            A, B, K = B, A, dagger(K)
        return A, B, K

    def describe(self) -> str:
        parts = [name for name, on in (("negate", self.negate), ("swap", self.swap)) if on]
        return "+".join(parts) or "identity"


def normalize_params(params: PsiParams) -> tuple[PsiParams, ParamTransform]:
    """Map ``(p, q, s)`` to an equivalent triple with ``p >= q`` and ``s > 0``."""
    p, q, s = (float(x) for x in params)
    if s == 0:
        raise InvalidExponent("s must be nonzero")
    negate = s < 0
    if negate:
        p, q, s = -p, -q, -s
    swap = p < q
    if swap:
        p, q = q, p
    return PsiParams(_clean(p), _clean(q), s), ParamTransform(negate, swap)


def _identity_like(A: np.ndarray) -> np.ndarray:
    return np.eye(A.shape[-1], dtype=np.complex128)


def _prepare(A, B, K):
    A = as_matrix(A)
    B = as_matrix(B)
    K = _identity_like(A) if K is None else as_matrix(K)
    n = A.shape[-1]
    if B.shape[-1] != n or K.shape[-1] != n:
        raise DimensionMismatch(
            f"dimension mismatch: A {A.shape[-2:]}, B {B.shape[-2:]}, K {K.shape[-2:]}"
        )
    return A, B, K


def _coerce(params) -> PsiParams:
    return params if isinstance(params, PsiParams) else PsiParams(*params)


def psi(A, B, K=None, params=(1.0, 0.0, 1.0)):
    """``Tr (B^{q/2} K* A^p K B^{q/2})^s`` via ``Tr |A^{p/2} K B^{q/2}|^{2s}``.

    ``K=None`` stands for the identity.  A negative ``s`` is handled by
    :func:`normalize_params` (which inverts ``K``); ``s = 0`` is rejected.
    At ``p = q = 0`` the value is ``Tr |K|^{2s}``.
    """
    A, B, K = _prepare(A, B, K)
    params = _coerce(params)
    if params.s == 0:
        raise InvalidExponent("s must be nonzero")
    p, q, s = params
    if s < 0:
        # evaluation does not need p >= q, so only the negation half applies
        A, B, K = ParamTransform(negate=True).apply(A, B, K)
        p, q, s = -p, -q, -s
    X = K
    if p != 0:
        X = matrix_power(A, p / 2) @ X
    if q != 0:
        X = X @ matrix_power(B, q / 2)
    return schatten(X, 2 * s)


def psi_direct(A, B, K=None, params=(1.0, 0.0, 1.0)):
    """Same value as :func:`psi`, formed as ``Tr M^s`` with ``M = B^{q/2}K*A^pKB^{q/2}``."""
    A, B, K = _prepare(A, B, K)
    p, q, s = _coerce(params)
    if s <= 0:
        raise InvalidExponent("psi_direct needs s > 0")
    bq = matrix_power(B, q / 2)
    m = bq @ dagger(K) @ matrix_power(A, p) @ K @ bq
    w = hermitian_eig(0.5 * (m + dagger(m)), check=False).eigenvalues
    return _out(np.sum(np.clip(w, 0.0, None) ** s, axis=-1))


def upsilon(A, K=None, p: float = 1.0, s: float = 1.0):
    """``Tr (K* A^p K)^s``."""
    A = as_matrix(A)
    return psi(A, _identity_like(A), K, PsiParams(p, 0.0, s))


def skew_functional(rho, K, p: float):
    """``-Tr rho K^2 + Tr rho^p K rho^{1-p} K`` for self-adjoint ``K``.

    This equals ``(1/2) Tr [rho^p, K][rho^{1-p}, K]``; its negative is the
    Wigner-Yanase-Dyson skew information.
    """
    rho = as_matrix(rho)
    K = as_matrix(K)
    asym = np.linalg.norm(K - dagger(K), axis=(-2, -1))
    if np.any(asym > 1e-10 * np.maximum(np.linalg.norm(K, axis=(-2, -1)), 1e-300)):
        raise NotSelfAdjoint("K must be self-adjoint")
    rp = matrix_power(rho, p)
    rq = matrix_power(rho, 1 - p)
    return _out(trace(rp @ K @ rq @ K) - trace(rho @ K @ K))


def skew_commutator_form(rho, K, p: float):
    """``(1/2) Tr [rho^p, K][rho^{1-p}, K]``, evaluated literally."""
    rp = matrix_power(rho, p)
    rq = matrix_power(rho, 1 - p)
    c1 = rp @ K - K @ rp
    c2 = rq @ K - K @ rq
    return _out(0.5 * trace(c1 @ c2))


def lieb_ando(A, B, K=None, p: float = 0.5):
    """``Tr K* A^p K B^{1-p}``."""
    A, B, K = _prepare(A, B, K)
    return trace(dagger(K) @ matrix_power(A, p) @ K @ matrix_power(B, 1 - p))


def three_var(A, B, C, p: float, q: float, r: float):
    """``Tr C^{r/2} B^{q/2} A^p B^{q/2} C^{r/2} = ||A^{p/2} B^{q/2} C^{r/2}||_F^2``."""
    A = as_matrix(A)
    B = as_matrix(B)
    C = as_matrix(C)
    if not (A.shape[-1] == B.shape[-1] == C.shape[-1]):
        raise DimensionMismatch("A, B, C must have equal dimensions")
    X = matrix_power(A, p / 2) @ matrix_power(B, q / 2) @ matrix_power(C, r / 2)
    return _out(np.sum(np.abs(X) ** 2, axis=(-2, -1)))


def tensor_dilate(A, B, m: int, params):
    """``psi(A (x) I_m/m, B (x) I_m/m)`` with ``K = I`` and ``s = 1/(p+q)``.

    For that choice of ``s`` the value equals ``psi(A, B)``.
    """
    params = _coerce(params)
    crit = params.critical_s
    if crit is None or abs(params.s - crit) > 1e-12 * max(1.0, abs(crit)):
        raise InvalidExponent("tensor_dilate needs s = 1/(p+q)")
    eye = np.eye(int(m), dtype=np.complex128) / m
    return psi(kron(A, eye), kron(B, eye), None, params)
