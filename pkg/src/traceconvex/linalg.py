"""Dense complex linear algebra for small matrices.

Every routine accepts a single ``(n, n)`` matrix or a stack ``(..., n, n)``
and broadcasts over the leading axes.  Scalar-valued routines return a
Python ``float`` for a single matrix and an ``ndarray`` for a stack.

The Hermitian eigensolver is a batched cyclic Jacobi iteration and
matrix functions (powers, logarithm) come from it through the spectral
theorem.  Singular values, moduli, polar factors and Schatten
quasi-norms use a batched one-sided Jacobi iteration on the matrix
itself, which avoids squaring the condition number.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidExponent,
    NoConvergence,
    NotHermitian,
    NotPSD,
    SingularMatrix,
)

__all__ = [
    "HermitianEigen",
    "PolarFactors",
    "as_matrix",
    "dagger",
    "hermitian_eig",
    "eigvalsh",
    "matrix_function",
    "matrix_power",
    "matrix_log",
    "modulus",
    "singular_values",
    "svd",
    "polar",
    "schatten",
    "trace",
    "kron",
    "partial_trace",
    "default_eigensolver",
    "set_default_eigensolver",
]

HERMITIAN_TOL = 1e-10
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 60
PSD_CLIP = 1e-12
SINGULAR_TOL = 1e-12

_EIGENSOLVER = "jacobi"


class HermitianEigen(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


class PolarFactors(NamedTuple):
    unitary: np.ndarray
    modulus: np.ndarray


def default_eigensolver() -> str:
    return _EIGENSOLVER


def set_default_eigensolver(method: str) -> str:
    """Select ``"jacobi"`` (default) or ``"lapack"``; returns the previous one."""
    global _EIGENSOLVER
    if method not in ("jacobi", "lapack"):
        raise ValueError(f"unknown eigensolver {method!r}")
    previous, _EIGENSOLVER = _EIGENSOLVER, method
    return previous


def as_matrix(a, *, square: bool = True) -> np.ndarray:
    """Convert ``a`` to a complex128 array of shape ``(..., m, n)``.

    Raises ``ValueError`` on NaN/Inf entries and ``DimensionMismatch`` when
    a square matrix is required but not supplied.
    """
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim < 2:
        raise DimensionMismatch(f"expected a matrix, got shape {arr.shape}")
    if square and arr.shape[-1] != arr.shape[-2]:
        raise DimensionMismatch(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def _out(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def trace(a) -> float | np.ndarray:
    """Real part of the trace (callers only use it on Hermitian products)."""
    return _out(np.trace(np.asarray(a), axis1=-2, axis2=-1).real)


def _fro(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.abs(a) ** 2, axis=(-2, -1)))


def _check_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    asym = _fro(a - dagger(a))
    if np.any(asym > tol * np.maximum(_fro(a), np.finfo(float).tiny)):
        raise NotHermitian(
            f"matrix is not Hermitian (asymmetry {float(np.max(asym)):.3e})"
        )


def _jacobi(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic complex Jacobi on a stack ``(b, n, n)`` of Hermitian matrices."""
    b, n, _ = a.shape
    a = a.copy()
    v = np.broadcast_to(np.eye(n, dtype=np.complex128), (b, n, n)).copy()
    if n == 1:
        return a[:, :, 0].real.copy(), v
    fro = _fro(a)
    pairs = [(p, q) for p in range(n - 1) for q in range(p + 1, n)]
    offmask = ~np.eye(n, dtype=bool)
    idx = np.arange(b)
    for sweep in range(JACOBI_MAX_SWEEPS + 1):
        off = np.sqrt(np.sum(np.abs(a[idx][:, offmask]) ** 2, axis=-1))
        idx = idx[off > JACOBI_TOL * fro[idx]]
        if idx.size == 0:
            break
        if sweep == JACOBI_MAX_SWEEPS:
            raise NoConvergence(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
        sub = a[idx]
        vs = v[idx]
        for p, q in pairs:
            apq = sub[:, p, q]
            r = np.abs(apq)
            phase = np.ones_like(apq)
            nz = r > 1e-150 * fro[idx]
            phase[nz] = apq[nz] / r[nz]
            r = np.where(nz, r, 0.0)
            d = sub[:, q, q].real - sub[:, p, p].real
            sgn = np.where(d >= 0, 1.0, -1.0)
            den = np.abs(d) + np.sqrt(d * d + 4.0 * r * r)
            t = np.zeros_like(r)
            ok = den > 0
            t[ok] = 2.0 * r[ok] * sgn[ok] / den[ok]
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # G = diag(1, conj(phase)) @ [[c, s], [-s, c]] restricted to (p, q)
            gpp = c[:, None]
            gpq = s[:, None]
            gqp = (-s * np.conj(phase))[:, None]
            gqq = (c * np.conj(phase))[:, None]
            cp = sub[:, :, p].copy()
            cq = sub[:, :, q]
            sub[:, :, p] = cp * gpp + cq * gqp
            sub[:, :, q] = cp * gpq + cq * gqq
            rp = sub[:, p, :].copy()
            rq = sub[:, q, :]
            sub[:, p, :] = np.conj(gpp) * rp + np.conj(gqp) * rq
            sub[:, q, :] = np.conj(gpq) * rp + np.conj(gqq) * rq
            sub[:, p, q] = 0.0
            sub[:, q, p] = 0.0
            sub[:, p, p] = sub[:, p, p].real
            sub[:, q, q] = sub[:, q, q].real
            vp = vs[:, :, p].copy()
            vq = vs[:, :, q]
            vs[:, :, p] = vp * gpp + vq * gqp
            vs[:, :, q] = vp * gpq + vq * gqq
        a[idx] = sub
        v[idx] = vs
    w = np.einsum("kii->ki", a).real
    order = np.argsort(w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)
    return w, v


def hermitian_eig(a, *, method: str | None = None, check: bool = True) -> HermitianEigen:
    """Eigendecomposition ``A = V diag(w) V*`` of a Hermitian matrix.

    Parameters
    ----------
    a : array_like, shape (..., n, n)
        Hermitian input; the symmetry defect must not exceed
        ``1e-10 * ||A||_F``.
    method : {"jacobi", "lapack"}, optional
        Eigensolver; defaults to the module-wide choice (Jacobi).
    check : bool
        Skip the finiteness/symmetry check when False.

    Returns
    -------
    HermitianEigen
        Ascending eigenvalues and orthonormal eigenvector columns.
    """
    a = as_matrix(a) if check else np.asarray(a, dtype=np.complex128)
    if check:
        _check_hermitian(a)
    a = 0.5 * (a + dagger(a))
    method = method or _EIGENSOLVER
    if method == "lapack":
        w, v = np.linalg.eigh(a)
        return HermitianEigen(w, v)
    if method != "jacobi":
        raise ValueError(f"unknown eigensolver {method!r}")
    batch = a.shape[:-2]
    n = a.shape[-1]
    w, v = _jacobi(a.reshape(-1, n, n))
    return HermitianEigen(w.reshape(*batch, n), v.reshape(*batch, n, n))


def eigvalsh(a, **kw) -> np.ndarray:
    return hermitian_eig(a, **kw).eigenvalues


def _rebuild(w: np.ndarray, v: np.ndarray) -> np.ndarray:
    return (v * w[..., None, :]) @ dagger(v)


def matrix_function(a, func, **kw) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum."""
    w, v = hermitian_eig(a, **kw)
    return _rebuild(func(w), v)


def _clip_psd(w: np.ndarray) -> np.ndarray:
    top = np.max(np.abs(w), axis=-1, keepdims=True)
    if np.any(w < -PSD_CLIP * top):
        raise NotPSD(f"matrix has a negative eigenvalue {float(np.min(w)):.3e}")
    return np.where(w < 0, 0.0, w)


def _psd_spectrum(a, strict: bool, **kw) -> tuple[np.ndarray, np.ndarray]:
    w, v = hermitian_eig(a, **kw)
    w = _clip_psd(w)
    if strict:
        top = np.max(w, axis=-1, keepdims=True)
        if np.any(w <= SINGULAR_TOL * top) or np.any(top <= 0):
            raise SingularMatrix("matrix is numerically singular")
    return w, v


def matrix_power(a, alpha: float, **kw) -> np.ndarray:
    """``A**alpha`` for positive semidefinite ``A``.

    Negative exponents require a strictly positive spectrum (smallest
    eigenvalue above ``1e-12`` times the largest); for positive exponents
    zero eigenvalues map to zero.
    """
    alpha = float(alpha)
    a = as_matrix(a)
    if alpha == 0.0:
        return np.broadcast_to(np.eye(a.shape[-1], dtype=np.complex128), a.shape).copy()
    w, v = _psd_spectrum(a, strict=alpha < 0, **kw)
    if alpha > 0:
        wp = np.where(w > 0, w, 1.0) ** alpha * (w > 0)
    else:
        wp = w ** alpha
    return _rebuild(wp, v)


def matrix_log(a, **kw) -> np.ndarray:
    """Natural logarithm of a positive definite matrix."""
    w, v = _psd_spectrum(as_matrix(a), strict=True, **kw)
    return _rebuild(np.log(w), v)


def _hestenes(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One-sided Jacobi on a stack ``(b, n, n)``: ``A V = W`` with orthogonal columns.

    Returns ``(sigma, V, W)`` unsorted, ``sigma`` being the column norms of
    ``W``.  Working on ``A`` itself rather than ``A*A`` keeps the absolute
    error of every singular value near ``eps * ||A||``.
    """
    b, n, _ = a.shape
    w = a.copy()
    v = np.broadcast_to(np.eye(n, dtype=np.complex128), (b, n, n)).copy()
    if n > 1:
        pairs = [(p, q) for p in range(n - 1) for q in range(p + 1, n)]
        idx = np.arange(b)
        for sweep in range(JACOBI_MAX_SWEEPS + 1):
            if idx.size == 0:
                break
            if sweep == JACOBI_MAX_SWEEPS:
                raise NoConvergence(f"one-sided Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
            sub = w[idx]
            vs = v[idx]
            worst = np.zeros(idx.size)
            for p, q in pairs:
                cp = sub[:, :, p].copy()
                cq = sub[:, :, q].copy()
                alpha = np.sum(np.abs(cp) ** 2, axis=-1)
                beta = np.sum(np.abs(cq) ** 2, axis=-1)
                gamma = np.sum(np.conj(cp) * cq, axis=-1)
                g = np.abs(gamma)
                norm = np.sqrt(alpha * beta)
                rot = g > JACOBI_TOL * norm
                worst = np.maximum(worst, np.divide(g, norm, out=np.zeros_like(g), where=norm > 0))
                if not rot.any():
                    continue
                phase = np.ones_like(gamma)
                phase[rot] = gamma[rot] / g[rot]
                zeta = np.zeros_like(g)
                zeta[rot] = (beta[rot] - alpha[rot]) / (2.0 * g[rot])
                t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                t = np.where(rot, t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                sn = c * t
                # scale column q by conj(phase), then rotate by [[c, s], [-s, c]]
                cqp = cq * np.conj(phase)[:, None]
                sub[:, :, p] = c[:, None] * cp - sn[:, None] * cqp
                sub[:, :, q] = sn[:, None] * cp + c[:, None] * cqp
                vp = vs[:, :, p].copy()
                vqp = vs[:, :, q] * np.conj(phase)[:, None]
                vs[:, :, p] = c[:, None] * vp - sn[:, None] * vqp
                vs[:, :, q] = sn[:, None] * vp + c[:, None] * vqp
            w[idx] = sub
            v[idx] = vs
            idx = idx[worst > JACOBI_TOL]
    sigma = np.sqrt(np.sum(np.abs(w) ** 2, axis=-2))
    return sigma, v, w


def _right_svd(a: np.ndarray, method: str | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(sigma, V, W)`` with ``A V = W``, ``sigma`` ascending, ``W = U diag(sigma)``."""
    method = method or _EIGENSOLVER
    batch = a.shape[:-2]
    n = a.shape[-1]
    flat = a.reshape(-1, n, n)
    if method == "lapack":
        u, sig, vh = np.linalg.svd(flat)
        v = dagger(vh)
        w = u * sig[:, None, :]
    elif method == "jacobi":
        sig, v, w = _hestenes(flat)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    order = np.argsort(sig, axis=-1, kind="stable")
    sig = np.take_along_axis(sig, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)
    w = np.take_along_axis(w, order[:, None, :], axis=-1)
    return sig.reshape(*batch, n), v.reshape(*batch, n, n), w.reshape(*batch, n, n)


def singular_values(a, **kw) -> np.ndarray:
    """Singular values in ascending order."""
    return _right_svd(as_matrix(a), **kw)[0]


def modulus(a, **kw) -> np.ndarray:
    """``|A| = (A* A)^{1/2}``."""
    sig, v, _ = _right_svd(as_matrix(a), **kw)
    return _rebuild(sig, v)


def svd(a, **kw) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Singular value decomposition ``A = W diag(sigma) V*`` of a square matrix.

    ``sigma`` is ascending.  Left vectors belonging to zero singular values
    are completed to an orthonormal basis.
    """
    a = as_matrix(a)
    sigma, v, _ = _right_svd(a, **kw)
    n = a.shape[-1]
    flat_a = a.reshape(-1, n, n)
    flat_s = sigma.reshape(-1, n)
    flat_v = v.reshape(-1, n, n)
    left = np.empty_like(flat_a)
    for k in range(flat_a.shape[0]):
        top = flat_s[k].max(initial=0.0)
        good = flat_s[k] > 1e-10 * top if top > 0 else np.zeros(n, bool)
        cols = flat_a[k] @ flat_v[k][:, good] / flat_s[k][good]
        if not good.all():
            # Orthonormal extension: project standard basis vectors out of span(cols).
            basis = [cols[:, j] for j in range(cols.shape[1])]
            for e in np.eye(n, dtype=np.complex128):
                if len(basis) == n:
                    break
                x = e.copy()
                for u in basis:
                    x -= np.vdot(u, x) * u
                nx = np.linalg.norm(x)
                if nx > 1e-8:
                    basis.append(x / nx)
            filler = np.array(basis[cols.shape[1]:]).T
            full = np.empty((n, n), dtype=np.complex128)
            full[:, good] = cols
            full[:, ~good] = filler
            cols = full
        left[k] = cols
    return left.reshape(a.shape), sigma, v


def polar(a, **kw) -> PolarFactors:
    """Polar decomposition ``A = U |A|`` of an invertible matrix."""
    a = as_matrix(a)
    sigma, v, w = _right_svd(a, **kw)
    top = np.max(sigma, axis=-1, keepdims=True)
    if np.any(sigma <= SINGULAR_TOL * top) or np.any(top <= 0):
        raise SingularMatrix("polar decomposition needs an invertible matrix")
    mod = _rebuild(sigma, v)
    u = (w / sigma[..., None, :]) @ dagger(v)
    return PolarFactors(u, mod)


def schatten(a, r: float, **kw) -> float | np.ndarray:
    """``Tr |A|^r``, the r-th power of the Schatten r-(quasi)norm."""
    r = float(r)
    if not r > 0:
        raise InvalidExponent(f"Schatten exponent must be positive, got {r}")
    sig = _right_svd(as_matrix(a), **kw)[0]
    return _out(np.sum(sig**r, axis=-1))


def kron(a, b) -> np.ndarray:
    """Kronecker product, broadcasting over leading batch axes."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    m, n = a.shape[-2:]
    k, l = b.shape[-2:]
    out = np.einsum("...ij,...kl->...ikjl", a, b)
    return out.reshape(*out.shape[:-4], m * k, n * l)


def partial_trace(m, dim_h: int, dim_h2: int, over: int = 2) -> np.ndarray:
    """Partial trace of an operator on ``H (x) H'``.

    ``over=2`` traces out ``H'`` (dimension ``dim_h2``), ``over=1`` traces
    out ``H``.
    """
    m = np.asarray(m, dtype=np.complex128)
    side = dim_h * dim_h2
    if m.shape[-2:] != (side, side):
        raise DimensionMismatch(
            f"operator of shape {m.shape[-2:]} does not act on {dim_h}x{dim_h2}"
        )
    t = m.reshape(*m.shape[:-2], dim_h, dim_h2, dim_h, dim_h2)
    if over == 2:
        return np.einsum("...ijkj->...ik", t)
    if over == 1:
        return np.einsum("...ijil->...jl", t)
    raise ValueError("over must be 1 or 2")
