"""Seeded random matrices.

Randomness always flows through an explicit :class:`Rng`.  Two ``Rng``
objects built from the same ``(seed, stream)`` produce identical draws;
independent tasks use ``rng.child(i)`` or ``Rng(seed, i)``.
"""

from __future__ import annotations

import numpy as np

from .linalg import dagger, singular_values

__all__ = ["Rng", "random_matrix", "KINDS"]

KINDS = ("pd", "density", "invertible", "unitary", "self_adjoint", "ginibre", "well_conditioned")


class Rng:
    """Deterministic random stream keyed by ``(seed, *stream)``."""

    def __init__(self, seed: int = 0, *stream: int):
        self.seed = int(seed)
        self.stream = tuple(int(s) for s in stream)
        self.gen = np.random.default_rng([self.seed & (2**64 - 1), *self.stream])

    def child(self, index: int) -> "Rng":
        return Rng(self.seed, *self.stream, index)

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, stream={self.stream})"

    def normal(self, size=None):
        return self.gen.standard_normal(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self.gen.integers(low, high, size)


def _shape(size, dim):
    if size is None:
        return (dim, dim)
    if isinstance(size, int):
        size = (size,)
    return (*size, dim, dim)


def _ginibre(shape, rng: Rng) -> np.ndarray:
    return (rng.normal(shape) + 1j * rng.normal(shape)) / np.sqrt(2.0)


def _haar(shape, rng: Rng) -> np.ndarray:
    q, r = np.linalg.qr(_ginibre(shape, rng))
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., None, :]


def _log_uniform(shape, rng: Rng, low=0.1, high=10.0) -> np.ndarray:
    return np.exp(rng.uniform(np.log(low), np.log(high), shape))


def random_matrix(kind: str, dim: int, rng: Rng, size=None) -> np.ndarray:
    """Draw a random ``dim x dim`` complex matrix (or a stack of ``size``).

    Kinds
    -----
    pd
        Eigenvalues log-uniform in [0.1, 10], Haar eigenbasis.
    density
        ``pd`` normalized to unit trace.
    invertible
        Ginibre, redrawn until the condition number is below 1e3.
    unitary
        Haar: QR of a Ginibre matrix with phase-fixed ``R`` diagonal.
    self_adjoint
        ``(G + G*) / 2`` for Ginibre ``G``.
    ginibre
        i.i.d. standard complex Gaussian entries.
    well_conditioned
        ``U diag(s) V`` with Haar ``U, V`` and ``s`` log-uniform in [0.1, 10].
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    shape = _shape(size, dim)
    if kind == "ginibre":
        return _ginibre(shape, rng)
    if kind == "unitary":
        return _haar(shape, rng)
    if kind == "self_adjoint":
        g = _ginibre(shape, rng)
        return 0.5 * (g + dagger(g))
    if kind in ("pd", "density"):
        u = _haar(shape, rng)
        w = _log_uniform(shape[:-1], rng)
        m = (u * w[..., None, :]) @ dagger(u)
        m = 0.5 * (m + dagger(m))
        if kind == "density":
            m = m / np.trace(m, axis1=-2, axis2=-1).real[..., None, None]
        return m
    if kind == "well_conditioned":
        u = _haar(shape, rng)
        v = _haar(shape, rng)
        return (u * _log_uniform(shape[:-1], rng)[..., None, :]) @ v
    if kind == "invertible":
        g = _ginibre(shape, rng)
        flat = g.reshape(-1, dim, dim)
        while True:
            sv = singular_values(flat, method="lapack")
            bad = sv[:, 0] <= 1e-3 * sv[:, -1]
            if not bad.any():
                break
            flat[bad] = _ginibre((int(bad.sum()), dim, dim), rng)
        return flat.reshape(shape)
    raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")
