"""Classical and quantum relative entropies.

All logarithms are natural.  Quantum divergences take positive definite
density matrices (or stacks of them) and never clamp small eigenvalues:
a numerically singular argument raises ``SingularMatrix``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidExponent
from .linalg import _out, as_matrix, matrix_log, matrix_power, hermitian_eig, dagger, trace
from .trace_functions import PsiParams, psi

__all__ = [
    "AlphaZ",
    "Divergence",
    "probability_vector",
    "classical_kl",
    "classical_renyi",
    "umegaki",
    "d_prime",
    "renyi_alpha",
    "sandwiched",
    "alpha_z",
    "az_to_pq",
    "dpi_region",
]


@dataclass(frozen=True)
class AlphaZ:
    alpha: float
    z: float

    def __post_init__(self):
        if self.alpha == 1:
            raise InvalidExponent("alpha = 1 is excluded")
        if not self.z > 0:
            raise InvalidExponent("z must be positive")


def probability_vector(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("probability vector needs positive weights summing to 1")
    return w


def _pair(P, Q):
    P = probability_vector(P)
    Q = probability_vector(Q)
    if P.shape != Q.shape:
        raise DimensionMismatch("probability vectors differ in length")
    return P, Q


def classical_kl(P, Q) -> float:
    """Kullback-Leibler divergence ``sum p (log p - log q)``."""
    P, Q = _pair(P, Q)
    return float(np.sum(P * (np.log(P) - np.log(Q))))


def classical_renyi(P, Q, alpha: float) -> float:
    if alpha == 1:
        raise InvalidExponent("alpha = 1 is excluded")
    P, Q = _pair(P, Q)
    return float(np.log(np.sum(P**alpha * Q ** (1 - alpha))) / (alpha - 1))


def _states(rho, sigma):
    rho = as_matrix(rho)
    sigma = as_matrix(sigma)
    if rho.shape[-1] != sigma.shape[-1]:
        raise DimensionMismatch("states act on spaces of different dimension")
    return rho, sigma


def umegaki(rho, sigma):
    """``Tr rho (log rho - log sigma)``."""
    rho, sigma = _states(rho, sigma)
    return trace(rho @ (matrix_log(rho) - matrix_log(sigma)))


def d_prime(rho, sigma):
    """``Tr rho log(sigma^{-1/2} rho sigma^{-1/2})``."""
    rho, sigma = _states(rho, sigma)
    si = matrix_power(sigma, -0.5)
    m = si @ rho @ si
    return trace(rho @ matrix_log(0.5 * (m + dagger(m))))


def renyi_alpha(rho, sigma, alpha: float):
    """``log Tr(rho^a sigma^{1-a}) / (a - 1)``."""
    if alpha == 1:
        raise InvalidExponent("alpha = 1 is excluded")
    rho, sigma = _states(rho, sigma)
    val = trace(matrix_power(rho, alpha) @ matrix_power(sigma, 1 - alpha))
    return _out(np.log(val) / (alpha - 1))


def sandwiched(rho, sigma, alpha: float):
    """``log Tr(sigma^g rho sigma^g)^a / (a - 1)`` with ``g = (1-a)/(2a)``."""
    if alpha == 1:
        raise InvalidExponent("alpha = 1 is excluded")
    rho, sigma = _states(rho, sigma)
    sg = matrix_power(sigma, (1 - alpha) / (2 * alpha))
    m = sg @ rho @ sg
    w = hermitian_eig(0.5 * (m + dagger(m)), check=False).eigenvalues
    return _out(np.log(np.sum(np.clip(w, 0.0, None) ** alpha, axis=-1)) / (alpha - 1))


def az_to_pq(az: AlphaZ) -> tuple[float, float, float]:
    """``(alpha/z, (1-alpha)/z, z)``; the last entry is ``1/(p+q)``."""
    p = az.alpha / az.z
    q = (1 - az.alpha) / az.z
    return p, q, 1.0 / (p + q)


def alpha_z(rho, sigma, az: AlphaZ):
    """Alpha-z Renyi relative entropy.

    ``log Tr(sigma^{(1-a)/2z} rho^{a/z} sigma^{(1-a)/2z})^z / (a - 1)``,
    computed as ``log psi(rho, sigma; I, a/z, (1-a)/z, z) / (a - 1)``.
    """
    if not isinstance(az, AlphaZ):
        az = AlphaZ(*az)
    rho, sigma = _states(rho, sigma)
    p, q, _ = az_to_pq(az)
    val = psi(rho, sigma, None, PsiParams(p, q, az.z))
    return _out(np.log(val) / (az.alpha - 1))


def dpi_region(az: AlphaZ) -> bool:
    """True iff the alpha-z divergence is monotone under all CPTP maps."""
    a, z = az.alpha, az.z
    if 0 < a < 1:
        return z >= max(a, 1 - a)
    if 1 < a <= 2:
        return a / 2 <= z <= a
    if a >= 2:
        return a - 1 <= z <= a
    return False


@dataclass(frozen=True)
class Divergence:
    """A named quantum divergence usable as ``D(rho, sigma)``.

    ``kind`` is one of ``umegaki``, ``d_prime``, ``renyi``, ``sandwiched``,
    ``alpha_z``.  Parse from text with :meth:`parse`, e.g.
    ``"alpha_z:2,0.5"`` or ``"renyi:0.5"``.
    """

    kind: str
    alpha: float | None = None
    z: float | None = None

    def __post_init__(self):
        if self.kind not in ("umegaki", "d_prime", "renyi", "sandwiched", "alpha_z"):
            raise ValueError(f"unknown divergence {self.kind!r}")
        if self.kind in ("renyi", "sandwiched", "alpha_z") and self.alpha is None:
            raise ValueError(f"{self.kind} needs alpha")
        if self.kind == "alpha_z":
            AlphaZ(self.alpha, self.z)

    @classmethod
    def parse(cls, text: str) -> "Divergence":
        kind, _, args = text.partition(":")
        vals = [float(x) for x in args.split(",") if x.strip()]
        return cls(kind.strip(), *vals)

    @property
    def label(self) -> str:
        if self.kind == "alpha_z":
            return f"alpha_z:{self.alpha!r},{self.z!r}"
        if self.alpha is not None:
            return f"{self.kind}:{self.alpha!r}"
        return self.kind

    @property
    def in_dpi_region(self) -> bool | None:
        """Known monotonicity, or None where it is not characterized here."""
        if self.kind == "umegaki":
            return True
        if self.kind == "d_prime":
            return False
        z = {"renyi": 1.0, "sandwiched": self.alpha, "alpha_z": self.z}[self.kind]
        return dpi_region(AlphaZ(self.alpha, z))

    def __call__(self, rho, sigma):
        if self.kind == "umegaki":
            return umegaki(rho, sigma)
        if self.kind == "d_prime":
            return d_prime(rho, sigma)
        if self.kind == "renyi":
            return renyi_alpha(rho, sigma, self.alpha)
        if self.kind == "sandwiched":
            return sandwiched(rho, sigma, self.alpha)
        return alpha_z(rho, sigma, AlphaZ(self.alpha, self.z))
