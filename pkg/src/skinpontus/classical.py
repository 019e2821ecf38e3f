"""Birth-death reduction of the chain at ``J = eps = 0``.

With the coherent couplings switched off and no initial coherences, the
populations ``P_n = rho_nn`` obey ``dP/dt = M P`` with ``M`` a tridiagonal
Markov generator with reflecting ends. Everything here is exact or uses
only the symmetric form of ``M``, so it serves as an independent check on
the Liouvillian machinery.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import numerics
from .errors import ContractError, DimensionError


@dataclass(frozen=True)
class BirthDeathModel:
    L: int
    J_R: float
    J_L: float

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise ContractError(f"L must be an integer >= 2, got {self.L!r}")
        # J_R = 0 would make the similarity scaling singular
        if not (self.J_L > 0 and self.J_R > 0):
            raise ContractError("birth-death rates J_R and J_L must both be positive")

    @property
    def r(self) -> float:
        return self.J_R / self.J_L

    @classmethod
    def from_chain(cls, p) -> "BirthDeathModel":
        return cls(p.L, p.J_R, p.J_L)


@dataclass(frozen=True)
class ClassicalModes:
    eigenvalues: np.ndarray   # (L,), descending, eigenvalues[0] == 0
    right_modes: np.ndarray   # (L, L), row a is R^(a)
    left_modes: np.ndarray    # (L, L), row a is L^(a)


def build_generator(m: BirthDeathModel) -> np.ndarray:
    L = m.L
    M = np.zeros((L, L))
    idx = np.arange(L - 1)
    M[idx + 1, idx] = m.J_R
    M[idx, idx + 1] = m.J_L
    M[idx, idx] -= m.J_R
    M[idx + 1, idx + 1] -= m.J_L
    return M


def stationary_distribution(m: BirthDeathModel) -> np.ndarray:
    """``P_n = r^(n-1) / sum_k r^k``."""
    powers = m.r ** np.arange(m.L, dtype=float)
    return powers / powers.sum()


def analytic_eigenvalues(m: BirthDeathModel) -> np.ndarray:
    alpha = np.arange(2, m.L + 1)
    decaying = -m.J_L - m.J_R + 2.0 * math.sqrt(m.J_L * m.J_R) * np.cos(np.pi * (alpha - 1) / m.L)
    return np.sort(np.concatenate([[0.0], decaying]))[::-1]


def symmetrized_generator(m: BirthDeathModel) -> np.ndarray:
    """``U = D^-1/2 M D^1/2`` with ``D = diag(r^(n-1))``, formed entrywise to avoid overflow."""
    M = build_generator(m)
    n = np.arange(m.L)
    return M * np.sqrt(m.r) ** (n[None, :] - n[:, None])


def biorthogonal_modes(m: BirthDeathModel) -> ClassicalModes:
    """Right/left eigenvectors of ``M`` from the eigenvectors ``V`` of ``U``.

    ``R = D^1/2 V`` and ``L = D^-1/2 V`` are biorthonormal because ``V`` is
    orthonormal. ``R^(1)`` is rescaled to the stationary distribution (so
    ``L^(1)`` is the all-ones vector); the sign of every other mode is fixed
    by making its largest-magnitude left component positive.
    """
    U = symmetrized_generator(m)
    asym = np.abs(U - U.T).max()
    if asym > 1e-12 * max(1.0, np.abs(U).max()):
        raise ContractError(f"similarity-transformed generator is not symmetric ({asym:.3e})")
    pairs = numerics.eig_hermitian(U, tol=1e-12)[::-1]
    values = np.array([p.value for p in pairs])
    V = np.array([p.vector.real for p in pairs])           # rows
    half = np.sqrt(m.r) ** np.arange(m.L)
    right = V * half[None, :]
    left = V / half[None, :]

    s = right[0].sum()
    right[0] /= s
    left[0] *= s
    for a in range(1, m.L):
        if left[a, np.argmax(np.abs(left[a]))] < 0:
            right[a] *= -1
            left[a] *= -1
    values[0] = 0.0 if abs(values[0]) < 1e-12 * max(1.0, np.abs(values).max()) else values[0]
    return ClassicalModes(values, right, left)


def _check_distribution(P, L):
    P = np.asarray(P, dtype=float)
    if P.shape != (L,):
        raise DimensionError(f"expected a length-{L} probability vector, got shape {P.shape}")
    if np.any(P < -1e-12) or abs(P.sum() - 1.0) > 1e-10:
        raise ContractError("input is not a normalized probability vector")
    return P


def spectral_coefficients(modes: ClassicalModes, P0) -> np.ndarray:
    """``c_a = sum_n L^(a)_n P_n(0)``."""
    P0 = _check_distribution(P0, modes.left_modes.shape[1])
    return modes.left_modes @ P0


def relax_distribution(modes: ClassicalModes, P0, times) -> np.ndarray:
    """``P(t) = sum_a c_a exp(lambda_a t) R^(a)`` for each time; shape ``(len(times), L)``."""
    c = spectral_coefficients(modes, P0)
    t = np.atleast_1d(np.asarray(times, dtype=float))
    return (np.exp(np.outer(t, modes.eigenvalues)) * c) @ modes.right_modes


def evolve_distribution(m: BirthDeathModel, P0, times) -> np.ndarray:
    """``exp(M t) P(0)`` by matrix exponential; shape ``(len(times), L)``."""
    M = build_generator(m)
    P0 = np.asarray(P0, dtype=float)
    return np.array([expm(M * t) @ P0 for t in np.atleast_1d(times)])


def edge_coefficient_ratio(modes: ClassicalModes, alpha: int) -> float:
    """``|c_a / c'_a|`` for ``P(0) = delta_{n,1}`` versus ``delta_{n,L}`` (``alpha`` is 1-based)."""
    la = modes.left_modes[alpha - 1]
    return float(abs(la[0] / la[-1]))


def diagonal_distances(P, P_E):
    """Trace and Hilbert-Schmidt distance between diagonal states given by their populations."""
    P = np.asarray(P, dtype=float)
    P_E = np.asarray(P_E, dtype=float)
    if P.shape != P_E.shape:
        raise DimensionError(f"length mismatch: {P.shape} vs {P_E.shape}")
    diff = P - P_E
    return 0.5 * float(np.abs(diff).sum()), float(np.sqrt((diff ** 2).sum()))
