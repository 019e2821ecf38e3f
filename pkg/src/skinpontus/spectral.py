"""Biorthogonal eigen-decomposition of the Liouvillian.

Right modes ``R_a`` and left modes ``L_a`` are stored as ``L x L`` matrices
with ``Tr(L_a^dag R_b) = delta_ab``. Gauge: ``R_1`` is the unit-trace
Hermitian stationary state, every other ``R_a`` has unit Hilbert-Schmidt
norm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import numerics
from .errors import (
    ConvergenceError,
    DimensionError,
    ExceptionalPointError,
    NonUniqueSteadyStateError,
    PositivityError,
    UndefinedWeightError,
)
from .model import Superoperator, unvec, vec


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray      # (n,), lambda_1 = 0 first, then descending real part
    right_modes: np.ndarray      # (n, L, L)
    left_modes: np.ndarray       # (n, L, L)
    stationary: np.ndarray       # (L, L)
    norm: float                  # Frobenius norm of the superoperator matrix
    near_degenerate: bool = False

    @property
    def L(self) -> int:
        return self.stationary.shape[0]

    @property
    def gap(self) -> float:
        """``-Re(lambda_2)``, the asymptotic decay rate."""
        return float(-self.eigenvalues[1].real) if self.eigenvalues.size > 1 else math.inf


def _order(w, tie_tol):
    """Indices sorting by descending real part; equal real parts (within tie_tol) by ascending imaginary part."""
    idx = sorted(range(w.size), key=lambda k: (-w[k].real, k))
    groups, cur = [], [idx[0]]
    for k in idx[1:]:
        if abs(w[k].real - w[cur[0]].real) <= tie_tol:
            cur.append(k)
        else:
            groups.append(cur)
            cur = [k]
    groups.append(cur)
    return [k for g in groups for k in sorted(g, key=lambda k: (w[k].imag, k))]


def decompose(superop: Superoperator, degeneracy_tol=numerics.DEGENERACY_TOL,
              allow_degenerate=False) -> SpectralData:
    """Ordered, biorthonormal eigensystem of a Liouvillian.

    Left eigenvectors come from an independent eigendecomposition of the
    adjoint, matched to right eigenvectors by nearest conjugate eigenvalue.

    Raises :class:`NonUniqueSteadyStateError` unless exactly one eigenvalue
    lies within ``degeneracy_tol * ||L||_F`` of zero, and
    :class:`ExceptionalPointError` if two eigenvalues are closer than that.
    With ``allow_degenerate=True`` the latter check is downgraded to the
    ``near_degenerate`` flag and the left modes are taken from the inverse
    of the right-mode matrix instead (spectrum export only; propagation
    refuses flagged data).
    """
    A = np.asarray(superop.matrix, dtype=complex)
    L = superop.L
    n = A.shape[0]
    if A.shape != (L * L, L * L):
        raise DimensionError(f"superoperator shape {A.shape} does not match L={L}")
    norm = float(np.linalg.norm(A))
    tol = degeneracy_tol * norm

    w, VR = numerics.eigensystem(A)
    zero = np.flatnonzero(np.abs(w) <= tol)
    if zero.size != 1:
        raise NonUniqueSteadyStateError(
            f"zero eigenvalue has multiplicity {zero.size} (tolerance {tol:.3e})"
        )
    degenerate = numerics.min_eigenvalue_gap(w) < tol
    if degenerate and not allow_degenerate:
        raise ExceptionalPointError(
            f"eigenvalues closer than {tol:.3e}; use numerical propagation instead"
        )

    if degenerate:
        VL = np.linalg.inv(VR).conj().T
    else:
        wl, VL = numerics.eigensystem(A.conj().T)
        rows, cols = linear_sum_assignment(np.abs(w[:, None] - wl.conj()[None, :]))
        VL = VL[:, cols[np.argsort(rows)]]
        mismatch = np.abs(w - wl[cols[np.argsort(rows)]].conj()).max()
        if mismatch > 1e-6 * max(norm, 1.0):
            raise ConvergenceError(f"left/right eigenvalues disagree by {mismatch:.3e}")

    order = _order(w, tol)
    # the steady state goes first regardless of rounding in the real parts
    order.remove(int(zero[0]))
    order.insert(0, int(zero[0]))
    w, VR, VL = w[order], VR[:, order], VL[:, order]

    right = unvec(VR.T, L).copy()
    left = unvec(VL.T, L).copy()

    rho_E = right[0] / np.trace(right[0])
    right[0] = 0.5 * (rho_E + rho_E.conj().T)
    right[0] /= np.trace(right[0]).real
    hs = np.linalg.norm(right[1:], axis=(1, 2))
    right[1:] /= hs[:, None, None]

    overlap = np.einsum("aij,aij->a", left.conj(), right)
    left /= overlap.conj()[:, None, None]

    return SpectralData(
        eigenvalues=w,
        right_modes=right,
        left_modes=left,
        stationary=right[0].copy(),
        norm=norm,
        near_degenerate=bool(degenerate),
    )


def stationary_state(sd: SpectralData, psd_tol=1e-8) -> np.ndarray:
    """Hermitian, unit-trace stationary state; rejects numerically non-positive results."""
    rho = 0.5 * (sd.stationary + sd.stationary.conj().T)
    rho = rho / np.trace(rho).real
    lo = np.linalg.eigvalsh(rho).min()
    if lo < -psd_tol:
        raise PositivityError(f"stationary state has eigenvalue {lo:.3e}")
    return rho


def overlap_coefficients(sd: SpectralData, rho_i) -> np.ndarray:
    """``c_a = Tr(L_a^dag rho_i)`` for every mode."""
    rho_i = np.asarray(rho_i)
    if rho_i.shape != (sd.L, sd.L):
        raise DimensionError(f"expected a {sd.L}x{sd.L} matrix, got {rho_i.shape}")
    return np.einsum("aij,ij->a", sd.left_modes.conj(), rho_i)


def reconstruct(sd: SpectralData, coeffs) -> np.ndarray:
    return np.einsum("a,aij->ij", np.asarray(coeffs), sd.right_modes)


def edge_weight(mode, side: str) -> float:
    """Fraction of ``sum |M_nm|^2`` carried by the block where both sites lie on one half.

    The left half is sites ``1..ceil(L/2)``, the right half the rest.
    """
    M = np.asarray(mode)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"mode must be a square matrix, got {M.shape}")
    w = np.abs(M) ** 2
    total = w.sum()
    if total == 0:
        raise UndefinedWeightError("edge weight of a zero matrix is undefined")
    half = math.ceil(M.shape[0] / 2)
    if side == "left":
        part = w[:half, :half]
    elif side == "right":
        part = w[half:, half:]
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return float(part.sum() / total)


def eigen_residuals(superop: Superoperator, sd: SpectralData):
    """Max residuals of ``L R_a = lambda_a R_a`` and ``L^dag L_a = conj(lambda_a) L_a``."""
    A = superop.matrix
    R = vec(sd.right_modes).T
    Lm = vec(sd.left_modes).T
    right = np.linalg.norm(A @ R - R * sd.eigenvalues, axis=0) / np.linalg.norm(R, axis=0)
    left = np.linalg.norm(A.conj().T @ Lm - Lm * sd.eigenvalues.conj(), axis=0) / np.linalg.norm(Lm, axis=0)
    return float(right.max()), float(left.max())


def biorthonormality_error(sd: SpectralData) -> float:
    G = np.einsum("aij,bij->ab", sd.left_modes.conj(), sd.right_modes)
    return float(np.abs(G - np.eye(G.shape[0])).max())
