"""Dissipative tight-binding chain in the single-excitation sector.

Basis states are ``|n> = a_n^dag |0>``, ``n = 1..L`` (index ``n-1`` in arrays).
Density matrices are vectorized by stacking columns (Fortran order), so a
superoperator acting as ``rho -> A rho B`` is ``kron(B.T, A)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError

_INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class ChainParams:
    """Chain of ``L`` sites.

    ``J`` is the coherent nearest-neighbour hopping, ``eps`` the coherent
    end-to-end coupling, ``J_R``/``J_L`` the incoherent right/left hopping
    rates. Times are measured in units of ``1/J`` of the relaxation stage.
    """

    L: int
    J: float = 1.0
    eps: float = 0.0
    J_R: float = 1.0
    J_L: float = 1.0

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise ContractError(f"L must be an integer >= 2, got {self.L!r}")
        object.__setattr__(self, "L", int(self.L))
        for name in ("J", "eps", "J_R", "J_L"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0:
                raise ContractError(f"{name} must be finite and >= 0, got {value!r}")
            object.__setattr__(self, name, value)

    @property
    def r(self) -> float:
        """Skin parameter ``J_R / J_L``."""
        if self.J_L == 0:
            raise ContractError("skin parameter r = J_R/J_L is undefined for J_L = 0")
        return self.J_R / self.J_L

    def replace(self, **changes) -> "ChainParams":
        fields = dict(L=self.L, J=self.J, eps=self.eps, J_R=self.J_R, J_L=self.J_L)
        fields.update(changes)
        return ChainParams(**fields)


def preparation_params(L, eps1) -> ChainParams:
    """Purely coherent end-to-end coupling used for the swap stage."""
    return ChainParams(L=L, J=0.0, eps=eps1, J_R=0.0, J_L=0.0)


def hilbert_dimension(L: int, N: int) -> int:
    """Number of ways to place ``N`` bosons on ``L`` sites, ``(N+L-1)! / (N! (L-1)!)``."""
    if L < 1 or N < 0:
        raise ContractError(f"need L >= 1 and N >= 0, got L={L}, N={N}")
    D = math.comb(N + L - 1, N)
    if D > _INT64_MAX:
        raise OverflowError(f"dimension {D} exceeds the 64-bit integer range")
    return D


# --------------------------------------------------------------------------
# vectorization
# --------------------------------------------------------------------------

def vec(rho) -> np.ndarray:
    """Column-stack a matrix, or each matrix of a stack ``(..., L, L)``."""
    rho = np.asarray(rho)
    return np.swapaxes(rho, -1, -2).reshape(rho.shape[:-2] + (-1,))


def unvec(v, L) -> np.ndarray:
    """Inverse of :func:`vec`; accepts a single vector or a stack ``(..., L*L)``."""
    v = np.asarray(v)
    return np.swapaxes(v.reshape(v.shape[:-1] + (L, L)), -1, -2)


def site_state(L, n) -> np.ndarray:
    """``|n><n|`` for a 1-based site index ``n``."""
    if not 1 <= n <= L:
        raise ContractError(f"site index {n} outside 1..{L}")
    rho = np.zeros((L, L), dtype=complex)
    rho[n - 1, n - 1] = 1.0
    return rho


def check_density_matrix(rho, herm_tol=1e-10, trace_tol=1e-10, psd_tol=1e-8):
    """Raise :class:`ContractError` unless ``rho`` is a valid density matrix."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > herm_tol:
        raise ContractError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > trace_tol:
        raise ContractError(f"density matrix trace {np.trace(rho)} != 1")
    lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lo < -psd_tol:
        raise ContractError(f"density matrix has negative eigenvalue {lo:.3e}")


# --------------------------------------------------------------------------
# operators
# --------------------------------------------------------------------------

def build_hamiltonian(p: ChainParams) -> np.ndarray:
    L = p.L
    H = np.zeros((L, L), dtype=complex)
    idx = np.arange(L - 1)
    H[idx, idx + 1] = -p.J
    H[idx + 1, idx] = -p.J
    # for L = 2 the end sites are also neighbours and both couplings add
    H[0, L - 1] += -p.eps
    H[L - 1, 0] += -p.eps
    return H


def build_jump_operators(p: ChainParams) -> list[np.ndarray]:
    """Rightward operators for bonds 1..L-1, then leftward operators for the same bonds."""
    L = p.L
    right, left = [], []
    for n in range(L - 1):
        R = np.zeros((L, L), dtype=complex)
        R[n + 1, n] = math.sqrt(p.J_R)
        right.append(R)
        Lf = np.zeros((L, L), dtype=complex)
        Lf[n, n + 1] = math.sqrt(p.J_L)
        left.append(Lf)
    return right + left


@dataclass(frozen=True)
class Superoperator:
    """Matrix of a linear map on ``L x L`` matrices in the column-stacked basis."""

    matrix: np.ndarray
    L: int

    @property
    def dim(self) -> int:
        return self.L * self.L

    def apply(self, rho) -> np.ndarray:
        rho = np.asarray(rho)
        if rho.shape[-2:] != (self.L, self.L):
            raise DimensionError(f"expected {self.L}x{self.L} matrices, got {rho.shape}")
        return unvec(vec(rho) @ self.matrix.T, self.L)

    def adjoint(self) -> "Superoperator":
        return Superoperator(self.matrix.conj().T, self.L)


def lindblad_superoperator(H, jumps) -> np.ndarray:
    """Column-stacked matrix of ``rho -> -i[H, rho] + sum_O D[O] rho``."""
    H = np.asarray(H, dtype=complex)
    n = H.shape[0]
    eye = np.eye(n)
    S = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    for O in jumps:
        O = np.asarray(O, dtype=complex)
        OdO = O.conj().T @ O
        S += np.kron(O.conj(), O) - 0.5 * np.kron(eye, OdO) - 0.5 * np.kron(OdO.T, eye)
    return S


def build_liouvillian(p: ChainParams) -> Superoperator:
    return Superoperator(
        lindblad_superoperator(build_hamiltonian(p), build_jump_operators(p)), p.L
    )


def liouvillian_action(p: ChainParams, rho) -> np.ndarray:
    """``d rho / dt`` written out element by element from the single-excitation master equation.

    Independent of the superoperator construction: the dissipator is not
    assembled from jump operators but from its explicit matrix-element form
    (population feed from the neighbouring sites, uniform damping by
    ``J_R + J_L`` and the boundary corrections at sites 1 and L).
    """
    rho = np.asarray(rho, dtype=complex)
    L = p.L
    if rho.shape != (L, L):
        raise DimensionError(f"expected a {L}x{L} matrix, got {rho.shape}")
    H = build_hamiltonian(p)
    n = np.arange(L)[:, None]
    m = np.arange(L)[None, :]
    eq = (n == m)
    pop = np.diagonal(rho)

    out = 1j * (rho @ H - H @ rho)

    feed = np.zeros(L, dtype=complex)
    feed[1:] += p.J_R * pop[:-1]      # rho_{n-1,n-1} for n != 1
    feed[:-1] += p.J_L * pop[1:]      # rho_{n+1,n+1} for n != L
    out += np.where(eq, feed[:, None], 0.0)

    out -= (p.J_R + p.J_L) * rho
    at_last = (n == L - 1).astype(float) + (m == L - 1).astype(float)
    at_first = (n == 0).astype(float) + (m == 0).astype(float)
    out += 0.5 * p.J_R * at_last * rho + 0.5 * p.J_L * at_first * rho
    return out
