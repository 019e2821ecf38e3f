"""Dense complex linear algebra and linear time integration.

Matrices are plain ``numpy.ndarray`` objects. The eigensolvers wrap LAPACK
(Hessenberg reduction + shifted QR for the general case, tridiagonal
reduction for the Hermitian case) and add a diagonal balancing pass in
front of the general solver: the birth-death generators and skin-effect
Liouvillians handled here are diagonally similar to far better conditioned
matrices, and LAPACK's power-of-two balancing does not fully exploit that.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import ContractError, ConvergenceError, DimensionError, StiffnessError

GENERAL_RESIDUAL_TOL = 1e-8
HERMITIAN_TOL = 1e-10
DEGENERACY_TOL = 1e-9

# LAPACK xHSEQR allows 30 QR sweeps per eigenvalue (ITMAX = 30*max(10, n)).
_QR_SWEEPS_PER_EIGENVALUE = 30


@dataclass(frozen=True)
class EigenPair:
    value: complex
    vector: np.ndarray


def _as_square(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] < 1:
        raise DimensionError("matrix dimension must be at least 1")
    return A


def balance_matrix(A, max_iter=60, gtol=1e-13):
    """Diagonal similarity ``B = D^-1 A D`` minimizing the off-diagonal Frobenius norm.

    Returns ``(B, d)`` with ``d`` the diagonal of ``D``. The objective
    ``f(x) = sum_{i != j} |a_ij|^2 exp(2 (x_j - x_i))`` with ``d = exp(x)`` is
    convex, so damped Newton steps converge in a handful of iterations. This
    is the fixed point Osborne's row/column equalization iterates toward, but
    without the power-of-two restriction of LAPACK's balancing and without
    the diffusive sweep count Osborne needs on long chains; a tridiagonal
    matrix similar to a symmetric one comes out symmetric.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    W = np.abs(A) ** 2
    np.fill_diagonal(W, 0.0)
    x = np.zeros(n)

    def objective(x):
        E = W * np.exp(2.0 * (x[None, :] - x[:, None]))
        return E.sum(), E

    f, E = objective(x)
    for _ in range(max_iter):
        if f == 0.0:
            break
        col, row = E.sum(axis=0), E.sum(axis=1)
        g = 2.0 * (col - row)
        if np.abs(g).max() <= gtol * f:
            break
        H = 4.0 * (np.diag(col + row) - E - E.T)
        step = -np.linalg.lstsq(H, g, rcond=1e-12)[0]
        step -= step.mean()
        t = 1.0
        while True:
            f_new, E_new = objective(x + t * step)
            if f_new <= f + 1e-4 * t * (g @ step) or t < 1e-8:
                break
            t *= 0.5
        if f_new >= f:
            break
        x, f, E = x + t * step, f_new, E_new
    d = np.exp(x - x.mean())
    return A * (d[None, :] / d[:, None]), d


def eigensystem(A, balance=True):
    """Eigenvalues and unit-norm right eigenvectors (columns) of a square matrix.

    Array-level counterpart of :func:`eig_general`; no ordering is imposed.
    """
    A = _as_square(A).astype(complex)
    n = A.shape[0]
    if not np.all(np.isfinite(A)):
        raise ContractError("matrix has non-finite entries")
    if balance and n > 1:
        B, d = balance_matrix(A)
    else:
        B, d = A, np.ones(n)
    try:
        w, V = np.linalg.eig(B)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(
            f"QR iteration did not converge for a {n}x{n} matrix: {exc}",
            iterations=_QR_SWEEPS_PER_EIGENVALUE * max(10, n),
        ) from exc
    V = d[:, None] * V
    V /= np.linalg.norm(V, axis=0)
    norm = np.linalg.norm(A)
    resid = np.linalg.norm(A @ V - V * w, axis=0)
    if norm > 0 and np.any(resid > GENERAL_RESIDUAL_TOL * norm):
        raise ConvergenceError(
            f"eigenpair residual {resid.max():.3e} exceeds {GENERAL_RESIDUAL_TOL:g}*||A||_F",
            iterations=_QR_SWEEPS_PER_EIGENVALUE * max(10, n),
        )
    return w, V


def eig_general(A) -> list[EigenPair]:
    """All eigenpairs of a square complex matrix, with multiplicity and in no particular order.

    Raises
    ------
    DimensionError
        If ``A`` is not square.
    ConvergenceError
        If the QR iteration fails or a returned pair violates
        ``||A v - lambda v|| <= 1e-8 ||A||_F``.
    """
    w, V = eigensystem(A)
    return [EigenPair(complex(w[k]), V[:, k].copy()) for k in range(w.size)]


def check_hermitian(A, tol=HERMITIAN_TOL):
    A = np.asarray(A)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise DimensionError(f"expected square matrices, got shape {A.shape}")
    dev = np.abs(A - np.swapaxes(A.conj(), -1, -2)).max() if A.size else 0.0
    scale = max(1.0, float(np.abs(A).max())) if A.size else 1.0
    if dev > tol * scale:
        raise ContractError(f"matrix is not Hermitian: max |A - A^H| = {dev:.3e}")


def hermitian_eigenvalues(A, tol=HERMITIAN_TOL):
    """Ascending real eigenvalues of a Hermitian matrix or a stack of them."""
    A = np.asarray(A)
    check_hermitian(A, tol)
    return np.linalg.eigvalsh(A)


def eig_hermitian(A, tol=HERMITIAN_TOL) -> list[EigenPair]:
    """Eigenpairs of a Hermitian matrix, eigenvalues real and ascending.

    The eigenvectors form a unitary matrix. Inputs with
    ``max |A - A^H| > tol * max(1, max |A|)`` are rejected with
    :class:`ContractError`.
    """
    A = _as_square(A)
    check_hermitian(A, tol)
    w, V = np.linalg.eigh(A)
    return [EigenPair(float(w[k]), V[:, k].copy()) for k in range(w.size)]


def min_eigenvalue_gap(values) -> float:
    w = np.asarray(values)
    if w.size < 2:
        return np.inf
    gaps = np.abs(w[:, None] - w[None, :])
    np.fill_diagonal(gaps, np.inf)
    return float(gaps.min())


# --------------------------------------------------------------------------
# time integration
# --------------------------------------------------------------------------

Generator = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class _StepMaps:
    """Caches the one-step RK4 maps of a constant matrix generator.

    For ``y' = A y`` a classical RK4 step is the linear map
    ``I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24``; building it once per step
    size by pushing the identity through ``_rk4_step`` turns every later step
    into a single matrix-vector product.
    """

    def __init__(self, A):
        self.A = A
        self._cache: dict[float, np.ndarray] = {}

    def __call__(self, y, h):
        # grid spacings from linspace differ in the last bits; share one map
        h = float(f"{h:.13e}")
        P = self._cache.get(h)
        if P is None:
            if len(self._cache) > 64:
                self._cache.clear()
            P = _rk4_step(lambda x: self.A @ x, np.eye(self.A.shape[0], dtype=complex), h)
            self._cache[h] = P
        return P @ y


def integrate_linear(generator: Generator, y0, times: Sequence[float], tol=1e-10,
                     h_max=None, h_min=1e-9):
    """Integrate ``y' = G y`` with classical RK4 and step-halving error control.

    Parameters
    ----------
    generator : ndarray (n, n) or callable
        Constant matrix, or a function returning ``G @ y``.
    y0 : array_like (n,)
        State at ``times[0]``.
    times : sequence of float
        Non-decreasing output grid; the solution is reported at every entry.
    tol : float
        Bound on the estimated local error (max norm) of each accepted step.
        The estimate compares one full step with two half steps,
        ``|y_half - y_full| / 15``; the two-half-step value is kept.
    h_max : float, optional
        Largest step tried; defaults to the largest grid spacing.
    h_min : float
        Steps would have to shrink below this to meet ``tol`` -> :class:`StiffnessError`.

    Returns
    -------
    ndarray (len(times), n)
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise DimensionError("times must be a non-empty 1-D grid")
    if np.any(np.diff(times) < 0):
        raise ContractError("times must be non-decreasing")
    if not tol > 0:
        raise ContractError("tolerance must be positive")
    y = np.array(y0, dtype=complex)
    if y.ndim != 1:
        raise DimensionError("y0 must be a vector")

    if callable(generator):
        f = generator
        step = lambda v, h: _rk4_step(f, v, h)  # noqa: E731
    else:
        A = np.asarray(generator, dtype=complex)
        if A.shape != (y.size, y.size):
            raise DimensionError(f"generator shape {A.shape} does not match state size {y.size}")
        step = _StepMaps(A)

    span = times[-1] - times[0]
    if h_max is None:
        h_max = float(np.diff(times).max()) if times.size > 1 else span
    h = h_max if h_max > 0 else 1.0

    out = np.empty((times.size, y.size), dtype=complex)
    out[0] = y
    t = times[0]
    for i in range(1, times.size):
        t_next = times[i]
        while t < t_next:
            remaining = t_next - t
            last = h >= remaining
            h_try = remaining if last else h
            while True:
                full = step(y, h_try)
                half = step(step(y, 0.5 * h_try), 0.5 * h_try)
                err = np.abs(half - full).max() / 15.0
                if err <= tol:
                    break
                h_try *= 0.5
                last = False
                if h_try < h_min:
                    raise StiffnessError(
                        f"step size {h_try:.3e} below minimum {h_min:.3e} at t={t:.6g}",
                        time=t, step=h_try,
                    )
            y = half
            t = t_next if last else t + h_try
            if not last:
                h = h_try
            if err < tol / 64.0 and h < h_max:
                h = min(2.0 * h, h_max)
        out[i] = y
    return out
