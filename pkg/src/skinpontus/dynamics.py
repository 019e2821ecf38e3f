"""Relaxation dynamics: distances, propagation, direct and two-step protocols.

All times are in units of ``1/J`` of the relaxation stage. In the two-step
protocol the reported time axis includes the preparation time ``tau``.
"""
from __future__ import annotations

import functools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import numerics
from .errors import (
    ContractError,
    DimensionError,
    ExceptionalPointError,
    HorizonError,
    NotRelaxedError,
    SkinPontusError,
)
from .model import ChainParams, build_liouvillian, site_state, unvec, vec
from .spectral import SpectralData, decompose, overlap_coefficients, stationary_state

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.01
DEFAULT_DT = 0.01
DEFAULT_HORIZON = 200.0
DEFAULT_TOL = 1e-12


# --------------------------------------------------------------------------
# distances
# --------------------------------------------------------------------------

def _difference(rho, sigma):
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape[-2:] != sigma.shape[-2:]:
        raise DimensionError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    return rho - sigma


def trace_distance(rho, sigma):
    """``1/2 Tr|rho - sigma|``; broadcasts over leading stack dimensions."""
    diff = _difference(rho, sigma)
    diff = 0.5 * (diff + np.swapaxes(diff.conj(), -1, -2))
    ev = numerics.hermitian_eigenvalues(diff, tol=1e-8)
    d = 0.5 * np.abs(ev).sum(axis=-1)
    return float(d) if np.ndim(d) == 0 else d


def hs_distance(rho, sigma):
    """Frobenius norm of ``rho - sigma``; broadcasts over leading stack dimensions."""
    d = np.linalg.norm(_difference(rho, sigma), axis=(-2, -1))
    return float(d) if np.ndim(d) == 0 else d


# --------------------------------------------------------------------------
# propagation
# --------------------------------------------------------------------------

def _hermitize(rho):
    return 0.5 * (rho + np.swapaxes(rho.conj(), -1, -2))


def propagate_spectral(sd: SpectralData, rho_i, t):
    """``rho(t) = rho_E + sum_{a>1} c_a exp(lambda_a t) R_a`` at a time or an array of times."""
    if sd.near_degenerate:
        raise ExceptionalPointError("spectrum is near-degenerate; use propagate_numeric")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ContractError("propagation times must be >= 0")
    c = overlap_coefficients(sd, rho_i)
    c[0] = 1.0
    phases = np.exp(np.multiply.outer(t_arr, sd.eigenvalues)) * c
    flat = sd.right_modes.reshape(sd.right_modes.shape[0], -1)
    rho = (phases @ flat).reshape(t_arr.shape + (sd.L, sd.L))
    return _hermitize(rho)


def propagate_numeric(p, rho_i, t_grid, tol=DEFAULT_TOL):
    """Integrate the master equation on ``t_grid``; ``p`` is a ChainParams or a Superoperator."""
    superop = build_liouvillian(p) if isinstance(p, ChainParams) else p
    rho_i = np.asarray(rho_i, dtype=complex)
    if rho_i.shape != (superop.L, superop.L):
        raise DimensionError(f"expected a {superop.L}x{superop.L} state, got {rho_i.shape}")
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0):
        raise ContractError("time grid must be strictly increasing")
    ys = numerics.integrate_linear(superop.matrix, vec(rho_i), t_grid, tol=tol)
    return _hermitize(unvec(ys, superop.L))


def swap_rotation(rho, eps1, t):
    """Evolve ``rho`` under the coherent end-to-end coupling alone, in closed form.

    ``H_1 = -eps1 (|1><L| + |L><1|)`` acts as ``-eps1 sigma_x`` on the two end
    sites, so ``exp(-i H_1 t)`` is a rotation ``cos(eps1 t) + i sin(eps1 t) sigma_x``
    there and the identity elsewhere. ``t`` may be an array.
    """
    rho = np.asarray(rho, dtype=complex)
    L = rho.shape[0]
    t = np.asarray(t, dtype=float)
    U = np.broadcast_to(np.eye(L, dtype=complex), t.shape + (L, L)).copy()
    c, s = np.cos(eps1 * t), 1j * np.sin(eps1 * t)
    U[..., 0, 0] = c
    U[..., L - 1, L - 1] = c
    U[..., 0, L - 1] = s
    U[..., L - 1, 0] = s
    return U @ rho @ np.swapaxes(U.conj(), -1, -2)


@functools.lru_cache(maxsize=32)
def _cached_decomposition(p: ChainParams) -> SpectralData:
    return decompose(build_liouvillian(p))


def spectral_data(p: ChainParams) -> SpectralData:
    """Decomposition of the Liouvillian for ``p`` (memoized; SpectralData is immutable)."""
    return _cached_decomposition(p)


class _Evolution:
    """Relaxation-stage propagation from one state, spectral when possible."""

    def __init__(self, p: ChainParams, rho0, tol=DEFAULT_TOL, method="auto"):
        self.p = p
        self.rho0 = np.asarray(rho0, dtype=complex)
        self.tol = tol
        self.sd = None
        if method in ("auto", "spectral"):
            try:
                self.sd = spectral_data(p)
            except ExceptionalPointError:
                if method == "spectral":
                    raise
                log.info("near-degenerate spectrum for %s; integrating numerically", p)
        elif method != "numeric":
            raise ValueError(f"unknown propagation method {method!r}")
        if self.sd is not None:
            self.rho_E = stationary_state(self.sd)
        else:
            self.rho_E = _numeric_stationary(p)

    def on_grid(self, times):
        """States at the sorted, non-negative ``times``."""
        times = np.asarray(times, dtype=float)
        if times.size == 0:
            return np.empty((0, self.p.L, self.p.L), dtype=complex)
        if self.sd is not None:
            return propagate_spectral(self.sd, self.rho0, times)
        grid = times if times[0] == 0 else np.concatenate([[0.0], times])
        states = propagate_numeric(self.p, self.rho0, grid, tol=self.tol)
        return states if times[0] == 0 else states[1:]


def _numeric_stationary(p: ChainParams):
    # the zero mode is still simple when other eigenvalues collide
    return stationary_state(decompose(build_liouvillian(p), allow_degenerate=True))


# --------------------------------------------------------------------------
# protocols
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Protocol:
    """Direct relaxation, or a coherent swap stage of duration ``prep_tau`` followed by relaxation."""

    kind: str
    relax_params: ChainParams
    prep_eps1: Optional[float] = None
    prep_tau: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("direct", "pontus"):
            raise ContractError(f"protocol kind must be 'direct' or 'pontus', got {self.kind!r}")
        if self.kind == "pontus":
            eps1, tau = self.prep_eps1, self.prep_tau
            if eps1 is None and tau is None:
                raise ContractError("pontus protocol needs prep_eps1 or prep_tau")
            if eps1 is None:
                eps1 = math.pi / (2.0 * tau)
            if tau is None:
                tau = math.pi / (2.0 * eps1)
            if not (eps1 > 0 and tau > 0):
                raise ContractError("pontus protocol needs prep_eps1 > 0 and prep_tau > 0")
            object.__setattr__(self, "prep_eps1", float(eps1))
            object.__setattr__(self, "prep_tau", float(tau))

    @classmethod
    def direct(cls, p: ChainParams) -> "Protocol":
        return cls("direct", p)

    @classmethod
    def pontus(cls, p: ChainParams, tau=None, eps1=None) -> "Protocol":
        return cls("pontus", p, prep_eps1=eps1, prep_tau=tau)

    @property
    def preparation_time(self) -> float:
        return self.prep_tau if self.kind == "pontus" else 0.0


@dataclass
class RelaxationRecord:
    times: np.ndarray
    d_tr: np.ndarray
    d_hs: np.ndarray
    t_rel_tr: float
    t_rel_hs: float
    threshold: float
    trel_mode: str = "settling"
    protocol: Optional[Protocol] = field(default=None, repr=False)


def _bisect_down_crossing(fn, t_lo, t_hi, threshold, tol):
    """Shrink ``[t_lo, t_hi]`` keeping ``fn(t_lo) > threshold >= fn(t_hi)``."""
    while t_hi - t_lo > tol:
        mid = 0.5 * (t_lo + t_hi)
        if fn(mid) > threshold:
            t_lo = mid
        else:
            t_hi = mid
    return t_hi


def relaxation_time(times, distances, threshold, mode="settling",
                    evaluate: Optional[Callable[[float], float]] = None, resolution=1e-4):
    """Time at which a distance series drops below ``threshold``.

    ``mode="settling"`` (default) returns the start of the final stretch
    below threshold, i.e. the smallest grid-refined ``t*`` with
    ``D(t) <= threshold`` for every later sample. ``mode="first-crossing"``
    returns the first down-crossing instead. The bracketing interval is
    bisected to ``resolution`` using ``evaluate(t)`` when given, otherwise
    the linear interpolant of the samples.

    Raises :class:`NotRelaxedError` if the last sample is above threshold.
    """
    t = np.asarray(times, dtype=float)
    d = np.asarray(distances, dtype=float)
    if t.shape != d.shape or t.ndim != 1 or t.size == 0:
        raise DimensionError("times and distances must be equal-length 1-D series")
    if not threshold > 0:
        raise ContractError("threshold must be positive")
    if d[-1] > threshold:
        raise NotRelaxedError(
            f"distance {d[-1]:.3e} still above {threshold:g} at t={t[-1]:g}"
        )
    above = d > threshold
    if mode == "settling":
        idx = np.flatnonzero(above)
        if idx.size == 0:
            return float(t[0])
        i = int(idx[-1])
    elif mode == "first-crossing":
        if not above[0]:
            return float(t[0])
        i = int(np.argmin(above)) - 1
    else:
        raise ValueError(f"unknown relaxation-time mode {mode!r}")
    if evaluate is None:
        evaluate = lambda s: float(np.interp(s, t[i:i + 2], d[i:i + 2]))  # noqa: E731
    return _bisect_down_crossing(evaluate, t[i], t[i + 1], threshold, resolution)


def _time_grid(horizon, dt):
    if not (dt > 0 and horizon > 0):
        raise ContractError("dt and horizon must be positive")
    n = int(round(horizon / dt))
    return np.linspace(0.0, n * dt, n + 1)


class _ProtocolRun:
    """State and distances of one protocol as functions of total elapsed time."""

    def __init__(self, proto: Protocol, rho_i, tol, method):
        self.proto = proto
        self.rho_i = np.asarray(rho_i, dtype=complex)
        tau = proto.preparation_time
        rho_start = self.rho_i if proto.kind == "direct" else swap_rotation(self.rho_i, proto.prep_eps1, tau)
        self.relax = _Evolution(proto.relax_params, rho_start, tol=tol, method=method)
        self.rho_E = self.relax.rho_E
        self.tau = tau

    def states(self, times):
        times = np.asarray(times, dtype=float)
        out = np.empty(times.shape + (self.rho_i.shape[0],) * 2, dtype=complex)
        prep = times <= self.tau if self.proto.kind == "pontus" else np.zeros(times.shape, bool)
        if prep.any():
            out[prep] = swap_rotation(self.rho_i, self.proto.prep_eps1, times[prep])
        if (~prep).any():
            out[~prep] = self.relax.on_grid(times[~prep] - self.tau)
        return out

    def distance_fn(self, kind):
        dist = trace_distance if kind == "tr" else hs_distance

        def fn(t):
            return float(dist(self.states(np.array([t]))[0], self.rho_E))
        return fn


def run_protocol(proto: Protocol, rho_i=None, threshold=DEFAULT_THRESHOLD, horizon=DEFAULT_HORIZON,
                 dt=DEFAULT_DT, trel_mode="settling", tol=DEFAULT_TOL, method="auto",
                 strict=True) -> RelaxationRecord:
    """Evolve ``rho_i`` (default ``|1><1|``) under ``proto`` and measure its approach to ``rho_E``.

    Distances are always taken against the stationary state of the
    relaxation-stage Liouvillian, also during the preparation stage.

    Raises :class:`HorizonError` if either distance is still above
    ``threshold`` at ``horizon``; with ``strict=False`` the record is
    returned anyway with NaN for the unreached relaxation time.
    """
    if not threshold > 0:
        raise ContractError("threshold must be positive")
    L = proto.relax_params.L
    if rho_i is None:
        rho_i = site_state(L, 1)
    run = _ProtocolRun(proto, rho_i, tol, method)
    times = _time_grid(horizon, dt)
    states = run.states(times)
    d_tr = np.asarray(trace_distance(states, run.rho_E))
    d_hs = np.asarray(hs_distance(states, run.rho_E))
    t_rel = {}
    for kind, series in (("tr", d_tr), ("hs", d_hs)):
        if series[-1] > threshold:
            if not strict:
                t_rel[kind] = math.nan
                continue
            raise HorizonError(
                f"{kind} distance {series[-1]:.3e} above {threshold:g} at horizon {horizon:g}",
                final_distance=float(series[-1]),
            )
        evaluate = run.distance_fn(kind) if run.relax.sd is not None else None
        t_rel[kind] = relaxation_time(times, series, threshold, mode=trel_mode, evaluate=evaluate)
    return RelaxationRecord(times, d_tr, d_hs, t_rel["tr"], t_rel["hs"], threshold, trel_mode, proto)


# --------------------------------------------------------------------------
# tau sweep
# --------------------------------------------------------------------------

@dataclass
class SweepRow:
    tau: float
    eps1: float
    direct_tr: float
    direct_hs: float
    pontus_tr: float
    pontus_hs: float
    status: str = "ok"


def sweep_preparation_time(base: ChainParams, tau_grid: Sequence[float], threshold=DEFAULT_THRESHOLD,
                           horizon=DEFAULT_HORIZON, dt=DEFAULT_DT, trel_mode="settling",
                           workers: Optional[int] = None, method="auto") -> list[SweepRow]:
    """Relaxation times of both protocols from ``|1><1|`` for each ``tau`` with ``eps1 = pi/(2 tau)``.

    Rows that hit the horizon carry NaN times and an error status; the sweep
    continues. ``workers > 1`` evaluates rows in a thread pool, results
    are returned in grid order.
    """
    taus = [float(t) for t in tau_grid]
    if not taus or any(t <= 0 for t in taus):
        raise ContractError("tau grid must be non-empty with tau > 0")
    rho_i = site_state(base.L, 1)
    direct_status = "ok"
    try:
        direct = run_protocol(Protocol.direct(base), rho_i, threshold, horizon, dt, trel_mode, method=method)
        d_tr, d_hs = direct.t_rel_tr, direct.t_rel_hs
    except SkinPontusError as exc:
        d_tr = d_hs = math.nan
        direct_status = f"direct: {type(exc).__name__}"

    def row(tau):
        proto = Protocol.pontus(base, tau=tau)
        status = direct_status
        try:
            rec = run_protocol(proto, rho_i, threshold, horizon, dt, trel_mode, method=method)
            p_tr, p_hs = rec.t_rel_tr, rec.t_rel_hs
        except SkinPontusError as exc:
            p_tr = p_hs = math.nan
            status = f"pontus: {type(exc).__name__}" if status == "ok" else f"{status}; pontus: {type(exc).__name__}"
        return SweepRow(tau, proto.prep_eps1, d_tr, d_hs, p_tr, p_hs, status)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(row, taus))
    return [row(tau) for tau in taus]
