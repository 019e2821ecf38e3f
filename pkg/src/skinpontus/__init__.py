"""Liouvillian skin effect and two-step (Pontus) Mpemba relaxation in a dissipative chain."""
from .classical import BirthDeathModel
from .dynamics import (
    Protocol,
    RelaxationRecord,
    hs_distance,
    propagate_numeric,
    propagate_spectral,
    relaxation_time,
    run_protocol,
    sweep_preparation_time,
    trace_distance,
)
from .model import ChainParams, build_hamiltonian, build_jump_operators, build_liouvillian, liouvillian_action
from .spectral import SpectralData, decompose, overlap_coefficients, stationary_state

__version__ = "0.1.0"
