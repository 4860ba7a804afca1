"""Driven, damped qubit-cavity system: exact master-equation dynamics and the
Maxwell-Bloch mean-field approximation side by side."""

from .hilbert import HilbertDims, ground_state, partial_trace
from .lindblad import evolve, liouvillian, steady_state_nullspace
from .meanfield import MBState, hysteresis_sweep, mb_evolve, steady_branches
from .params import DriveProtocol, SystemParams

__all__ = [
    "DriveProtocol",
    "HilbertDims",
    "MBState",
    "SystemParams",
    "evolve",
    "ground_state",
    "hysteresis_sweep",
    "liouvillian",
    "mb_evolve",
    "partial_trace",
    "steady_branches",
    "steady_state_nullspace",
]

__version__ = "0.1.0"
