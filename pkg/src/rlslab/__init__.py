"""Randomized local search (RLS) load balancing: simulator, exact oracle, coupling and bounds."""

from .core import (
    Configuration,
    average_load,
    discrepancy,
    is_perfectly_balanced,
    metrics,
    overloaded_balls,
)
from .engine import MARKERS, Caps, PhaseReport, ProcessState, ProtocolVariant, run_until, run_with_markers
from .sampling import RngStream

__version__ = "0.1.0"

__all__ = [
    "Configuration",
    "average_load",
    "discrepancy",
    "is_perfectly_balanced",
    "metrics",
    "overloaded_balls",
    "MARKERS",
    "Caps",
    "PhaseReport",
    "ProcessState",
    "ProtocolVariant",
    "run_until",
    "run_with_markers",
    "RngStream",
]
