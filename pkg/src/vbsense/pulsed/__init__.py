"""Optical pumping cycle, spin initialization and pulsed-sequence simulation."""

from .bloch import BlochState, rabi_frequency_vs_power
from .rates import (K_P_PER_MW, REFERENCE_LASER_MW, LevelSystem, evolve_rates,
                    initialization_time, propagate, steady_state, thermal_populations)
from .run import run_sequence
from .sequence import (REFERENCE_TEMPLATES, TEMPLATES, PulseOp, PulseSequence, format_sequence,
                       parse_sequence)

__all__ = [
    "BlochState", "LevelSystem", "PulseOp", "PulseSequence", "evolve_rates", "propagate",
    "initialization_time", "steady_state", "thermal_populations", "run_sequence",
    "parse_sequence", "format_sequence", "rabi_frequency_vs_power", "TEMPLATES",
    "REFERENCE_TEMPLATES", "K_P_PER_MW", "REFERENCE_LASER_MW",
]
