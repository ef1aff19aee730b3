"""Dipole emission near a gold film: decay rates and plasmonic PL enhancement."""

from .materials import GOLD_PERMITTIVITY, HBN_INDEX, SAPPHIRE_INDEX
from .rates import Geometry, plasmon_pole_rates, radiated_up, total_rates
from .stack import (ORIENTATIONS, DecayRates, EnhancementModel, LayerStack, dipole_rates,
                    enhancement_vs_thickness, excitation_intensity)

__all__ = [
    "GOLD_PERMITTIVITY", "HBN_INDEX", "SAPPHIRE_INDEX", "Geometry", "plasmon_pole_rates",
    "radiated_up", "total_rates", "ORIENTATIONS", "DecayRates", "EnhancementModel", "LayerStack",
    "dipole_rates", "enhancement_vs_thickness", "excitation_intensity",
]
