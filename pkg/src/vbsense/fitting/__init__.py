"""Nonlinear least-squares fitting of ODMR, saturation, relaxation and Rabi data."""

from .lm import FitResult, lm_fit
from .models import (FitModel, echo_decay, exp_decay, get_model, multi_lorentzian,
                     rabi_two_tone, saturation)
from .seed import seed_decay, seed_multi_lorentzian, seed_rabi_two_tone, seed_saturation


def jacobian(model, x, p):
    """Analytic Jacobian d f(x_i) / d p_j of ``model``."""
    return model.jacobian(x, p)


__all__ = [
    "FitModel", "FitResult", "lm_fit", "jacobian", "get_model", "multi_lorentzian",
    "saturation", "exp_decay", "echo_decay", "rabi_two_tone", "seed_multi_lorentzian",
    "seed_decay", "seed_saturation", "seed_rabi_two_tone",
]
