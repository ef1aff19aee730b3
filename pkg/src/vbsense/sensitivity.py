"""Shot-noise-limited DC magnetic sensitivity and its microwave-power optimum.

    eta_B = A * (h / (g mu_B)) * dnu / (C * sqrt(R))
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .spectra import PowerResponse, power_broadened_line
from .spin import GAMMA_HZ_PER_T

LORENTZIAN_A = 0.77
OPTIMAL_SATURATION = 2.0
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SensitivityInput:
    contrast: float
    fwhm: float  # Hz
    count_rate: float  # counts/s
    lineshape_factor: float = LORENTZIAN_A
    g_factor: float = 2.0

    def __post_init__(self):
        if not 0 < self.contrast < 1:
            raise ValueError("contrast must lie in (0, 1)")
        if not (self.fwhm > 0 and self.count_rate > 0 and self.lineshape_factor > 0
                and self.g_factor > 0):
            raise ValueError("fwhm, count_rate, lineshape_factor and g_factor must be positive")


def eta_b(inp):
    """Sensitivity in T/sqrt(Hz)."""
    gamma = GAMMA_HZ_PER_T * inp.g_factor / 2.0
    return inp.lineshape_factor * inp.fwhm / (gamma * inp.contrast * math.sqrt(inp.count_rate))


def _eta_curve(resp, count_rate, powers, a=LORENTZIAN_A, g_factor=2.0):
    c, w = power_broadened_line(resp, powers)
    gamma = GAMMA_HZ_PER_T * g_factor / 2.0
    with np.errstate(divide="ignore"):
        return a * w / (gamma * c * np.sqrt(count_rate))


def sensitivity_vs_mw_power(resp, count_rate, powers, lineshape_factor=LORENTZIAN_A):
    """Array of shape (n, 2): columns power (W) and eta_B (T/sqrt(Hz))."""
    powers = np.asarray(powers, dtype=float)
    if np.any(powers <= 0):
        raise ValueError("powers must be positive")
    eta = _eta_curve(resp, count_rate, powers, lineshape_factor)
    return np.column_stack([powers, eta])


def analytic_optimum_power(resp):
    """Minimizer of dnu/C for the saturation forms.

    dnu/C is proportional to (1+s)^(3/2)/s, whose log-derivative
    3/(2(1+s)) - 1/s vanishes at s = 2.
    """
    return resp.p_sat_mw * OPTIMAL_SATURATION


class SensitivityOptimum(NamedTuple):
    p_opt: float
    eta_opt: float
    boundary: str | None  # None for an interior optimum, else "lower" or "upper"


def golden_section_min(f, lo, hi, rtol=1e-12, max_iter=500):
    """Minimize a unimodal ``f`` on [lo, hi]; returns (x, f(x))."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= rtol * max(abs(a), abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = c if fc <= fd else d
    return x, min(fc, fd)


def optimize_sensitivity(resp, count_rate, p_range, lineshape_factor=LORENTZIAN_A):
    """Golden-section search of eta_B over microwave power in ``p_range`` (W).

    The search runs in log-power. When the optimum sits on an endpoint the
    result carries ``boundary`` = "lower"/"upper" instead of raising.
    """
    lo, hi = map(float, p_range)
    if not 0 < lo < hi:
        raise ValueError("p_range must be a nonempty positive interval")

    def f(logp):
        return float(_eta_curve(resp, count_rate, math.exp(logp), lineshape_factor))

    x, _ = golden_section_min(f, math.log(lo), math.log(hi), rtol=1e-13)
    p = math.exp(x)
    e_lo, e_hi, e_p = f(math.log(lo)), f(math.log(hi)), f(x)
    boundary = None
    if e_lo <= e_p:
        p, e_p, boundary = lo, e_lo, "lower"
    elif e_hi <= e_p:
        p, e_p, boundary = hi, e_hi, "upper"
    elif abs(p - hi) <= 1e-9 * hi:
        boundary = "upper"
    elif abs(p - lo) <= 1e-9 * lo:
        boundary = "lower"
    return SensitivityOptimum(p, e_p, boundary)


@dataclass(frozen=True)
class LaserCalibration:
    """Power response and photon rate measured at one laser power."""

    laser_mw: float
    response: PowerResponse
    count_rate: float


# Two laser settings: the higher laser power gives a broader line but a
# larger saturated contrast and more photons.
DEFAULT_COUNT_RATE = 3.6e6
LASER_CALIBRATIONS = {
    1.0: LaserCalibration(1.0, PowerResponse(0.40, 0.1824, 80e6), 1.2e6),
    5.0: LaserCalibration(5.0, PowerResponse(0.55, 0.1824, 110e6), DEFAULT_COUNT_RATE),
}
