"""Emitter in an hBN flake on a thick gold film: decay rates and detected-PL gain.

Geometry, from the top: ambient, hBN spacer of thickness T, gold treated as
a half space (its 300 nm thickness is many skin depths). The emitter sits
at ``height`` above the gold, inside the spacer (height < T) or in the
ambient (height > T). Rates are normalized to the homogeneous medium that
holds the emitter. The comparison sample replaces the gold by the sapphire
substrate.

Detected-PL gain relative to the same flake on sapphire::

    G = [q / q0] * X

    q / q0 = (F_ref + eta S) / (q0 F_tot + (1 - q0) F_ref)

F_tot and F_ref are the total rates on gold and on sapphire, S is the rate
into the gold surface-plasmon pole, eta the fraction of plasmon energy that
reaches the detector and q0 the intrinsic quantum efficiency. The
far-field emission pattern is taken as unchanged by the gold. X is the
ratio of the 532 nm excitation intensity at the emitter (plane waves
filling the objective aperture, both polarizations, projected on the
dipole orientation) on gold and on sapphire, so 1 + excitation gain = X.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import materials
from .rates import Geometry, fresnel, kz, plasmon_pole_rates, radiated_up, total_rates

ORIENTATIONS = ("parallel", "perpendicular", "isotropic")
MIN_HEIGHT_NM = 0.5  # below this the local-response continuum picture fails
DEFAULT_RTOL = 1e-4


@dataclass(frozen=True)
class LayerStack:
    """Ambient / hBN spacer / gold half space, with the sapphire comparison substrate.

    Permittivities follow exp(-i w t): Im(eps) >= 0 for absorbing media.
    ``*_exc`` entries are the values at the excitation wavelength.
    """

    spacer_thickness_nm: float = 35.0
    spacer_index: float = materials.HBN_INDEX[810.0]
    gold_eps: complex = materials.GOLD_PERMITTIVITY[810.0]
    substrate_index: float = materials.SAPPHIRE_INDEX[810.0]
    ambient_index: float = 1.0
    wavelength_nm: float = materials.EMISSION_WAVELENGTH_NM
    excitation_wavelength_nm: float = materials.EXCITATION_WAVELENGTH_NM
    spacer_index_exc: float = materials.HBN_INDEX[532.0]
    gold_eps_exc: complex = materials.GOLD_PERMITTIVITY[532.0]
    substrate_index_exc: float = materials.SAPPHIRE_INDEX[532.0]

    def __post_init__(self):
        if not self.spacer_thickness_nm >= 0:
            raise ValueError("spacer thickness must be nonnegative")
        if not (self.wavelength_nm > 0 and self.excitation_wavelength_nm > 0):
            raise ValueError("wavelengths must be positive")
        for name in ("spacer_index", "substrate_index", "ambient_index",
                     "spacer_index_exc", "substrate_index_exc"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("gold_eps", "gold_eps_exc"):
            if complex(getattr(self, name)).imag < 0:
                raise ValueError(f"{name}: Im(eps) must be >= 0 (exp(-i w t) convention)")

    def with_thickness(self, thickness_nm):
        return replace(self, spacer_thickness_nm=float(thickness_nm))


@dataclass(frozen=True)
class DecayRates:
    total_rate_rel: float
    radiative_rate_rel: float
    collected_enhancement: float
    plasmon_rate_rel: float = 0.0

    def __post_init__(self):
        if not self.total_rate_rel >= self.radiative_rate_rel >= 0:
            raise ArithmeticError(
                f"rate ordering violated: total {self.total_rate_rel:g}, "
                f"radiative {self.radiative_rate_rel:g}")


@dataclass(frozen=True)
class EnhancementModel:
    """Calibration of the detected-PL gain: intrinsic quantum efficiency,
    plasmon outcoupling fraction and objective numerical aperture."""

    q0: float = 0.05
    plasmon_outcoupling: float = 1.0
    numerical_aperture: float = 0.9
    n_angles: int = 96

    def __post_init__(self):
        if not 0 < self.q0 <= 1:
            raise ValueError("q0 must lie in (0, 1]")
        if not 0 <= self.plasmon_outcoupling <= 1:
            raise ValueError("plasmon_outcoupling must lie in [0, 1]")
        if not 0 < self.numerical_aperture < 1:
            raise ValueError("numerical aperture must lie in (0, 1) for an air objective")


def _combine(values, orientation):
    if orientation == "parallel":
        return values["par"]
    if orientation == "perpendicular":
        return values["perp"]
    if orientation == "isotropic":
        return (2.0 * values["par"] + values["perp"]) / 3.0
    raise ValueError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")


def _geometry(stack, height_nm, metal_eps):
    """Rate geometry with ``metal_eps`` as the half space under the spacer."""
    t = stack.spacer_thickness_nm
    eps_sp = stack.spacer_index**2
    eps_amb = stack.ambient_index**2
    if height_nm < t:
        return Geometry(eps_sp, stack.wavelength_nm, [(eps_amb, 0.0)], t - height_nm,
                        [(metal_eps, 0.0)], height_nm)
    if height_nm > t:
        below = ([(eps_sp, t)] if t > 0 else []) + [(metal_eps, 0.0)]
        return Geometry(eps_amb, stack.wavelength_nm, [], 0.0, below, height_nm - t)
    raise ValueError("emitter cannot sit exactly on the spacer surface")


def _check_height(stack, height_nm):
    if not height_nm > MIN_HEIGHT_NM:
        raise ValueError(f"emitter height must exceed {MIN_HEIGHT_NM} nm")


def excitation_intensity(stack, height_nm, orientation="isotropic", substrate=False,
                         numerical_aperture=0.9, n_angles=96):
    """Mean squared field at the emitter, projected on the dipole, for excitation
    plane waves of unit amplitude incident from the ambient.

    Angles fill the aperture uniformly in solid angle; s and p polarizations
    and azimuths are averaged. ``substrate=True`` evaluates the comparison
    sample (spacer on sapphire).
    """
    lam = stack.excitation_wavelength_nm
    k0 = 2 * np.pi / lam
    eps_a = stack.ambient_index**2
    eps_h = stack.spacer_index_exc**2
    eps_b = stack.substrate_index_exc**2 if substrate else complex(stack.gold_eps_exc)
    t = stack.spacer_thickness_nm

    theta = np.linspace(0.0, math.asin(numerical_aperture / stack.ambient_index), n_angles)
    w = np.sin(theta)
    w = w / w.sum() if w.sum() > 0 else np.ones_like(w)
    # in-plane wavevector over k0
    kx = stack.ambient_index * np.sin(theta) + 0j
    la = kz(eps_a, kx)
    lh = kz(eps_h, kx)
    lb = kz(eps_b, kx)

    rs_hb, rp_hb = fresnel(eps_h, eps_b, lh, lb)
    rs_ah, rp_ah = fresnel(eps_a, eps_h, la, lh)
    rs_ha, rp_ha = fresnel(eps_h, eps_a, lh, la)

    if height_nm < t:
        z = t - height_nm  # depth below the top surface
        ph_t = np.exp(2j * k0 * lh * t)
        # amplitude of the downward wave just below the top surface
        a_s = (1 + rs_ah) / (1 - rs_ha * rs_hb * ph_t)
        a_p = (1 + rp_ah) / (1 - rp_ha * rp_hb * ph_t)
        down = np.exp(1j * k0 * lh * z)
        up = np.exp(1j * k0 * lh * (2 * t - z))
        e_s = a_s * (down + rs_hb * up)
        # p waves carry H; E components follow from Maxwell's equations
        e_px = a_p * lh / eps_h * (down - rp_hb * up)
        e_pz = a_p * kx / eps_h * (down + rp_hb * up)
    else:
        z = height_nm - t  # height above the top surface
        ph_t = np.exp(2j * k0 * lh * t)
        rs_top = (-rs_ha + rs_hb * ph_t) / (1 - rs_ha * rs_hb * ph_t)
        rp_top = (-rp_ha + rp_hb * ph_t) / (1 - rp_ha * rp_hb * ph_t)
        if t == 0:
            rs_top, rp_top = fresnel(eps_a, eps_b, la, lb)
        ph = np.exp(2j * k0 * la * z)
        e_s = 1 + rs_top * ph
        e_px = la / eps_a * (1 - rp_top * ph)
        e_pz = kx / eps_a * (1 + rp_top * ph)

    par = 0.25 * (np.abs(e_s) ** 2 + np.abs(e_px) ** 2)
    perp = 0.5 * np.abs(e_pz) ** 2
    return _combine({"par": float(np.sum(w * par)), "perp": float(np.sum(w * perp))}, orientation)


def dipole_rates(stack, emitter_height_nm, dipole_orientation="isotropic",
                 model=EnhancementModel(), rtol=DEFAULT_RTOL):
    """Decay rates and detected-PL gain for an emitter ``emitter_height_nm`` above the gold.

    Raises QuadratureNotConverged when the wavevector integral does not
    reach ``rtol``.
    """
    _check_height(stack, emitter_height_nm)
    if dipole_orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}, got {dipole_orientation!r}")
    gold = complex(stack.gold_eps)
    g = _geometry(stack, emitter_height_nm, gold)
    total = _combine(total_rates(g, rtol), dipole_orientation)
    rad = _combine(radiated_up(g, rtol=rtol), dipole_orientation)
    # quadrature noise must not flip the ordering of nearly equal rates
    rad = min(rad, total)

    ref = _geometry(stack, emitter_height_nm, stack.substrate_index**2)
    total_ref = _combine(total_rates(ref, rtol), dipole_orientation)

    # plasmon of the interface under the emitter's layer
    in_spacer = emitter_height_nm < stack.spacer_thickness_nm
    eps_emit = stack.spacer_index**2 if in_spacer else stack.ambient_index**2
    spp = _combine(plasmon_pole_rates(eps_emit, gold, stack.wavelength_nm, emitter_height_nm),
                   dipole_orientation)

    q0 = model.q0
    q_gain = (total_ref + model.plasmon_outcoupling * spp) / (q0 * total + (1 - q0) * total_ref)
    x = (excitation_intensity(stack, emitter_height_nm, dipole_orientation, False,
                              model.numerical_aperture, model.n_angles)
         / excitation_intensity(stack, emitter_height_nm, dipole_orientation, True,
                                model.numerical_aperture, model.n_angles))
    return DecayRates(total_rate_rel=float(total), radiative_rate_rel=float(rad),
                      collected_enhancement=float(q_gain * x), plasmon_rate_rel=float(spp))


def enhancement_vs_thickness(stack, emitter_depth_nm, thicknesses_nm, dipole_orientation="isotropic",
                             model=EnhancementModel(), rtol=DEFAULT_RTOL, workers=1):
    """Detected-PL gain for a fixed emitter depth below the top surface.

    Returns an (n, 2) array of (thickness_nm, enhancement). Each thickness
    must exceed ``emitter_depth_nm``; ``workers`` > 1 evaluates points in a
    thread pool (results do not depend on it).
    """
    thicknesses = np.asarray(thicknesses_nm, dtype=float).ravel()
    if not emitter_depth_nm > 0:
        raise ValueError("emitter depth must be positive")
    if np.any(thicknesses <= emitter_depth_nm):
        raise ValueError("every thickness must exceed the emitter depth")

    def one(t):
        return dipole_rates(stack.with_thickness(t), t - emitter_depth_nm, dipole_orientation,
                            model, rtol).collected_enhancement

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(one, thicknesses))
    else:
        values = [one(t) for t in thicknesses]
    return np.column_stack([thicknesses, values])
