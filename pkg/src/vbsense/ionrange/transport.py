"""Monte Carlo binary-collision transport kernel (numba).

Species index 0 is the implanted ion, indices 1..n are the target
constituents; recoils carry the species index of the struck atom.

Random numbers come from a stateless counter-based generator
(splitmix64 finalizer over ``(seed, ion index, draw counter)``), so every ion
history is an independent substream and the histogram does not depend on the
order in which ions are processed.
"""

import math

import numpy as np
from numba import njit, uint64

from .scattering import magic_cos_half_theta

_GOLDEN = uint64(0x9E3779B97F4A7C15)
_M1 = uint64(0xBF58476D1CE4E5B9)
_M2 = uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0

MAX_STACK = 4096


@njit(cache=True)
def _mix(z):
    z = z ^ (z >> uint64(30))
    z = z * _M1
    z = z ^ (z >> uint64(27))
    z = z * _M2
    return z ^ (z >> uint64(31))


@njit(cache=True)
def ion_key(seed, ion):
    return _mix(_mix(uint64(seed) + _GOLDEN) ^ _mix(uint64(ion) * _GOLDEN + uint64(1)))


@njit(cache=True)
def uniform(key, counter):
    """Uniform double in (0, 1) for draw number ``counter`` of stream ``key``."""
    bits = _mix(key + uint64(counter) * _GOLDEN) >> uint64(11)
    return (float(bits) + 0.5) * _INV53


@njit(cache=True)
def _rotate(ux, uy, uz, cos_t, sin_t, phi):
    """Direction after deflection by polar angle t and azimuth phi about (ux, uy, uz)."""
    cp = math.cos(phi)
    sp = math.sin(phi)
    if abs(uz) > 0.99999:
        s = 1.0 if uz > 0.0 else -1.0
        return sin_t * cp, sin_t * sp, s * cos_t
    w = math.sqrt(1.0 - uz * uz)
    nx = ux * cos_t + sin_t * (ux * uz * cp - uy * sp) / w
    ny = uy * cos_t + sin_t * (uy * uz * cp + ux * sp) / w
    nz = uz * cos_t - sin_t * cp * w
    norm = math.sqrt(nx * nx + ny * ny + nz * nz)
    return nx / norm, ny / norm, nz / norm


@njit(cache=True)
def run_ion(ion, seed, e0, fractions, masses, e_disp, cutoff,
            flight, p_max, se_coef, a_screen, eps_factor, mass_factor,
            hist, bin_width):
    """Transport one ion and its recoil cascade, scoring vacancies into ``hist``.

    Returns the primary's energy ledger (electronic loss, nuclear transfers,
    residual energy at termination), the number of vacancies scored and the
    primary's final depth (angstrom, negative if it left through the surface).

    Per-pair tables are indexed [moving species, target constituent]:
    ``se_coef`` electronic stopping per unit path and sqrt(eV) (Lindhard-Scharff
    times atomic density), ``a_screen`` screening length, ``eps_factor`` the
    lab-energy to reduced-energy factor, ``mass_factor`` 4 M1 M2 / (M1+M2)^2.
    """
    key = ion_key(seed, ion)
    counter = 0
    n_targets = fractions.shape[0]
    nbins = hist.shape[0]

    st_species = np.empty(MAX_STACK, np.int64)
    st_e = np.empty(MAX_STACK)
    st_z = np.empty(MAX_STACK)
    st_u = np.empty((MAX_STACK, 3))
    top = 0
    st_species[0] = 0
    st_e[0] = e0
    st_z[0] = 0.0
    st_u[0, 0] = 0.0
    st_u[0, 1] = 0.0
    st_u[0, 2] = 1.0
    top = 1

    e_elec = 0.0
    e_nucl = 0.0
    e_resid = 0.0
    z_final = 0.0
    n_vac = 0
    primary = True

    while top > 0:
        top -= 1
        sp = st_species[top]
        e = st_e[top]
        z = st_z[top]
        ux = st_u[top, 0]
        uy = st_u[top, 1]
        uz = st_u[top, 2]
        first = True

        while True:
            if e < cutoff:
                break
            # free flight; the first one is randomized to avoid a spike at one spacing
            step = flight
            if first:
                step = flight * uniform(key, counter)
                counter += 1
                first = False
            de = 0.0
            for j in range(n_targets):
                de += se_coef[sp, j]
            de *= step * math.sqrt(e)
            if de > e:
                de = e
            e -= de
            if primary:
                e_elec += de
            z += step * uz
            if z < 0.0 or e <= 0.0:
                break

            # collision partner and impact parameter
            r = uniform(key, counter)
            counter += 1
            j = 0
            acc = fractions[0]
            while r > acc and j < n_targets - 1:
                j += 1
                acc += fractions[j]
            p = p_max * math.sqrt(uniform(key, counter))
            counter += 1
            phi = 2.0 * math.pi * uniform(key, counter)
            counter += 1

            eps = eps_factor[sp, j] * e
            b = p / a_screen[sp, j]
            c_half = magic_cos_half_theta(eps, b)
            s2_half = 1.0 - c_half * c_half
            t = mass_factor[sp, j] * e * s2_half
            if t > e:
                t = e
            e -= t
            if primary:
                e_nucl += t

            # lab-frame deflection of the moving particle
            cos_cm = 2.0 * c_half * c_half - 1.0
            sin_cm = 2.0 * c_half * math.sqrt(s2_half)
            ratio = masses[sp] / masses[j + 1]
            psi = math.atan2(sin_cm, cos_cm + ratio)
            nux, nuy, nuz = _rotate(ux, uy, uz, math.cos(psi), math.sin(psi), phi)

            if t >= e_disp[j]:
                n_vac += 1
                k = int(z / bin_width)
                if k < nbins:
                    hist[k] += 1
                if t >= cutoff and top < MAX_STACK:
                    # recoil leaves at (pi - theta_cm)/2 on the opposite azimuth
                    rec = 0.5 * (math.pi - math.atan2(sin_cm, cos_cm))
                    rx, ry, rz = _rotate(ux, uy, uz, math.cos(rec), math.sin(rec), phi + math.pi)
                    st_species[top] = j + 1
                    st_e[top] = t
                    st_z[top] = z
                    st_u[top, 0] = rx
                    st_u[top, 1] = ry
                    st_u[top, 2] = rz
                    top += 1
            ux, uy, uz = nux, nuy, nuz

        if primary:
            e_resid = e
            z_final = z
            primary = False

    return e_elec, e_nucl, e_resid, n_vac, z_final


@njit(cache=True, nogil=True)
def run_ions(first_ion, n_ions, seed, e0, fractions, masses, e_disp, cutoff,
             flight, p_max, se_coef, a_screen, eps_factor, mass_factor,
             hist, bin_width, ledger):
    """Transport ions ``first_ion .. first_ion + n_ions - 1``; ledger rows are per ion."""
    for i in range(n_ions):
        el, nu, re, nv, zf = run_ion(first_ion + i, seed, e0, fractions, masses, e_disp,
                                 cutoff, flight, p_max, se_coef, a_screen,
                                 eps_factor, mass_factor, hist, bin_width)
        ledger[i, 0] = el
        ledger[i, 1] = nu
        ledger[i, 2] = re
        ledger[i, 3] = nv
        ledger[i, 4] = zf
