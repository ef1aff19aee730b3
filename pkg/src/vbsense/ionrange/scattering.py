"""Binary-collision kinematics with the ZBL universal screened-Coulomb potential.

Lengths are in angstrom and energies in eV throughout. The scattering angle
is evaluated with the Biersack-Haggmark "magic formula"; the exact scattering
integral (:func:`scattering_angle_integral`) is kept alongside as a slow
reference for tests.
"""

import math

import numpy as np
from numba import njit
from scipy import integrate

E2 = 14.399645  # e^2 / (4 pi eps0), eV*angstrom
BOHR = 0.52917721  # angstrom

# ZBL universal screening function: sum_i c_i exp(-d_i x)
ZBL_C = np.array([0.18175, 0.50986, 0.28022, 0.028171])
ZBL_D = np.array([3.1998, 0.94229, 0.40290, 0.20162])

# magic-formula coefficients fitted to the universal potential
MAGIC_C1 = 0.99229
MAGIC_C2 = 0.011615
MAGIC_C3 = 0.0071222
MAGIC_C4 = 9.3066
MAGIC_C5 = 14.813


def screening_length(z1, z2):
    """ZBL universal screening length in angstrom."""
    return 0.8854 * BOHR / (z1**0.23 + z2**0.23)


@njit(cache=True)
def _phi(x):
    return (0.18175 * math.exp(-3.1998 * x) + 0.50986 * math.exp(-0.94229 * x)
            + 0.28022 * math.exp(-0.40290 * x) + 0.028171 * math.exp(-0.20162 * x))


@njit(cache=True)
def _dphi(x):
    return -(0.18175 * 3.1998 * math.exp(-3.1998 * x)
             + 0.50986 * 0.94229 * math.exp(-0.94229 * x)
             + 0.28022 * 0.40290 * math.exp(-0.40290 * x)
             + 0.028171 * 0.20162 * math.exp(-0.20162 * x))


@njit(cache=True)
def closest_approach(eps, b):
    """Reduced distance of closest approach for reduced energy ``eps`` and impact parameter ``b``.

    Newton iteration on 1 - phi(R)/(eps R) - b^2/R^2 = 0, started from the
    unscreened Coulomb turning point (always at or beyond the screened one).
    """
    half = 0.5 / eps
    r = half + math.sqrt(half * half + b * b)
    for _ in range(100):
        ph = _phi(r)
        dph = _dphi(r)
        f = 1.0 - ph / (eps * r) - (b * b) / (r * r)
        df = -(dph * r - ph) / (eps * r * r) + 2.0 * b * b / (r * r * r)
        step = f / df
        r_new = r - step
        if r_new <= 0.0:
            r_new = 0.5 * r
        if abs(r_new - r) < 1e-12 * r:
            return r_new
        r = r_new
    return r


@njit(cache=True)
def magic_cos_half_theta(eps, b):
    """cos(theta_cm / 2) from the magic formula (reduced units)."""
    r0 = closest_approach(eps, b)
    ph = _phi(r0)
    dph = _dphi(r0)
    v = ph / r0
    dv = (dph * r0 - ph) / (r0 * r0)
    rho = -2.0 * (eps - v) / dv
    sq = math.sqrt(eps)
    alpha = 1.0 + MAGIC_C1 / sq
    beta = (MAGIC_C2 + sq) / (MAGIC_C3 + sq)
    gamma = (MAGIC_C4 + eps) / (MAGIC_C5 + eps)
    a = 2.0 * alpha * eps * b**beta
    ff = gamma * (math.sqrt(1.0 + a * a) - a)
    delta = a * (r0 - b) * ff / (1.0 + ff)
    c = (b + rho + delta) / (r0 + rho)
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    return c


def scattering_angle_integral(eps, b):
    """Centre-of-mass scattering angle from direct quadrature of the classical integral.

    theta = pi - 2 b int_{R0}^inf dr / (r^2 sqrt(f(r))). Substituting
    r = R0 / (1 - s^2) removes the inverse-square-root endpoint singularity.
    """
    eps = float(eps)
    b = float(b)
    r0 = closest_approach(eps, b)

    def f(r):
        return 1.0 - _phi(r) / (eps * r) - (b / r) ** 2

    df0 = (_phi(r0) - _dphi(r0) * r0) / (eps * r0 * r0) + 2.0 * b * b / r0**3
    limit0 = 2.0 / math.sqrt(df0 * r0)

    def h(s):
        u = 1.0 - s * s
        if u <= 0.0:
            return 2.0 * s
        fr = f(r0 / u)
        if s < 1e-6 or fr <= 0.0:
            return limit0
        return 2.0 * s / math.sqrt(fr)

    val, _ = integrate.quad(h, 0.0, 1.0, epsabs=1e-13, epsrel=1e-11, limit=200)
    return math.pi - 2.0 * b / r0 * val
