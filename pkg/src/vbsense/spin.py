"""Spin-1 ground state of the V_B- defect.

Energies are expressed as frequencies (Hz). The Hamiltonian in the S_z basis
{|+1>, |0>, |-1>} is

    H/h = D S_z^2 + E (S_x^2 - S_y^2) + (g mu_B / h) B . S

with z along the defect symmetry axis (normal to the hBN sheet).
"""

from dataclasses import dataclass

import numpy as np

from .errors import BelowZeroFieldSplitting, DegenerateLevels

BOHR_MAGNETON_HZ_PER_T = 13.996e9  # mu_B / h
GAMMA_HZ_PER_T = 27.99e9  # g mu_B / h for g = 2


@dataclass(frozen=True)
class ZfsSpinParams:
    d_gs: float = 3.47e9
    e_gs: float = 50e6
    g_factor: float = 2.0

    def __post_init__(self):
        if not self.d_gs > 0:
            raise ValueError("d_gs must be positive")
        if not 0 <= self.e_gs < self.d_gs:
            raise ValueError("need 0 <= e_gs < d_gs")
        if not self.g_factor > 0:
            raise ValueError("g_factor must be positive")

    @property
    def gamma(self):
        """Zeeman coefficient g mu_B / h in Hz/T (27.99 GHz/T at g = 2)."""
        return GAMMA_HZ_PER_T * self.g_factor / 2.0


@dataclass(frozen=True)
class MagneticField:
    bx: float = 0.0
    by: float = 0.0
    bz: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite([self.bx, self.by, self.bz])):
            raise ValueError("field components must be finite")

    def magnitude(self):
        return float(np.sqrt(self.bx**2 + self.by**2 + self.bz**2))


@dataclass(frozen=True)
class ResonancePair:
    nu1: float
    nu2: float
    # nu2 - nu1 computed before adding D; keeps small splittings exact
    delta: float | None = None

    @property
    def splitting(self):
        return self.nu2 - self.nu1 if self.delta is None else self.delta

    @property
    def center(self):
        return 0.5 * (self.nu1 + self.nu2)


_S = 1 / np.sqrt(2)
SX = np.array([[0, _S, 0], [_S, 0, _S], [0, _S, 0]], dtype=complex)
SY = np.array([[0, -1j * _S, 0], [1j * _S, 0, -1j * _S], [0, 1j * _S, 0]])
SZ = np.diag([1.0, 0.0, -1.0]).astype(complex)


def hamiltonian_matrix(params, field):
    """3x3 Hermitian Hamiltonian (Hz) in the basis {|+1>, |0>, |-1>}."""
    h = params.d_gs * SZ @ SZ + params.e_gs * (SX @ SX - SY @ SY)
    h = h + params.gamma * (field.bx * SX + field.by * SY + field.bz * SZ)
    return h


def resonance_frequencies_axial(params, b_z):
    """Closed-form transitions for a field along the symmetry axis; nu1 < nu2."""
    half = np.hypot(params.e_gs, params.gamma * b_z)
    return ResonancePair(float(params.d_gs - half), float(params.d_gs + half), float(2.0 * half))


def resonance_frequencies_general(params, field, overlap_tol=1e-6):
    """Transitions from the |0>-like level to the two |+-1>-like levels, by diagonalization.

    The |0>-like eigenvector is the one with the largest weight on |0>, which
    keeps the labelling continuous through level crossings. Raises
    DegenerateLevels when that choice is ambiguous.
    """
    vals, vecs = np.linalg.eigh(hamiltonian_matrix(params, field))
    weight0 = np.abs(vecs[1, :]) ** 2
    order = np.argsort(weight0)[::-1]
    if weight0[order[0]] - weight0[order[1]] < overlap_tol:
        raise DegenerateLevels(
            f"|0>-like level ambiguous: weights {weight0[order[0]]:.6g}, {weight0[order[1]]:.6g}")
    i0 = order[0]
    others = [i for i in range(3) if i != i0]
    f = np.sort(np.abs(vals[others] - vals[i0]))
    return ResonancePair(float(f[0]), float(f[1]))


def field_from_splitting(params, splitting):
    """Axial field magnitude (T) that produces ``splitting`` = nu2 - nu1 (Hz)."""
    if splitting < 2 * params.e_gs:
        raise BelowZeroFieldSplitting(
            f"splitting {splitting:g} Hz is below the zero-field value {2 * params.e_gs:g} Hz")
    half = 0.5 * splitting
    # factored difference of squares avoids cancellation near zero field
    return float(np.sqrt(max((half - params.e_gs) * (half + params.e_gs), 0.0)) / params.gamma)
