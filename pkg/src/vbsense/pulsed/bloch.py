"""Two-level pseudo-spin {ms=0, ms=+1} in the rotating frame.

The Bloch vector is (u, v, w) with w = P(0) - P(+1). Microwave pulses are
resonant rotations about an in-plane axis set by the pulse phase; free
evolution precesses (u, v) at the detuning and relaxes with T1 and T2.
"""

import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class BlochState:
    u: float = 0.0
    v: float = 0.0
    w: float = 1.0
    t1_s: float = 17e-6
    t2star_s: float = 120e-9
    t2_s: float = 1.1e-6
    rabi_hz: float = 20e6
    # (weight, Rabi-frequency factor) per sub-ensemble; weights are normalized on use
    tones: tuple = ((1.0, 1.0),)

    def __post_init__(self):
        if not (self.t1_s > 0 and self.t2star_s > 0 and self.t2_s > 0):
            raise ValueError("relaxation times must be positive")
        if self.rabi_hz < 0:
            raise ValueError("rabi_hz must be nonnegative")
        if self.norm() > 1.0 + 1e-9:
            raise ValueError("Bloch vector norm exceeds 1")
        if not self.tones or any(wt <= 0 or f <= 0 for wt, f in self.tones):
            raise ValueError("tones need positive weights and Rabi factors")

    @property
    def vector(self):
        return np.array([self.u, self.v, self.w])

    def norm(self):
        return math.sqrt(self.u**2 + self.v**2 + self.w**2)

    def with_vector(self, vec):
        u, v, w = map(float, vec)
        return replace(self, u=u, v=v, w=w)

    def tone_weights(self):
        wts = np.array([wt for wt, _ in self.tones], dtype=float)
        return wts / wts.sum()

    def rotate(self, angle, phase_rad=0.0, damping=1.0):
        return self.with_vector(rotate(self.vector, angle, phase_rad, damping))

    def free(self, dt, detuning_hz=0.0):
        """Free evolution for ``dt`` seconds: precession, T2 dephasing, T1 relaxation to w = 0."""
        return self.with_vector(free_evolution(self.vector, dt, detuning_hz, self.t1_s, self.t2_s))


def rotate(vec, angle, phase_rad=0.0, damping=1.0):
    """Rotate Bloch vectors ``vec`` (..., 3) by ``angle`` about (cos phase, sin phase, 0).

    ``damping`` shrinks the whole vector, modelling dephasing of the driven
    oscillation; applied isotropically it commutes with the rotation.
    ``angle`` may be an array broadcasting against vec[..., 0].
    """
    vec = np.asarray(vec, dtype=float)
    n = np.array([math.cos(phase_rad), math.sin(phase_rad), 0.0])
    par = (vec @ n)[..., None] * n
    perp = vec - par
    cross = np.cross(n, perp)
    a = np.asarray(angle, dtype=float)[..., None]
    return damping * (par + perp * np.cos(a) + cross * np.sin(a))


def free_evolution(vec, dt, detuning_hz, t1_s, t2_s):
    vec = np.asarray(vec, dtype=float)
    phi = 2.0 * np.pi * np.asarray(detuning_hz, dtype=float) * dt
    c, s = np.cos(phi), np.sin(phi)
    d2 = math.exp(-dt / t2_s)
    d1 = math.exp(-dt / t1_s)
    out = np.empty(np.broadcast_shapes(vec.shape, np.shape(phi) + (3,)))
    out[..., 0] = d2 * (vec[..., 0] * c - vec[..., 1] * s)
    out[..., 1] = d2 * (vec[..., 0] * s + vec[..., 1] * c)
    out[..., 2] = d1 * vec[..., 2]
    return out


def rabi_frequency_vs_power(p_mw, kappa=20e6):
    """Rabi frequency (Hz) for microwave power ``p_mw`` (W): kappa * sqrt(p)."""
    p = np.asarray(p_mw, dtype=float)
    if np.any(p < 0):
        raise ValueError("microwave power must be nonnegative")
    return kappa * np.sqrt(p)
