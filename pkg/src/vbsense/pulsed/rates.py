"""Seven-level optical pumping cycle.

States: GS0, GS+, GS-, ES0, ES+, ES-, MS. Optical pumping and radiative
decay conserve the spin projection; intersystem crossing from ES to the
metastable singlet is faster from ms=+-1 than from ms=0, and the singlet
returns preferentially to GS0. That asymmetry polarizes the ground state and
darkens ms=+-1 under illumination.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import NoPolarization, StepTooLarge

GS0, GSP, GSM, ES0, ESP, ESM, MS = range(7)
N_LEVELS = 7
GROUND = (GS0, GSP, GSM)
EXCITED = (ES0, ESP, ESM)

MAX_DT = 1e-9  # s, largest step accepted by evolve_rates
SUBSTEP_FACTOR = 0.02  # internal RK4 step is at most this fraction of 1/max(rate)

# pump rate per mW of laser power at the reference spot size, 1/s
K_P_PER_MW = 3.0e6
REFERENCE_LASER_MW = 5.0


def thermal_populations():
    p = np.zeros(N_LEVELS)
    p[list(GROUND)] = 1.0 / 3.0
    return p


@dataclass
class LevelSystem:
    populations: np.ndarray = field(default_factory=thermal_populations)
    k_p: float = K_P_PER_MW * REFERENCE_LASER_MW
    k_r: float = 2.5e8
    k_isc0: float = 5.0e8
    k_isc1: float = 1.5e9
    k_ms: float = 3.3e7
    beta: float = 0.1

    def __post_init__(self):
        self.populations = np.asarray(self.populations, dtype=float).copy()
        if self.populations.shape != (N_LEVELS,):
            raise ValueError("populations must have 7 entries")
        if np.any(self.populations < -1e-12) or abs(self.populations.sum() - 1.0) > 1e-9:
            raise ValueError("populations must be nonnegative and sum to 1")
        for name in ("k_p", "k_r", "k_isc0", "k_isc1", "k_ms"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not 0 <= self.beta <= 1:
            raise ValueError("beta must lie in [0, 1]")

    def with_populations(self, populations):
        return replace(self, populations=np.asarray(populations, dtype=float))

    def with_laser_power(self, laser_mw, k_p_per_mw=K_P_PER_MW):
        return replace(self, k_p=k_p_per_mw * laser_mw)

    def rate_matrix(self, laser_on):
        """Generator M with dp/dt = M p; every column sums to zero."""
        m = np.zeros((N_LEVELS, N_LEVELS))

        def link(src, dst, k):
            m[dst, src] += k
            m[src, src] -= k

        kp = self.k_p if laser_on else 0.0
        for g, e in zip(GROUND, EXCITED):
            link(g, e, kp)
            link(e, g, self.k_r)
        link(ES0, MS, self.k_isc0)
        link(ESP, MS, self.k_isc1)
        link(ESM, MS, self.k_isc1)
        link(MS, GS0, self.k_ms * (1.0 - self.beta))
        link(MS, GSP, self.k_ms * self.beta / 2.0)
        link(MS, GSM, self.k_ms * self.beta / 2.0)
        return m

    def max_rate(self, laser_on):
        return float(np.max(-np.diag(self.rate_matrix(laser_on))))


def rk4_step_matrix(m, h):
    """One classical RK4 step for the linear system dp/dt = M p, as a matrix."""
    z = m * h
    z2 = z @ z
    z3 = z2 @ z
    z4 = z3 @ z
    return np.eye(len(m)) + z + z2 / 2.0 + z3 / 6.0 + z4 / 24.0


def _substeps(sys, laser_on, dt):
    rate = sys.max_rate(laser_on)
    if rate == 0.0:
        return 1
    return max(1, int(np.ceil(dt * rate / SUBSTEP_FACTOR)))


def step_propagator(sys, laser_on, dt):
    """Propagator for one ``evolve_rates`` step of length ``dt``.

    The step is split into equal RK4 substeps no longer than
    SUBSTEP_FACTOR / max(rate), which keeps the scheme well inside its
    stability region and its error below 1e-8 against the exact exponential.
    """
    n = _substeps(sys, laser_on, dt)
    return np.linalg.matrix_power(rk4_step_matrix(sys.rate_matrix(laser_on), dt / n), n)


def evolve_rates(sys, laser_on, dt):
    """Advance the populations by ``dt`` seconds (0 < dt <= 1 ns)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if dt > MAX_DT:
        raise StepTooLarge(f"dt = {dt:g} s exceeds the {MAX_DT:g} s limit")
    return sys.with_populations(step_propagator(sys, laser_on, dt) @ sys.populations)


def propagate(sys, laser_on, dt, n_steps):
    """Apply ``n_steps`` consecutive steps of length ``dt``; returns the new system."""
    if dt > MAX_DT:
        raise StepTooLarge(f"dt = {dt:g} s exceeds the {MAX_DT:g} s limit")
    prop = step_propagator(sys, laser_on, dt)
    p = sys.populations.copy()
    for _ in range(n_steps):
        p = prop @ p
    return sys.with_populations(p)


def evolve_for(sys, laser_on, duration):
    """Advance by an arbitrary duration using repeated RK4 substeps."""
    if duration <= 0:
        return sys
    return sys.with_populations(duration_propagator(sys, laser_on, duration) @ sys.populations)


def duration_propagator(sys, laser_on, duration):
    n = _substeps(sys, laser_on, duration)
    return np.linalg.matrix_power(rk4_step_matrix(sys.rate_matrix(laser_on), duration / n), n)


def steady_state(sys, laser_on=True):
    """Null vector of the rate matrix, normalized to unit sum."""
    m = sys.rate_matrix(laser_on)
    a = np.vstack([m, np.ones(N_LEVELS)])
    b = np.zeros(N_LEVELS + 1)
    b[-1] = 1.0
    p = np.linalg.lstsq(a, b, rcond=None)[0]
    return np.clip(p, 0.0, None) / np.clip(p, 0.0, None).sum()


def ground_polarization(p):
    """Excess of GS0 over the mean of GS+ and GS-."""
    return p[GS0] - 0.5 * (p[GSP] + p[GSM])


def initialization_time(sys, laser_power, k_p_per_mw=K_P_PER_MW, dt=0.5e-9, t_max=20e-6):
    """Time (s) for GS0 polarization to reach 1 - 1/e of its steady-state excess.

    Starts from thermal ground-state populations and integrates with the laser
    on at ``laser_power`` mW; the crossing is linearly interpolated.
    """
    if not laser_power > 0:
        raise ValueError("laser_power must be positive")
    if sys.k_isc0 == sys.k_isc1:
        raise NoPolarization("spin-independent intersystem crossing cannot polarize")
    lit = replace(sys, populations=thermal_populations()).with_laser_power(laser_power, k_p_per_mw)
    target = (1.0 - np.exp(-1.0)) * ground_polarization(steady_state(lit))
    prop = step_propagator(lit, True, dt)
    p = lit.populations.copy()
    prev = ground_polarization(p)
    n = int(t_max / dt)
    for i in range(1, n + 1):
        p = prop @ p
        cur = ground_polarization(p)
        if cur >= target:
            return (i - 1 + (target - prev) / (cur - prev)) * dt
        prev = cur
    raise NoPolarization(f"polarization did not reach 1-1/e of steady state in {t_max:g} s")
