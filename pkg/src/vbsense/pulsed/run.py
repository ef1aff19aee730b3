"""Execute pulse sequences on the coupled rate / pseudo-spin model.

Each shot starts from the optically pumped steady state. The ensemble is a
set of members with static detunings drawn from a Lorentzian of half width
1/(2 pi T2*) and, per tone, a Rabi-frequency factor. Every member carries
its own 7-level populations plus the (u, v) coherence of the {0, +1} pair;
the pseudo-spin population difference is w = GS0 - GS+.

Readout integrates the radiative flux k_r * sum(ES) over the read window.
The returned contrast is (I_ref - I) / I_ref, where I_ref is the same
window read from the pumped steady state.
"""

import math
import numpy as np

from ..errors import MalformedSequence
from .rates import ESM, ESP, ES0, GS0, GSM, GSP, N_LEVELS, SUBSTEP_FACTOR, rk4_step_matrix, steady_state

N_MEMBERS = 256


class _Propagators:
    """Cached RK4 propagators; the read propagator carries a flux accumulator."""

    def __init__(self, sys):
        self.sys = sys
        self.cache = {}
        m_on = sys.rate_matrix(True)
        aug = np.zeros((N_LEVELS + 1, N_LEVELS + 1))
        aug[:N_LEVELS, :N_LEVELS] = m_on
        aug[N_LEVELS, [ES0, ESP, ESM]] = sys.k_r
        self.m = {True: m_on, False: sys.rate_matrix(False), "read": aug}
        self.rate = {k: float(np.max(-np.diag(v))) for k, v in self.m.items()}

    def __call__(self, mode, duration_s):
        key = (mode, duration_s)
        if key not in self.cache:
            rate = self.rate[mode]
            n = max(1, int(math.ceil(duration_s * rate / SUBSTEP_FACTOR))) if rate > 0 else 1
            step = rk4_step_matrix(self.m[mode], duration_s / n)
            self.cache[key] = np.linalg.matrix_power(step, n)
        return self.cache[key]


def _read(props, pops, window_s):
    prop = props("read", window_s)
    aug = np.concatenate([pops, np.zeros((pops.shape[0], 1))], axis=1) @ prop.T
    return aug[:, :N_LEVELS], aug[:, N_LEVELS]


def _ensemble(bloch, seed, n_members):
    rng = np.random.Generator(np.random.Philox(seed))
    hwhm = 1.0 / (2.0 * math.pi * bloch.t2star_s)
    detunings = hwhm * rng.standard_cauchy(n_members)
    return detunings


def _mw(pops, uv, angle, phase_rad, damping):
    n2 = pops[:, GS0] + pops[:, GSP]
    w = pops[:, GS0] - pops[:, GSP]
    vec = np.column_stack([uv, w])
    c, s = math.cos(phase_rad), math.sin(phase_rad)
    par = vec[:, 0] * c + vec[:, 1] * s
    perp = vec - par[:, None] * np.array([c, s, 0.0])
    cross = np.column_stack([s * perp[:, 2], -c * perp[:, 2], c * perp[:, 1] - s * perp[:, 0]])
    # isotropic shrink so that rotations and damping commute (echoes refocus exactly)
    out = damping * (par[:, None] * np.array([c, s, 0.0])
                     + perp * np.cos(angle)[:, None] + cross * np.sin(angle)[:, None])
    pops = pops.copy()
    pops[:, GS0] = 0.5 * (n2 + out[:, 2])
    pops[:, GSP] = 0.5 * (n2 - out[:, 2])
    return pops, out[:, :2]


def _wait(props, pops, uv, dt_s, detunings, bloch):
    pops = pops @ props(False, dt_s).T
    # spin-lattice relaxation of the ground triplet toward equal populations
    ground = pops[:, [GS0, GSP, GSM]]
    mean = ground.mean(axis=1, keepdims=True)
    pops[:, [GS0, GSP, GSM]] = mean + (ground - mean) * math.exp(-dt_s / bloch.t1_s)
    phi = 2.0 * math.pi * detunings * dt_s
    c, s = np.cos(phi), np.sin(phi)
    d2 = math.exp(-dt_s / bloch.t2_s)
    uv = d2 * np.column_stack([uv[:, 0] * c - uv[:, 1] * s, uv[:, 0] * s + uv[:, 1] * c])
    return pops, uv


def _pulse_duration_s(op, rabi_hz, sweep_ns):
    if op.sweep is not None:
        return sweep_ns * 1e-9
    if op.angle is not None:
        if rabi_hz <= 0:
            raise MalformedSequence("pi pulses need a nonzero Rabi frequency")
        return (0.5 if op.angle == "pi" else 0.25) / rabi_hz
    return op.duration_ns * 1e-9


def _run_shot(seq, props, start, bloch, detunings, factors, sweep_ns):
    pops = np.repeat(start[None, :], len(detunings), axis=0)
    uv = np.zeros((len(detunings), 2))
    signal = None
    for op in seq.ops:
        dt = _pulse_duration_s(op, op.rabi_hz or bloch.rabi_hz, sweep_ns)
        if dt <= 0:
            continue
        if op.kind == "laser":
            pops = pops @ props(True, dt).T
            uv[:] = 0.0
        elif op.kind == "read":
            pops, flux = _read(props, pops, dt)
            uv[:] = 0.0
            signal = flux
        elif op.kind == "wait":
            pops, uv = _wait(props, pops, uv, dt, detunings, bloch)
        else:
            rabi = op.rabi_hz or bloch.rabi_hz
            angle = 2.0 * math.pi * rabi * factors * dt
            damping = math.exp(-dt / bloch.t2star_s)
            pops, uv = _mw(pops, uv, angle, math.radians(op.phase_deg), damping)
    return signal


def run_sequence(seq, sys, bloch, sweep, seed=0, n_members=N_MEMBERS, reference=None):
    """Readout contrast of ``seq`` for each swept duration in ``sweep`` (ns).

    The sequence must contain exactly one swept placeholder (it may occur in
    several statements) and at least one read; the last read is the signal.

    With ``reference`` (a second sequence, typically the same one with the
    last projection pulse phase-shifted by 180 degrees) the result is the
    phase-cycled difference contrast(seq) - contrast(reference), which
    removes population drifts that do not pass through the spin coherence.
    """
    if reference is not None:
        return (run_sequence(seq, sys, bloch, sweep, seed, n_members)
                - run_sequence(reference, sys, bloch, sweep, seed, n_members))
    if seq.placeholder is None:
        raise MalformedSequence("sequence has no swept duration placeholder")
    if not any(op.kind == "read" for op in seq.ops):
        raise MalformedSequence("sequence has no read window")
    sweep = np.asarray(sweep, dtype=float)
    if np.any(sweep < 0):
        raise ValueError("swept durations must be nonnegative")

    props = _Propagators(sys)
    start = steady_state(sys, laser_on=True)
    detunings = _ensemble(bloch, seed, n_members)
    weights = bloch.tone_weights()
    window = [op for op in seq.ops if op.kind == "read"][-1].duration_ns * 1e-9
    _, ref_flux = _read(props, start[None, :], window)
    i_ref = float(ref_flux[0])
    if not i_ref > 0:
        raise ValueError("no fluorescence in the read window (laser pump rate is zero)")

    out = np.empty(sweep.size)
    for k, t in enumerate(sweep):
        total = 0.0
        for wt, (_, factor) in zip(weights, bloch.tones):
            factors = np.full(n_members, factor)
            flux = _run_shot(seq, props, start, bloch, detunings, factors, t)
            total += wt * float(flux.mean())
        out[k] = (i_ref - total) / i_ref
    return out

