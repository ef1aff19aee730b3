from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import exact_populations, rate_generator
from vbsense.errors import (MalformedSequence, MultipleSweepPlaceholders, NoPolarization,
                            SequenceSyntaxError, StepTooLarge, UnknownUnit)
from vbsense.fitting import (echo_decay, exp_decay, lm_fit, rabi_two_tone, seed_decay,
                             seed_rabi_two_tone)
from vbsense.pulsed import (REFERENCE_TEMPLATES, TEMPLATES, BlochState, LevelSystem, PulseOp,
                            PulseSequence, evolve_rates, format_sequence, initialization_time,
                            parse_sequence, propagate, rabi_frequency_vs_power, run_sequence,
                            steady_state, thermal_populations)
from vbsense.pulsed.bloch import free_evolution, rotate
from vbsense.pulsed.rates import GS0, GSM, GSP

SYS = LevelSystem()


def _generator(sys, laser_on=True):
    return rate_generator(sys.k_p, sys.k_r, sys.k_isc0, sys.k_isc1, sys.k_ms, sys.beta, laser_on)


# --- rate equations ---

def test_rate_matrix_matches_transition_list():
    for on in (True, False):
        np.testing.assert_array_equal(SYS.rate_matrix(on), _generator(SYS, on))


def test_zero_rates_identity():
    sys = LevelSystem(k_p=0, k_r=0, k_isc0=0, k_isc1=0, k_ms=0)
    out = evolve_rates(sys, True, 1e-9)
    np.testing.assert_array_equal(out.populations, sys.populations)


@pytest.mark.parametrize("laser_on", [True, False])
def test_integrator_matches_matrix_exponential(laser_on):
    p0 = np.array([0.2, 0.1, 0.1, 0.25, 0.1, 0.05, 0.2])
    sys = SYS.with_populations(p0)
    dt, n = 0.1e-9, 10_000
    out = propagate(sys, laser_on, dt, n).populations
    exact = exact_populations(_generator(SYS, laser_on), p0, dt * n)
    assert np.max(np.abs(out - exact)) <= 1e-8


def test_single_steps_match_oracle():
    p = thermal_populations()
    sys = SYS.with_populations(p)
    m = _generator(SYS)
    for k in range(1, 51):
        sys = evolve_rates(sys, True, 0.1e-9)
        assert np.max(np.abs(sys.populations - exact_populations(m, p, k * 0.1e-9))) <= 1e-8


def test_population_conservation_million_steps():
    out = propagate(SYS, True, 1e-9, 1_000_000).populations
    assert abs(out.sum() - 1.0) <= 1e-9
    assert np.all(out >= 0)


def test_approach_to_steady_state():
    m = _generator(SYS)
    rates = [SYS.k_p, SYS.k_r, SYS.k_isc0, SYS.k_isc1, SYS.k_ms]
    dt = 1e-9
    # at 10 / min(rate) the integrator tracks the exact transient
    n = int(np.ceil(10 / min(r for r in rates if r > 0) / dt))
    out = propagate(SYS, True, dt, n).populations
    exact = exact_populations(m, thermal_populations(), n * dt)
    assert np.max(np.abs(out - exact)) <= 1e-8
    # the slowest mode of the cycle sets when the steady state is reached to 1e-6
    slowest = np.sort(np.abs(np.linalg.eigvals(m).real))[1]
    n = int(np.ceil(20 / slowest / dt))
    out = propagate(SYS, True, dt, n).populations
    assert np.max(np.abs(out - steady_state(SYS))) <= 1e-6
    assert np.max(np.abs(m @ steady_state(SYS))) <= 1e-6 * np.max(np.abs(m))


def test_laser_polarizes_ground_state():
    p = steady_state(SYS)
    assert p[GS0] > p[GSP] and p[GS0] > p[GSM]


def test_step_too_large():
    with pytest.raises(StepTooLarge):
        evolve_rates(SYS, True, 2e-9)
    with pytest.raises(ValueError):
        evolve_rates(SYS, True, 0.0)


def test_level_system_validation():
    with pytest.raises(ValueError):
        LevelSystem(k_r=-1.0)
    with pytest.raises(ValueError):
        LevelSystem(populations=np.full(7, 0.2))


def test_initialization_time_reference_and_monotone():
    t_ref = initialization_time(SYS, 5.0)
    assert 30e-9 <= t_ref <= 300e-9
    times = [initialization_time(SYS, p) for p in np.linspace(1.0, 10.0, 10)]
    assert np.all(np.diff(times) < 0)


def test_initialization_time_matches_exact_crossing():
    lit = SYS.with_laser_power(5.0)
    m = _generator(lit)
    p_inf = steady_state(lit)
    pol = lambda p: p[GS0] - 0.5 * (p[GSP] + p[GSM])
    target = (1 - np.exp(-1)) * pol(p_inf)
    ts = np.linspace(0, 400e-9, 40001)
    vals = np.array([pol(exact_populations(m, thermal_populations(), t)) for t in ts[::100]])
    k = int(np.argmax(vals >= target))
    lo = ts[::100][k - 1]
    fine = ts[(ts >= lo) & (ts <= lo + 1e-9)]
    vals = np.array([pol(exact_populations(m, thermal_populations(), t)) for t in fine])
    t_exact = np.interp(target, vals, fine)
    assert initialization_time(SYS, 5.0) == pytest.approx(t_exact, rel=1e-3)


def test_no_polarization_without_spin_selectivity():
    with pytest.raises(NoPolarization):
        initialization_time(replace(SYS, k_isc1=SYS.k_isc0), 5.0)


# --- Bloch picture ---

@settings(max_examples=100, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 5e-6),
       st.floats(-5e7, 5e7))
def test_bloch_norm_non_increasing(u, v, w, dt, det):
    vec = np.array([u, v, w])
    if np.linalg.norm(vec) > 1:
        vec /= np.linalg.norm(vec)
    out = free_evolution(vec, dt, det, 17e-6, 1.1e-6)
    assert np.linalg.norm(out) <= np.linalg.norm(vec) + 1e-12
    state = BlochState(*vec)
    assert state.free(dt, det).norm() <= state.norm() + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(-10, 10), st.floats(-np.pi, np.pi))
def test_rotation_preserves_norm(angle, phase):
    vec = np.array([0.3, -0.4, 0.5])
    np.testing.assert_allclose(np.linalg.norm(rotate(vec, angle, phase)), np.linalg.norm(vec))


def test_pi_pulse_inverts():
    np.testing.assert_allclose(rotate([0, 0, 1.0], np.pi), [0, 0, -1.0], atol=1e-15)


def test_bloch_validation():
    with pytest.raises(ValueError):
        BlochState(u=0.8, v=0.8)
    with pytest.raises(ValueError):
        BlochState(t1_s=0.0)


def test_rabi_frequency_vs_power():
    assert rabi_frequency_vs_power(0.0) == 0.0
    f = rabi_frequency_vs_power(np.array([0.25, 1.0]))
    assert f[1] == 2 * f[0]
    tens = rabi_frequency_vs_power(np.array([0.1, 0.5, 2.0]))
    assert np.all((tens >= 1e6) & (tens < 100e6))
    with pytest.raises(ValueError):
        rabi_frequency_vs_power(-1.0)


# --- sequence language ---

def test_parse_t1_template():
    seq = parse_sequence("laser 5us; wait t; read 300ns")
    assert [op.kind for op in seq.ops] == ["laser", "wait", "read"]
    assert seq.sweep_indices == (1,)
    assert seq.ops[0].duration_ns == 5000.0


def test_parse_echo_template():
    seq = parse_sequence("mw pi/2; wait t; mw pi; wait t; mw pi/2; read 300ns")
    assert [op.angle for op in seq.ops if op.kind == "mw"] == ["pi/2", "pi", "pi/2"]
    assert seq.sweep_indices == (1, 3) and seq.placeholder == "t"


def test_parse_options_and_comments():
    seq = parse_sequence("# header\nlaser 1ms\nmw 20ns phase 90 rabi 15MHz  # drive\nread 2us")
    mw = seq.ops[1]
    assert (mw.duration_ns, mw.phase_deg, mw.rabi_hz) == (20.0, 90.0, 15e6)
    assert seq.ops[0].duration_ns == 1e6


def test_unknown_unit():
    with pytest.raises(UnknownUnit):
        parse_sequence("wait 5parsecs")


def test_syntax_error_location():
    with pytest.raises(SequenceSyntaxError) as info:
        parse_sequence("laser 5us\n  wiat 3ns; read 1us")
    assert (info.value.line, info.value.column) == (2, 3)
    with pytest.raises(SequenceSyntaxError) as info:
        parse_sequence("laser 5us; read 1us extra")
    assert (info.value.line, info.value.column) == (1, 21)


def test_multiple_placeholders():
    with pytest.raises(MultipleSweepPlaceholders):
        parse_sequence("wait t; wait u; read 1us")


def test_malformed_sequences():
    with pytest.raises(MalformedSequence):
        parse_sequence("laser 5us; wait t")
    with pytest.raises(MalformedSequence):
        parse_sequence("")
    seq = parse_sequence("laser 5us; wait 1us; read 300ns")
    with pytest.raises(MalformedSequence):
        run_sequence(seq, SYS, BlochState(), [1.0])


durations = st.floats(0.1, 1e7, allow_nan=False).map(lambda v: float(f"{v:.6g}"))


@st.composite
def sequences(draw):
    ops = []
    for _ in range(draw(st.integers(0, 6))):
        kind = draw(st.sampled_from(["laser", "mw", "wait"]))
        if kind == "laser":
            ops.append(PulseOp("laser", draw(durations)))
        elif kind == "wait":
            if draw(st.booleans()):
                ops.append(PulseOp("wait", None, sweep="tau"))
            else:
                ops.append(PulseOp("wait", draw(durations)))
        else:
            form = draw(st.sampled_from(["dur", "angle", "sweep"]))
            phase = draw(st.sampled_from([0.0, 90.0, 180.0, -45.5]))
            rabi = draw(st.one_of(st.none(), st.floats(1e5, 1e9).map(lambda v: float(f"{v:.5g}"))))
            if form == "dur":
                ops.append(PulseOp("mw", draw(durations), phase_deg=phase, rabi_hz=rabi))
            elif form == "angle":
                ops.append(PulseOp("mw", None, angle=draw(st.sampled_from(["pi", "pi/2"])),
                                   phase_deg=phase, rabi_hz=rabi))
            else:
                ops.append(PulseOp("mw", None, sweep="tau", phase_deg=phase, rabi_hz=rabi))
    ops.append(PulseOp("read", draw(durations)))
    return PulseSequence(tuple(ops))


@settings(max_examples=200, deadline=None)
@given(sequences())
def test_format_parse_round_trip(seq):
    text = format_sequence(seq)
    again = parse_sequence(text)
    assert again == seq
    assert format_sequence(again) == text


# --- sequence runs ---

def test_t1_round_trip():
    tau = np.linspace(1000.0, 85_000.0, 41)
    c = run_sequence(parse_sequence(TEMPLATES["t1"]), SYS, BlochState(), tau, seed=1)
    res = lm_fit(exp_decay(), tau, c, np.ones_like(c), seed_decay(tau, c), absolute_sigma=False)
    assert res.params[1] == pytest.approx(17_000.0, rel=0.02)


def test_echo_round_trip_and_zero_delay():
    tau = np.linspace(0.0, 3000.0, 41)
    seq = parse_sequence(TEMPLATES["echo"])
    ref = parse_sequence(REFERENCE_TEMPLATES["echo"])
    c = run_sequence(seq, SYS, BlochState(), tau, seed=1, reference=ref)
    res = lm_fit(echo_decay(), tau, c, np.ones_like(c), seed_decay(tau, c, 2.0), absolute_sigma=False)
    assert res.params[1] == pytest.approx(1100.0, rel=0.02)
    # no free evolution: the full echo amplitude
    assert c[0] == pytest.approx(res.params[0] + res.params[2], rel=1e-6)
    assert c[0] == np.max(np.abs(c))


def test_rabi_oscillates_at_set_frequency():
    t = np.linspace(0, 300, 301)
    bloch = BlochState(rabi_hz=25e6)
    c = run_sequence(parse_sequence(TEMPLATES["rabi"]), SYS, bloch, t, seed=0)
    spec = np.abs(np.fft.rfft(c - c.mean(), 16 * t.size))
    freqs = np.fft.rfftfreq(16 * t.size, 1e-9)
    assert freqs[np.argmax(spec)] == pytest.approx(25e6, rel=0.03)


def test_two_tone_rabi_recovers_t2star():
    bloch = BlochState(tones=((1.0, 1.0), (0.6, 1.7)))
    t = np.linspace(0, 600, 301)
    c = run_sequence(parse_sequence(TEMPLATES["rabi"]), SYS, bloch, t, seed=1)
    res = lm_fit(rabi_two_tone(), t, c, np.ones_like(c), seed_rabi_two_tone(t, c),
                 absolute_sigma=False)
    p = res.as_dict()
    assert p["tau_a"] == pytest.approx(120.0, rel=0.05)
    assert p["tau_b"] == pytest.approx(120.0, rel=0.05)
    assert sorted([p["freq1"], p["freq2"]]) == pytest.approx([0.020, 0.034], rel=0.01)


def test_run_is_deterministic():
    seq = parse_sequence(TEMPLATES["echo"])
    tau = np.linspace(0, 2000, 5)
    a = run_sequence(seq, SYS, BlochState(), tau, seed=9)
    b = run_sequence(seq, SYS, BlochState(), tau, seed=9)
    np.testing.assert_array_equal(a, b)
