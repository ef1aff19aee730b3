import numpy as np
import pytest

from oracles import brute_force_argmin, central_jacobian
from vbsense.errors import DimensionMismatch, NotConverged, SingularJacobian, TooFewDips
from vbsense.fitting import (FitModel, echo_decay, exp_decay, get_model, jacobian, lm_fit,
                             multi_lorentzian, rabi_two_tone, saturation, seed_decay,
                             seed_multi_lorentzian, seed_rabi_two_tone, seed_saturation)
from vbsense.spectra import LorentzianLine, OdmrSpectrum, add_shot_noise, synth_spectrum
from vbsense.spin import ZfsSpinParams, resonance_frequencies_axial

RNG = np.random.default_rng(2024)


def _random_case(model_id, rng):
    if model_id == "multi_lorentzian(2)":
        x = rng.uniform(3.2e9, 3.7e9, 100)
        p = [rng.uniform(1e3, 1e5), rng.uniform(3.38e9, 3.45e9), rng.uniform(50e6, 200e6),
             rng.uniform(0.05, 0.4), rng.uniform(3.49e9, 3.56e9), rng.uniform(50e6, 200e6),
             rng.uniform(0.05, 0.4)]
    elif model_id == "saturation":
        x = rng.uniform(0.1, 20.0, 100)
        p = [rng.uniform(1e4, 1e6), rng.uniform(0.5, 10.0)]
    elif model_id in ("exp_decay", "echo_decay"):
        x = rng.uniform(0.0, 50.0, 100)
        p = [rng.uniform(-1, 1), rng.uniform(1.0, 30.0), rng.uniform(-1, 1)]
    else:
        x = rng.uniform(0.0, 500.0, 100)
        p = [rng.uniform(-1, 1), rng.uniform(0.1, 1), rng.uniform(50, 200), rng.uniform(0.005, 0.05),
             rng.uniform(-3, 3), rng.uniform(0.1, 1), rng.uniform(50, 200), rng.uniform(0.005, 0.05),
             rng.uniform(-3, 3)]
    return x, np.array(p)


MODEL_IDS = ["multi_lorentzian(2)", "saturation", "exp_decay", "echo_decay", "rabi_two_tone"]


@pytest.mark.parametrize("model_id", MODEL_IDS)
def test_jacobian_matches_central_differences(model_id):
    model = get_model(model_id)
    rng = np.random.default_rng(11)
    for _ in range(20):
        x, p = _random_case(model_id, rng)
        ja = jacobian(model, x, p)
        jn = central_jacobian(model, x, p)
        scale = np.max(np.abs(ja), axis=0)
        # relative to each entry, with a column-scale floor for entries that vanish
        err = np.abs(ja - jn) / (np.abs(jn) + scale[None, :] * 1e-3)
        assert err.max() < 1e-5, f"worst relative mismatch {err.max():.3g}"


def test_jacobian_special_points():
    ml = multi_lorentzian(1)
    p = np.array([1e4, 3.47e9, 1e8, 0.2])
    assert jacobian(ml, np.array([3.47e9]), p)[0, 1] == 0.0
    ed = exp_decay()
    assert jacobian(ed, np.array([0.0]), np.array([2.0, 5.0, 0.1]))[0, 0] == 1.0


def test_get_model_ids():
    assert get_model("multi_lorentzian(3)").n_params == 10
    assert get_model(" saturation ").param_names == ("i_sat", "p_sat")
    with pytest.raises(ValueError):
        get_model("gaussian")


def _double_lorentzian_data(rng, noise=0.01):
    x = np.linspace(3.2e9, 3.75e9, 401)
    truth = np.array([36000.0, 3.42e9, 110e6, 0.2, 3.52e9, 110e6, 0.2])
    y0 = multi_lorentzian(2)(x, truth)
    sigma = noise * y0
    return x, y0 + sigma * rng.standard_normal(x.size), sigma, truth


def test_double_lorentzian_round_trip():
    rng = np.random.default_rng(5)
    x, y, sigma, truth = _double_lorentzian_data(rng)
    spec = OdmrSpectrum(x, y, 1.0, truth[0])
    p0 = seed_multi_lorentzian(spec, 2)
    res = lm_fit(multi_lorentzian(2), x, y, sigma, p0)
    assert res.converged
    p = res.params
    assert abs(p[1] - 3.42e9) < 1e6 and abs(p[4] - 3.52e9) < 1e6
    assert p[2] == pytest.approx(110e6, rel=0.05) and p[5] == pytest.approx(110e6, rel=0.05)
    assert res.chi2_reduced == pytest.approx(1.0, abs=0.3)


def test_exact_data_converges_immediately():
    x = np.linspace(0, 50, 60)
    p = np.array([1.5, 12.0, 0.3])
    y = exp_decay()(x, p)
    res = lm_fit(exp_decay(), x, y, np.ones_like(x), p)
    assert res.n_iterations <= 2
    assert res.chi2_reduced == pytest.approx(0.0, abs=1e-20)


def test_saturation_ratios_recovered():
    rng = np.random.default_rng(8)
    x = np.geomspace(0.05, 50.0, 40)
    base = np.array([2.0e5, 4.0])
    other = np.array([3.5 * 2.0e5, 4.0 / 5.0])
    fits = []
    for p in (base, other):
        y0 = saturation()(x, p)
        y = y0 * (1 + 0.03 * rng.standard_normal(x.size))
        res = lm_fit(saturation(), x, y, 0.03 * y0, seed_saturation(x, y))
        fits.append(res.params)
    assert fits[1][0] / fits[0][0] == pytest.approx(3.5, rel=0.10)
    assert fits[0][1] / fits[1][1] == pytest.approx(5.0, rel=0.10)


def _two_param_lorentzian():
    def f(x, p):
        c, w = p
        h2 = 0.25 * w * w
        return 1.0 - 0.3 * h2 / ((x - c) ** 2 + h2)

    def jac(x, p):
        c, w = p
        h2 = 0.25 * w * w
        den = (x - c) ** 2 + h2
        dc = -0.3 * h2 * 2 * (x - c) / den**2
        dw = -0.3 * (0.5 * w * den - h2 * 0.5 * w) / den**2
        return np.column_stack([dc, dw])

    return FitModel("lorentz2", ("center", "fwhm"), (-np.inf, 1e-9), (np.inf, np.inf), f, jac)


def test_lm_matches_brute_force_grid_refinement():
    model = _two_param_lorentzian()
    rng = np.random.default_rng(21)
    x = np.linspace(-5, 5, 201)
    y = model(x, [0.3, 1.7]) + 0.01 * rng.standard_normal(x.size)

    def cost(c, w):
        r = y[None, None, :] - model.func(x[None, None, :], (c[..., None], w[..., None]))
        return np.sum(r * r, axis=-1)

    c_lo, c_hi, w_lo, w_hi = -1.0, 1.5, 0.5, 3.0
    for _ in range(12):
        cg, wg = np.meshgrid(np.linspace(c_lo, c_hi, 41), np.linspace(w_lo, w_hi, 41), indexing="ij")
        k = np.unravel_index(np.argmin(cost(cg, wg)), cg.shape)
        c0, w0 = cg[k], wg[k]
        dc, dw = (c_hi - c_lo) / 10, (w_hi - w_lo) / 10
        c_lo, c_hi, w_lo, w_hi = c0 - dc, c0 + dc, w0 - dw, w0 + dw
    res = lm_fit(model, x, y, np.ones_like(x), [0.0, 1.0])
    assert res.params[0] == pytest.approx(c0, rel=1e-6, abs=1e-9)
    assert res.params[1] == pytest.approx(w0, rel=1e-6)


def test_covariance_matches_scatter():
    rng = np.random.default_rng(99)
    model = multi_lorentzian(1)
    x = np.linspace(3.3e9, 3.6e9, 151)
    truth = np.array([1e4, 3.45e9, 90e6, 0.2])
    y0 = model(x, truth)
    sigma = np.sqrt(y0)
    centers, stderrs = [], []
    for _ in range(200):
        y = y0 + sigma * rng.standard_normal(x.size)
        res = lm_fit(model, x, y, sigma, truth)
        centers.append(res.params[1])
        stderrs.append(res.stderr[1])
    ratio = np.std(centers) / np.mean(stderrs)
    assert 1 / 1.5 <= ratio <= 1.5


@pytest.mark.parametrize("k", [1e-3, 7.0, 1e6])
def test_rescaling_invariance(k):
    rng = np.random.default_rng(4)
    x = np.linspace(0, 60, 80)
    truth = np.array([2.0, 15.0, 0.5])
    y = exp_decay()(x, truth) + 0.02 * rng.standard_normal(x.size)
    sigma = np.full_like(x, 0.02)
    p0 = np.array([1.5, 10.0, 0.4])
    a = lm_fit(exp_decay(), x, y, sigma, p0).params
    b = lm_fit(exp_decay(), x, k * y, k * sigma, p0 * [k, 1, k]).params
    np.testing.assert_allclose(b, a * [k, 1, k], rtol=1e-8)


def test_quadratic_convergence():
    x = np.linspace(0, 60, 80)
    truth = np.array([2.0, 15.0, 0.5])
    y = exp_decay()(x, truth) + 1e-3 * np.sin(x)  # tiny, nonzero residual at the optimum
    res = lm_fit(exp_decay(), x, y, np.ones_like(x), [1.0, 8.0, 0.0])
    excess = np.array(res.cost_history) - res.cost_history[-1]
    excess = excess[excess > 1e-14 * res.cost_history[-1]]
    ratios = excess[1:] / excess[:-1]
    assert ratios[-1] < 1e-2
    assert ratios[-1] < ratios[0]


def test_rabi_fit_round_trip():
    x = np.linspace(0, 600, 301)
    truth = np.array([0.1, 0.05, 120.0, 0.02, 0.0, 0.03, 120.0, 0.034, 0.0])
    y = rabi_two_tone()(x, truth)
    res = lm_fit(rabi_two_tone(), x, y, np.ones_like(x), seed_rabi_two_tone(x, y),
                 absolute_sigma=False)
    assert res.as_dict()["tau_a"] == pytest.approx(120.0, rel=1e-6)
    assert res.as_dict()["tau_b"] == pytest.approx(120.0, rel=1e-6)


def test_echo_decay_uses_twice_the_delay():
    x = np.linspace(0, 3000, 40)
    y = echo_decay()(x, [0.1, 1100.0, 0.0])
    np.testing.assert_allclose(y, 0.1 * np.exp(-2 * x / 1100.0))
    res = lm_fit(echo_decay(), x, y, np.ones_like(x), seed_decay(x, y, 2.0), absolute_sigma=False)
    assert res.params[1] == pytest.approx(1100.0, rel=1e-8)


def test_seed_decay_close():
    x = np.linspace(0, 80, 50)
    y = exp_decay()(x, [-0.12, 17.0, 0.11])
    a, tau, c = seed_decay(x, y)
    assert tau == pytest.approx(17.0, rel=0.2)
    assert a < 0


def test_seed_within_20_mhz_of_truth():
    lines = [LorentzianLine(3.42e9, 110e6, 0.2), LorentzianLine(3.52e9, 110e6, 0.2)]
    spec = synth_spectrum(lines, np.linspace(3.2e9, 3.75e9, 221), 3.6e6, 0.01)
    p0 = seed_multi_lorentzian(spec, 2)
    assert abs(p0[1] - 3.42e9) < 20e6 and abs(p0[4] - 3.52e9) < 20e6


def test_seed_flat_spectrum_raises():
    spec = synth_spectrum([], np.linspace(3.2e9, 3.75e9, 221), 3.6e6, 0.01)
    with pytest.raises(TooFewDips):
        seed_multi_lorentzian(spec, 1)


def test_seeds_straddle_center_at_9p8_mt():
    pair = resonance_frequencies_axial(ZfsSpinParams(), 9.8e-3)
    lines = [LorentzianLine(pair.nu1, 110e6, 0.1), LorentzianLine(pair.nu2, 110e6, 0.1)]
    spec = add_shot_noise(synth_spectrum(lines, np.linspace(3.0e9, 3.95e9, 381), 3.6e6, 0.01), 3)
    p0 = seed_multi_lorentzian(spec, 2)
    assert p0[1] < 3.47e9 < p0[4]


def test_singular_jacobian():
    x = np.linspace(3.3e9, 3.6e9, 100)
    p = np.array([1e4, 3.45e9, 1e8, 0.1, 3.45e9, 1e8, 0.1])
    y = multi_lorentzian(2)(x, p)
    with pytest.raises(SingularJacobian):
        lm_fit(multi_lorentzian(2), x, y, np.ones_like(x), p)


def test_not_converged_keeps_last_iterate():
    x = np.linspace(0, 50, 60)
    y = exp_decay()(x, [1.5, 12.0, 0.3])
    with pytest.raises(NotConverged) as info:
        lm_fit(exp_decay(), x, y, np.ones_like(x), [0.1, 1.0, 0.0], max_iter=1)
    assert info.value.result.n_iterations == 1


def test_dimension_mismatch():
    x = np.linspace(0, 1, 10)
    with pytest.raises(DimensionMismatch):
        lm_fit(exp_decay(), x, x[:-1], 1.0, [1, 1, 0])
    with pytest.raises(DimensionMismatch):
        lm_fit(exp_decay(), x, x, 1.0, [1, 1])


def test_bounds_respected():
    x = np.linspace(0.1, 10, 40)
    y = saturation()(x, [1.0, 2.0])
    res = lm_fit(saturation(), x, y, np.ones_like(x), [1.0, 1.0])
    assert saturation().within_bounds(res.params)
    with pytest.raises(ValueError):
        lm_fit(saturation(), x, y, np.ones_like(x), [1.0, -1.0])
