"""Model functions with analytic Jacobians.

Every model is unit-agnostic; callers pick consistent units (Hz for ODMR,
ns or us for time traces, mW for laser power).
"""

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

INF = np.inf
TINY = 1e-300


@dataclass(frozen=True)
class FitModel:
    model_id: str
    param_names: tuple
    lower: tuple
    upper: tuple
    func: Callable
    jac: Callable

    def __post_init__(self):
        if not len(self.param_names) == len(self.lower) == len(self.upper):
            raise ValueError("param_names and bounds must have equal length")
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n_params(self):
        return len(self.param_names)

    def __call__(self, x, p):
        return self.func(np.asarray(x, dtype=float), np.asarray(p, dtype=float))

    def jacobian(self, x, p):
        return self.jac(np.asarray(x, dtype=float), np.asarray(p, dtype=float))

    def clip(self, p):
        return np.clip(p, self.lower, self.upper)

    def within_bounds(self, p):
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lower) and np.all(p <= self.upper))


# --- multi-Lorentzian ODMR: baseline * (1 - sum C_i L_i) ---

def _ml_func(x, p):
    b = p[0]
    dip = np.zeros_like(x)
    for c, w, k in p[1:].reshape(-1, 3):
        h2 = 0.25 * w * w
        dip += k * h2 / ((x - c) ** 2 + h2)
    return b * (1.0 - dip)


def _ml_jac(x, p):
    b = p[0]
    J = np.empty((x.size, p.size))
    dip = np.zeros_like(x)
    for i, (c, w, k) in enumerate(p[1:].reshape(-1, 3)):
        h = 0.5 * w
        d = x - c
        den = d * d + h * h
        lor = h * h / den
        dip += k * lor
        col = 1 + 3 * i
        J[:, col] = -b * k * 2.0 * d * h * h / den**2
        J[:, col + 1] = -b * k * h * d * d / den**2
        J[:, col + 2] = -b * lor
    J[:, 0] = 1.0 - dip
    return J


def multi_lorentzian(n):
    if n < 1:
        raise ValueError("multi_lorentzian needs n >= 1")
    names = ["baseline"]
    lower = [0.0]
    upper = [INF]
    for i in range(1, n + 1):
        names += [f"center{i}", f"fwhm{i}", f"contrast{i}"]
        lower += [-INF, TINY, 0.0]
        upper += [INF, INF, 0.999]
    return FitModel(f"multi_lorentzian({n})", tuple(names), tuple(lower), tuple(upper),
                    _ml_func, _ml_jac)


# --- PL saturation: I_sat / (1 + P_sat / P) ---

def _sat_func(x, p):
    i_sat, p_sat = p
    return i_sat * x / (x + p_sat)


def _sat_jac(x, p):
    i_sat, p_sat = p
    den = x + p_sat
    return np.column_stack([x / den, -i_sat * x / den**2])


def saturation():
    return FitModel("saturation", ("i_sat", "p_sat"), (0.0, TINY), (INF, INF),
                    _sat_func, _sat_jac)


# --- relaxation decays ---

def _decay_func(rate_mult):
    def func(x, p):
        a, t, c = p
        return a * np.exp(-rate_mult * x / t) + c
    return func


def _decay_jac(rate_mult):
    def jac(x, p):
        a, t, c = p
        e = np.exp(-rate_mult * x / t)
        return np.column_stack([e, a * e * rate_mult * x / t**2, np.ones_like(x)])
    return jac


def exp_decay():
    """a exp(-t/T) + c (T1 recovery)."""
    return FitModel("exp_decay", ("amplitude", "tau", "offset"), (-INF, TINY, -INF),
                    (INF, INF, INF), _decay_func(1.0), _decay_jac(1.0))


def echo_decay():
    """a exp(-2 tau/T2) + c with ``x`` the half echo delay tau."""
    return FitModel("echo_decay", ("amplitude", "t2", "offset"), (-INF, TINY, -INF),
                    (INF, INF, INF), _decay_func(2.0), _decay_jac(2.0))


# --- damped two-tone Rabi oscillation ---

def _rabi_func(x, p):
    a, b1, ta, f1, ph1, b2, tb, f2, ph2 = p
    return (a + b1 * np.exp(-x / ta) * np.cos(2 * np.pi * f1 * x + ph1)
            + b2 * np.exp(-x / tb) * np.cos(2 * np.pi * f2 * x + ph2))


def _rabi_jac(x, p):
    a, b1, ta, f1, ph1, b2, tb, f2, ph2 = p
    J = np.empty((x.size, 9))
    J[:, 0] = 1.0
    for off, (b, t, f, ph) in ((1, (b1, ta, f1, ph1)), (5, (b2, tb, f2, ph2))):
        e = np.exp(-x / t)
        arg = 2 * np.pi * f * x + ph
        c = np.cos(arg)
        s = np.sin(arg)
        J[:, off] = e * c
        J[:, off + 1] = b * e * c * x / t**2
        J[:, off + 2] = -b * e * s * 2 * np.pi * x
        J[:, off + 3] = -b * e * s
    return J


def rabi_two_tone():
    names = ("offset", "amp1", "tau_a", "freq1", "phase1", "amp2", "tau_b", "freq2", "phase2")
    lower = (-INF, -INF, TINY, 0.0, -INF, -INF, TINY, 0.0, -INF)
    upper = (INF,) * 9
    return FitModel("rabi_two_tone", names, lower, upper, _rabi_func, _rabi_jac)


_FACTORIES = {
    "saturation": saturation,
    "exp_decay": exp_decay,
    "echo_decay": echo_decay,
    "rabi_two_tone": rabi_two_tone,
}


def get_model(model_id):
    """Model from its identifier, e.g. ``"saturation"`` or ``"multi_lorentzian(2)"``."""
    m = re.fullmatch(r"\s*multi_lorentzian\s*\(\s*(\d+)\s*\)\s*", model_id)
    if m:
        return multi_lorentzian(int(m.group(1)))
    try:
        return _FACTORIES[model_id.strip()]()
    except KeyError:
        raise ValueError(f"unknown model {model_id!r}") from None
