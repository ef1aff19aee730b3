"""Automatic starting values for the fit models."""

import numpy as np
from scipy.signal import find_peaks

from ..errors import TooFewDips

SMOOTH_WINDOW = 5


def _moving_average(y, window):
    kernel = np.ones(window) / window
    pad = window // 2
    padded = np.pad(y, pad, mode="edge")
    return np.convolve(padded, kernel, mode="valid")


def _half_width(freqs, smooth, idx, level, step):
    """Distance from ``idx`` to the first half-depth crossing walking in ``step`` direction."""
    i = idx
    n = len(smooth)
    while 0 <= i + step < n:
        j = i + step
        if smooth[j] >= level:
            # linear interpolation between i and j
            frac = (level - smooth[i]) / (smooth[j] - smooth[i])
            return abs(freqs[i] + frac * (freqs[j] - freqs[i]) - freqs[idx])
        if smooth[j] < smooth[idx]:
            return None  # ran into a deeper dip before crossing
        i = j
    return None


def seed_multi_lorentzian(spec, n_peaks):
    """Initial [baseline, (center, fwhm, contrast) * n] for ``multi_lorentzian(n_peaks)``.

    Dips are the ``n_peaks`` deepest local minima of the 5-bin moving average
    whose prominence exceeds the smoothed shot-noise level; centers are returned
    in ascending order.
    """
    freqs = np.asarray(spec.freqs, dtype=float)
    counts = np.asarray(spec.counts, dtype=float)
    if n_peaks < 1:
        raise ValueError("n_peaks must be >= 1")
    if len(freqs) < 10 * n_peaks:
        raise ValueError(f"need at least {10 * n_peaks} points for {n_peaks} dips")

    smooth = _moving_average(counts, SMOOTH_WINDOW)
    baseline = float(np.percentile(smooth, 95))
    if baseline <= 0:
        raise TooFewDips("spectrum has no signal")
    # noise of the smoothed trace from first differences of the raw counts
    noise = 1.4826 * np.median(np.abs(np.diff(counts))) / np.sqrt(2 * SMOOTH_WINDOW)
    floor = max(3.0 * noise, 1e-6 * baseline)
    idx, props = find_peaks(-smooth, prominence=floor)
    if len(idx) < n_peaks:
        raise TooFewDips(f"found {len(idx)} dips, need {n_peaks}")
    idx = idx[np.argsort(smooth[idx], kind="stable")[:n_peaks]]
    idx = np.sort(idx)

    step = freqs[1] - freqs[0]
    params = [baseline]
    for k in idx:
        depth = max((baseline - smooth[k]) / baseline, 1e-3)
        level = baseline - 0.5 * (baseline - smooth[k])
        left = _half_width(freqs, smooth, k, level, -1)
        right = _half_width(freqs, smooth, k, level, +1)
        if left is not None and right is not None:
            fwhm = left + right
        elif left is not None or right is not None:
            fwhm = 2.0 * (left if left is not None else right)
        else:
            fwhm = 10.0 * step
        fwhm = max(fwhm, 2.0 * step)
        params += [float(freqs[k]), float(fwhm), float(min(depth, 0.95))]
    return np.array(params)


def seed_decay(x, y, rate_mult=1.0):
    """Initial (amplitude, tau, offset) for a * exp(-rate_mult x / tau) + c.

    The offset is the mean of the last 10% of points; tau is the time at
    which the excess over the offset falls to 1/e of its first value.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    tail = max(1, len(y) // 10)
    c = float(np.mean(y[-tail:]))
    a = float(y[0] - c)
    if a == 0.0:
        return np.array([1e-12, x[-1] - x[0], c])
    excess = (y - c) / a
    below = np.nonzero(excess <= np.exp(-1.0))[0]
    t_e = x[below[0]] - x[0] if below.size else x[-1] - x[0]
    tau = rate_mult * max(t_e, (x[-1] - x[0]) / len(x))
    return np.array([a, tau, c])


def seed_saturation(x, y):
    """Initial (i_sat, p_sat) from a linearized fit x/y = p_sat/i_sat + x/i_sat."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0)
    slope, icept = np.polyfit(x[ok], x[ok] / y[ok], 1)
    i_sat = 1.0 / slope if slope > 0 else float(y.max()) * 2.0
    p_sat = icept * i_sat if icept > 0 else float(np.median(x[ok]))
    return np.array([i_sat, p_sat])


def seed_rabi_two_tone(x, y):
    """Initial two-tone Rabi parameters from the two strongest periodogram peaks."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = np.median(np.diff(x))
    n = 8 * len(x)
    spec = np.abs(np.fft.rfft(y - y.mean(), n))
    freqs = np.fft.rfftfreq(n, dx)
    peaks, _ = find_peaks(spec)
    if peaks.size == 0:
        peaks = np.array([max(1, int(np.argmax(spec[1:])) + 1)])
    order = peaks[np.argsort(spec[peaks])[::-1]]
    f1 = freqs[order[0]]
    f2 = freqs[order[1]] if order.size > 1 else 1.7 * f1
    f1, f2 = sorted((f1, f2))
    span = x[-1] - x[0]
    amp = 0.5 * (y.max() - y.min())
    tail = max(1, len(y) // 10)
    return np.array([float(np.mean(y[-tail:])), amp, span / 3, f1, 0.0, 0.5 * amp, span / 3, f2, 0.0])
