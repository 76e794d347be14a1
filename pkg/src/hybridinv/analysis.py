"""Post-processing of simulated arcs."""

from __future__ import annotations

import numpy as np

from .systems import HybridArc


def uniform_resample(t, y, rate: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Resample a signal given at non-decreasing times onto a uniform grid.

    Repeated times (jumps) keep the last value, which is harmless for signals
    that are continuous across jumps.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.ndim != 1 or t.shape != y.shape:
        raise ValueError("t and y must be 1-D arrays of equal length")
    # keep the last sample at each repeated time
    keep = np.append(np.diff(t) > 0, True)
    t, y = t[keep], y[keep]
    if t.size < 2:
        raise ValueError("need at least two distinct times")
    if rate is None:
        rate = 1.0 / np.median(np.diff(t))
    n = int(np.floor((t[-1] - t[0]) * rate)) + 1
    grid = t[0] + np.arange(n) / rate
    return grid, np.interp(grid, t, y)


def dominant_frequency(t, y, rate: float | None = None, pad: int = 8,
                       min_freq: float = 0.0) -> float:
    """Frequency of the largest spectral peak, in cycles per unit of ``t``.

    Hann window, ``pad``-fold zero padding and parabolic interpolation of the
    log-magnitude around the peak bin.
    """
    grid, u = uniform_resample(t, y, rate)
    fs = 1.0 / (grid[1] - grid[0])
    u = (u - u.mean()) * np.hanning(u.size)
    nfft = int(2 ** np.ceil(np.log2(u.size * max(1, pad))))
    mag = np.abs(np.fft.rfft(u, nfft))
    freqs = np.fft.rfftfreq(nfft, 1.0 / fs)
    mag[freqs < max(min_freq, freqs[1] if freqs.size > 1 else 0.0)] = 0.0
    k = int(np.argmax(mag))
    if 0 < k < mag.size - 1 and mag[k - 1] > 0 and mag[k + 1] > 0:
        a, b, c = np.log(mag[k - 1]), np.log(mag[k]), np.log(mag[k + 1])
        denom = a - 2 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
        return float((k + shift) * fs / nfft)
    return float(freqs[k])


def arc_signal(arc: HybridArc, component: int) -> tuple[np.ndarray, np.ndarray]:
    """Ordinary time and one state component over all flow samples."""
    t = np.concatenate([np.asarray(ti, dtype=float) for ti in arc.times])
    x = np.concatenate([np.asarray(si, dtype=float)[:, component] for si in arc.states])
    return t, x
