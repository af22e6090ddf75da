"""Exponential decay fits on (t, log value)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = ["DecayFit", "fit_decay", "default_window"]


@dataclass(frozen=True)
class DecayFit:
    window: tuple
    rate: float
    prefactor: float
    r_squared: float
    samples: int


def default_window(times, values, floor=0.0):
    """Second half of the samples, cut where values drop below 10 * floor."""
    t = np.asarray(times, float)
    v = np.asarray(values, float)
    lo = t[0] + 0.5 * (t[-1] - t[0])
    ok = v > 10.0 * floor
    hi = t[-1]
    if floor > 0 and not np.all(ok[t >= lo]):
        bad = np.nonzero((t >= lo) & ~ok)[0]
        hi = t[bad[0] - 1] if bad[0] > 0 else lo
    return float(lo), float(hi)


def fit_decay(times, values, window=None, min_samples=8):
    """Least squares of log(value) against t on the window; rate = -slope."""
    t = np.asarray(times, float)
    v = np.asarray(values, float)
    if t.shape != v.shape or t.ndim != 1:
        raise ConfigError("times and values must be 1-d arrays of equal length")
    if window is None:
        window = default_window(t, v)
    lo, hi = float(window[0]), float(window[1])
    if lo > hi:
        raise ConfigError("fit window must satisfy t_lo <= t_hi")
    tol = 1e-9 * max(1.0, abs(hi))
    sel = (t >= lo - tol) & (t <= hi + tol)
    if sel.sum() < min_samples:
        raise ConfigError(f"fit window [{lo:g}, {hi:g}] holds {int(sel.sum())} samples, need {min_samples}")
    ts, vs = t[sel], v[sel]
    if np.any(~(vs > 0)):
        raise ConfigError("nonpositive values in the fit window (quadrature floor reached?)")
    y = np.log(vs)
    slope, icpt = np.polyfit(ts, y, 1)
    pred = slope * ts + icpt
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit((lo, hi), float(-slope), float(np.exp(icpt)), float(min(max(r2, 0.0), 1.0)), int(sel.sum()))
