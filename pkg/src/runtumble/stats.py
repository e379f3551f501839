"""Ensemble statistics: MSD curves, survival curves, windowed fits,
rescaled-displacement densities.

Fits are plain OLS on transformed coordinates inside a caller-chosen
window; they never extrapolate and refuse windows with fewer than three
points or nonpositive values where a log is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MsdCurve",
    "SurvivalCurve",
    "FitResult",
    "RescaledPdf",
    "msd",
    "survival_curve",
    "fit_loglog",
    "fit_semilog",
    "rescaled_displacement_pdf",
]


@dataclass
class MsdCurve:
    times: np.ndarray
    values: np.ndarray
    n_particles: int


@dataclass
class SurvivalCurve:
    """P(sample > t) on a grid of thresholds; non-increasing in [0, 1]."""

    thresholds: np.ndarray
    probabilities: np.ndarray
    n_samples: int

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if ((p < 0.0) | (p > 1.0)).any():
            raise ValueError("probabilities must lie in [0, 1]")
        if (np.diff(p) > 1e-12).any():
            raise ValueError("survival probabilities must be non-increasing")
        self.probabilities = p


@dataclass
class FitResult:
    """OLS fit y = slope * u + intercept over a window, u the fit abscissa."""

    slope: float
    intercept: float
    window: tuple
    residual_rms: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 3:
            raise ValueError("a fit needs at least 3 points")


@dataclass
class RescaledPdf:
    """Histogram density of (x(t+dt) - x(t)) / dt**beta."""

    dt: float
    beta: float
    bin_edges: np.ndarray
    density: np.ndarray


def _curve_xy(curve, values):
    if values is not None:
        return np.asarray(curve, dtype=float), np.asarray(values, dtype=float)
    if isinstance(curve, MsdCurve):
        return np.asarray(curve.times, float), np.asarray(curve.values, float)
    if isinstance(curve, SurvivalCurve):
        return np.asarray(curve.thresholds, float), np.asarray(curve.probabilities, float)
    raise TypeError("expected (times, values) arrays or an MsdCurve/SurvivalCurve")


def msd(record):
    """Mean squared displacement from each particle's initial position."""
    disp = record.snapshots - record.initial_positions[None, :, :]
    values = np.mean(np.sum(disp * disp, axis=2), axis=1)
    return MsdCurve(
        times=np.asarray(record.observation_times, float),
        values=values,
        n_particles=record.snapshots.shape[1],
    )


def survival_curve(samples, grid=None, per_decade=32, kaplan_meier=False):
    """Empirical survival P(sample > t) on a grid.

    samples may be a DurationSamples or a plain array.  The default grid
    is log-spaced between the smallest and largest sample.  With
    kaplan_meier=True, censored intervals (open at the horizon) enter the
    product-limit estimator instead of being dropped.
    """
    censored = None
    if hasattr(samples, "samples"):
        censored = getattr(samples, "censored_samples", None)
        samples = samples.samples
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise ValueError("no samples")
    if grid is None:
        lo, hi = x[0], x[-1]
        if lo <= 0:
            raise ValueError("samples must be positive for the default grid")
        n_pts = max(2, int(round(math.log10(hi / lo) * per_decade)) + 1)
        grid = np.logspace(math.log10(lo), math.log10(hi), n_pts)
    grid = np.asarray(grid, dtype=float)
    if not kaplan_meier:
        n = x.size
        p = (n - np.searchsorted(x, grid, side="right")) / n
        return SurvivalCurve(grid, p, n)
    if censored is None:
        censored = np.empty(0)
    c = np.sort(np.asarray(censored, dtype=float))
    # product-limit estimator over event times; censored times only shrink
    # the at-risk set
    times, counts = np.unique(x, return_counts=True)
    n_tot = x.size + c.size
    at_risk = n_tot - np.searchsorted(x, times, side="left") - np.searchsorted(
        c, times, side="left"
    )
    factors = 1.0 - counts / at_risk
    surv = np.cumprod(factors)
    idx = np.searchsorted(times, grid, side="right") - 1
    p = np.where(idx >= 0, surv[np.clip(idx, 0, None)], 1.0)
    p = np.clip(p, 0.0, 1.0)
    return SurvivalCurve(grid, p, n_tot)


def _window_fit(x, y, window, n_min=3):
    lo, hi = float(window[0]), float(window[1])
    if not (lo < hi):
        raise ValueError("window must satisfy lo < hi")
    mask = (x >= lo) & (x <= hi)
    xs, ys = x[mask], y[mask]
    if xs.size < n_min:
        raise ValueError(
            f"window [{lo:g}, {hi:g}] contains {xs.size} points; need >= {n_min}"
        )
    return xs, ys, (lo, hi)


def fit_loglog(curve, values=None, window=None):
    """OLS of log10(value) against log10(time) inside the window.

    The slope is the local power-law exponent.  Nonpositive times or
    values inside the window are an error, not silently dropped.
    """
    x, y = _curve_xy(curve, values)
    if window is None:
        raise ValueError("window is required")
    xs, ys, win = _window_fit(x, y, window)
    if (xs <= 0).any():
        raise ValueError("log-log fit needs positive times in the window")
    if (ys <= 0).any():
        raise ValueError("log-log fit window contains nonpositive values")
    return _ols(np.log10(xs), np.log10(ys), win)


def fit_semilog(curve, values=None, window=None):
    """OLS of log10(value) against time inside the window (exponential tail)."""
    x, y = _curve_xy(curve, values)
    if window is None:
        raise ValueError("window is required")
    xs, ys, win = _window_fit(x, y, window)
    if (ys <= 0).any():
        raise ValueError("semi-log fit window contains nonpositive values")
    return _ols(xs, np.log10(ys), win)


def _ols(u, w, window):
    n = u.size
    um, wm = u.mean(), w.mean()
    du = u - um
    denom = float(du @ du)
    if denom == 0.0:
        raise ValueError("degenerate fit window (zero abscissa variance)")
    slope = float(du @ (w - wm)) / denom
    intercept = wm - slope * um
    resid = w - (slope * u + intercept)
    return FitResult(
        slope=slope,
        intercept=float(intercept),
        window=tuple(window),
        residual_rms=float(np.sqrt(np.mean(resid * resid))),
        n_points=int(n),
    )


def _snapshot_index(record, t):
    times = np.asarray(record.observation_times, dtype=float)
    idx = np.nonzero(np.isclose(times, t, rtol=1e-9, atol=0.0))[0]
    if idx.size != 1:
        raise ValueError(
            f"time {t!r} is not an observation time; have "
            f"[{times[0]:g} .. {times[-1]:g}] ({times.size} points)"
        )
    return int(idx[0])


def rescaled_displacement_pdf(record, t_anchor, dt_list, beta, bins=None):
    """Densities of (x(t_anchor+dt) - x(t_anchor)) / dt**beta per dt.

    Uses the first coordinate when the record is multi-dimensional.  The
    number of bins defaults to the Rice rule ceil(2 n^(1/3)).  Each
    returned density integrates to 1 (asserted to 1e-9).
    """
    if not (0.0 < beta <= 1.0):
        raise ValueError("beta must be in (0, 1]")
    i0 = _snapshot_index(record, t_anchor)
    x0 = record.snapshots[i0, :, 0]
    out = []
    for dt in dt_list:
        i1 = _snapshot_index(record, t_anchor + dt)
        z = (record.snapshots[i1, :, 0] - x0) / float(dt) ** beta
        n = z.size
        nb = int(bins) if bins else int(math.ceil(2.0 * n ** (1.0 / 3.0)))
        density, edges = np.histogram(z, bins=nb, density=True)
        total = float(np.sum(density * np.diff(edges)))
        if not math.isclose(total, 1.0, rel_tol=0.0, abs_tol=1e-9):
            raise AssertionError(f"density normalisation broke: {total!r}")
        out.append(RescaledPdf(dt=float(dt), beta=float(beta), bin_edges=edges, density=density))
    return out
