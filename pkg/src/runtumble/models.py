#!/usr/bin/env python3
"""Renewal-interval simulators for rotation-state switching.

Two models produce duration samples:

  * the two-state model: an internal variable Y relaxes toward Y_bar under
    OU drift while the rotation state flips CCW <-> CW with exponential
    rates exp(alpha_i (Y - Y_bar)/Y_bar) / t_i evaluated at the pre-step
    value of Y;
  * the one-state model: a single variable m with sign-step (or OU) drift
    and an integrated-rate clock with indicator rate 1{m >= 0}; firing
    resets m to 0 and restarts the clock.

Completed intervals are collected per particle; the interval open at the
horizon is counted as censored.  In the two-state model the interval in
progress at t = 0 is excluded from the samples (its start is not observed)
and counted separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

try:
    import numba as nb

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    nb = None
    HAVE_NUMBA = False

from . import sde
from .rngutil import exp_thresholds, particle_stream

__all__ = [
    "CCW",
    "CW",
    "STOPPING_TIME",
    "RUN_TIME",
    "FLIP_RATE_EXP",
    "FLIP_EXACT",
    "TwoStateParams",
    "OneStateParams",
    "DurationSamples",
    "StateHistogram",
    "TwoStateResult",
    "rate_ccw_to_cw",
    "rate_cw_to_ccw",
    "simulate_two_state",
    "simulate_one_state",
]

CCW = "ccw"
CW = "cw"
STOPPING_TIME = "stopping-time"
RUN_TIME = "run-time"

# flip acceptance rules: probability that a flip happens during a step of
# length dtau at switching rate L
FLIP_RATE_EXP = "rate-exp"  # p = L*dtau*exp(L*dtau), the reproduction rule
FLIP_EXACT = "exact"  # p = 1 - exp(-L*dtau)

_DURATION_KINDS = (CCW, CW, STOPPING_TIME, RUN_TIME)
_HIST_BINS = 120


def _steps_for(horizon, dtau):
    n = int(round(horizon / dtau))
    if n < 1 or abs(n * dtau - horizon) > 1e-9 * max(1.0, abs(horizon)):
        raise ValueError(
            f"horizon {horizon!r} must be a positive integer multiple of dtau {dtau!r}"
        )
    return n


@dataclass(frozen=True)
class TwoStateParams:
    """Parameters of the two-state switching model."""

    alpha1: float = 10.0
    alpha2: float = -2.0
    t0: float = 300.0
    t1: float = 30.0
    y_bar: float = 5.0
    t_m: float = 6000.0
    sigma: float = 0.456
    dtau: float = 0.1
    horizon: float = 1e5

    def __post_init__(self):
        for name in ("alpha1", "alpha2"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        for name in ("t0", "t1", "dtau"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0.0:
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")
        if not math.isfinite(self.y_bar) or self.y_bar == 0.0:
            raise ValueError("y_bar must be finite and nonzero")
        if not self.t_m > 0.0:
            raise ValueError("t_m must be > 0 (inf allowed)")
        if not math.isfinite(self.sigma) or self.sigma < 0.0:
            raise ValueError("sigma must be finite and >= 0")
        _steps_for(self.horizon, self.dtau)

    @property
    def n_steps(self):
        return _steps_for(self.horizon, self.dtau)

    @property
    def inverse_t_m(self):
        return 0.0 if math.isinf(self.t_m) else 1.0 / self.t_m


@dataclass(frozen=True)
class OneStateParams:
    """Parameters of the one-state stopping-time model."""

    drift: sde.DriftSpec = field(
        default_factory=lambda: sde.DriftSpec(sde.SIGN_STEP, 1.0 / 6000.0)
    )
    sigma: float = 0.456
    dtau: float = 0.1
    horizon: float = 1e5

    def __post_init__(self):
        if not math.isfinite(self.sigma) or self.sigma < 0.0:
            raise ValueError("sigma must be finite and >= 0")
        _steps_for(self.horizon, self.dtau)

    @property
    def n_steps(self):
        return _steps_for(self.horizon, self.dtau)


@dataclass
class DurationSamples:
    """Completed interval durations of one kind, with censoring info.

    samples holds completed durations only; censored_samples (optional)
    holds the lengths of intervals still open at the horizon, one per
    censored interval; particle_ids (optional) maps each completed sample
    to the particle that produced it.
    """

    kind: str
    samples: np.ndarray
    horizon: float
    n_particles: int
    censored_count: int
    particle_ids: np.ndarray | None = None
    censored_samples: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in _DURATION_KINDS:
            raise ValueError(f"unknown duration kind {self.kind!r}")
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if s.size and not (s > 0.0).all():
            raise ValueError("samples must all be > 0")
        if s.size and s.max() > self.horizon * (1.0 + 1e-12):
            raise ValueError("samples must not exceed the horizon")
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if self.censored_count < 0:
            raise ValueError("censored_count must be >= 0")
        self.samples = s
        if self.particle_ids is not None:
            ids = np.asarray(self.particle_ids, dtype=np.int64)
            if ids.shape != s.shape:
                raise ValueError("particle_ids must match samples in length")
            self.particle_ids = ids
        if self.censored_samples is not None:
            c = np.asarray(self.censored_samples, dtype=float)
            if c.size != self.censored_count:
                raise ValueError("censored_samples must match censored_count")
            self.censored_samples = c


@dataclass
class StateHistogram:
    """Occupancy histogram of Y - Y_bar, split by rotation state."""

    bin_edges: np.ndarray
    ccw_counts: np.ndarray
    cw_counts: np.ndarray
    ccw_outside: int
    cw_outside: int


@dataclass
class TwoStateResult:
    ccw: DurationSamples
    cw: DurationSamples
    histogram: StateHistogram
    flip_mode: str
    clamp_count: int
    first_intervals_excluded: int
    first_interval_samples: np.ndarray
    seed: int
    params: TwoStateParams


def rate_ccw_to_cw(params, y):
    """CCW -> CW switching rate at internal value y."""
    spec = sde.RateSpec(
        sde.EXP_CCW_TO_CW, t0=params.t0, alpha1=params.alpha1, y_bar=params.y_bar
    )
    return sde.rate_eval(spec, y)


def rate_cw_to_ccw(params, y):
    """CW -> CCW switching rate at internal value y."""
    spec = sde.RateSpec(
        sde.EXP_CW_TO_CCW, t1=params.t1, alpha2=params.alpha2, y_bar=params.y_bar
    )
    return sde.rate_eval(spec, y)


def _jit(fn):
    if HAVE_NUMBA:
        return nb.njit(nogil=True, cache=True)(fn)
    return fn


@_jit
def _two_state_kernel(
    y_bar,
    inv_tm,
    sigma_sqdt,
    dtau,
    alpha1,
    alpha2,
    inv_t0,
    inv_t1,
    exact_mode,
    n_steps,
    state0,
    normals,
    uniforms,
    hist_lo,
    hist_inv_w,
    n_bins,
    ccw_hist,
    cw_hist,
    ccw_buf,
    cw_buf,
):
    # state 0 = CCW, 1 = CW; returns interval bookkeeping in step counts
    y = y_bar
    state = state0
    start = 0
    first_steps = 0
    first_closed = False
    n_ccw = 0
    n_cw = 0
    clamp_count = 0
    outside_ccw = 0
    outside_cw = 0
    for k in range(n_steps):
        dy = y - y_bar
        b = int(math.floor((dy - hist_lo) * hist_inv_w))
        if 0 <= b < n_bins:
            if state == 0:
                ccw_hist[b] += 1
            else:
                cw_hist[b] += 1
        else:
            if state == 0:
                outside_ccw += 1
            else:
                outside_cw += 1
        # switching rate from the pre-step value of Y
        if state == 0:
            expo = alpha1 * dy / y_bar
            inv_t = inv_t0
        else:
            expo = alpha2 * dy / y_bar
            inv_t = inv_t1
        if expo > 700.0:
            expo = 700.0
            clamp_count += 1
        rate = math.exp(expo) * inv_t
        # OU relaxation toward y_bar
        y = y - inv_tm * dy * dtau + sigma_sqdt * normals[k]
        x = rate * dtau
        if exact_mode:
            p = -math.expm1(-x)
        else:
            # x*exp(x) exceeds 1 for x >= 0.57; avoid exp overflow
            p = 1.1 if x >= 0.6 else x * math.exp(x)
        if uniforms[k + 1] <= p:
            length = k + 1 - start
            if not first_closed:
                first_steps = length
                first_closed = True
            else:
                if state == 0:
                    ccw_buf[n_ccw] = length
                    n_ccw += 1
                else:
                    cw_buf[n_cw] = length
                    n_cw += 1
            start = k + 1
            state = 1 - state
    censored_steps = n_steps - start
    return (
        n_ccw,
        n_cw,
        first_steps,
        censored_steps,
        state,
        clamp_count,
        outside_ccw,
        outside_cw,
    )


@_jit
def _one_state_kernel(
    m0,
    sign_drift,
    inv_tm,
    sigma_sqdt,
    dtau,
    rate_is_one,
    n_steps,
    normals,
    thresholds,
    out_steps,
):
    m = m0
    acc = 0.0
    fired_n = 0
    gamma = thresholds[0]
    start = 0
    for k in range(n_steps):
        # clock rate from the pre-step state
        if rate_is_one:
            rate = 1.0
        else:
            rate = 1.0 if m >= 0.0 else 0.0
        acc += rate * dtau
        if sign_drift:
            g = 1.0 if m >= 0.0 else -1.0
        else:
            g = m
        m = m - inv_tm * g * dtau + sigma_sqdt * normals[k]
        if acc >= gamma:
            out_steps[fired_n] = k + 1 - start
            fired_n += 1
            start = k + 1
            acc = 0.0
            m = 0.0
            gamma = thresholds[fired_n]
    return fired_n, n_steps - start


def simulate_two_state(params, n_particles, seed, flip_mode=FLIP_RATE_EXP):
    """Simulate n_particles two-state trajectories; collect CCW/CW durations.

    Each particle starts at Y = Y_bar in a uniformly random rotation state.
    Returns a TwoStateResult with per-kind DurationSamples, the occupancy
    histogram of Y - Y_bar by state, and bookkeeping counts.
    """
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    if flip_mode not in (FLIP_RATE_EXP, FLIP_EXACT):
        raise ValueError(f"unknown flip mode {flip_mode!r}")
    n_steps = params.n_steps
    sqdt = math.sqrt(params.dtau)

    # fixed histogram range: +-6 stationary standard deviations of the OU
    # process (or a horizon-based scale when t_m is infinite)
    if params.sigma == 0.0:
        half = 1.0
    elif math.isinf(params.t_m):
        half = 6.0 * params.sigma * math.sqrt(params.horizon)
    else:
        half = 6.0 * params.sigma * math.sqrt(params.t_m / 2.0)
    edges = np.linspace(-half, half, _HIST_BINS + 1)
    hist_inv_w = _HIST_BINS / (2.0 * half)
    ccw_hist = np.zeros(_HIST_BINS, dtype=np.int64)
    cw_hist = np.zeros(_HIST_BINS, dtype=np.int64)

    ccw_parts, cw_parts = [], []
    ccw_ids, cw_ids = [], []
    ccw_cens, cw_cens = [], []
    first_lengths = []
    clamp_count = 0
    first_excluded = 0
    outside_ccw = 0
    outside_cw = 0
    ccw_buf = np.empty(n_steps + 1, dtype=np.int64)
    cw_buf = np.empty(n_steps + 1, dtype=np.int64)
    for i in range(n_particles):
        rng = particle_stream(seed, i)
        normals = rng.standard_normal(n_steps)
        uniforms = rng.random(n_steps + 1)
        state0 = 0 if uniforms[0] < 0.5 else 1
        (
            n_ccw,
            n_cw,
            first_steps,
            cens_steps,
            cens_state,
            clamps,
            out_ccw,
            out_cw,
        ) = _two_state_kernel(
            params.y_bar,
            params.inverse_t_m,
            params.sigma * sqdt,
            params.dtau,
            params.alpha1,
            params.alpha2,
            1.0 / params.t0,
            1.0 / params.t1,
            flip_mode == FLIP_EXACT,
            n_steps,
            state0,
            normals,
            uniforms,
            -half,
            hist_inv_w,
            _HIST_BINS,
            ccw_hist,
            cw_hist,
            ccw_buf,
            cw_buf,
        )
        total = first_steps + int(ccw_buf[:n_ccw].sum()) + int(cw_buf[:n_cw].sum()) + cens_steps
        if total != n_steps:
            raise RuntimeError(
                f"timeline not conserved for particle {i}: {total} != {n_steps} steps"
            )
        clamp_count += clamps
        outside_ccw += out_ccw
        outside_cw += out_cw
        if first_steps > 0:
            first_excluded += 1
            first_lengths.append(first_steps * params.dtau)
        if n_ccw:
            ccw_parts.append(ccw_buf[:n_ccw] * params.dtau)
            ccw_ids.append(np.full(n_ccw, i, dtype=np.int64))
        if n_cw:
            cw_parts.append(cw_buf[:n_cw] * params.dtau)
            cw_ids.append(np.full(n_cw, i, dtype=np.int64))
        if cens_steps > 0:
            (ccw_cens if cens_state == 0 else cw_cens).append(cens_steps * params.dtau)

    def _gather(parts, ids, cens, kind):
        samples = np.concatenate(parts) if parts else np.empty(0)
        pid = np.concatenate(ids) if ids else np.empty(0, dtype=np.int64)
        return DurationSamples(
            kind=kind,
            samples=samples,
            horizon=params.horizon,
            n_particles=n_particles,
            censored_count=len(cens),
            particle_ids=pid,
            censored_samples=np.asarray(cens, dtype=float),
        )

    hist = StateHistogram(edges, ccw_hist, cw_hist, outside_ccw, outside_cw)
    return TwoStateResult(
        ccw=_gather(ccw_parts, ccw_ids, ccw_cens, CCW),
        cw=_gather(cw_parts, cw_ids, cw_cens, CW),
        histogram=hist,
        flip_mode=flip_mode,
        clamp_count=clamp_count,
        first_intervals_excluded=first_excluded,
        first_interval_samples=np.asarray(first_lengths, dtype=float),
        seed=int(seed),
        params=params,
    )


def simulate_one_state(params, n_particles, seed, rate="indicator", m0=0.0):
    """Simulate one-state stopping times: clock fires, m resets to 0.

    rate selects the clock rate: "indicator" is 1{m >= 0} (the model);
    "one" forces a unit rate, which makes the stopping times Exp(1)
    regardless of the internal dynamics (a calibration mode).
    Returns stopping-time DurationSamples with per-sample particle ids.
    """
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    if rate not in ("indicator", "one"):
        raise ValueError(f"unknown rate choice {rate!r}")
    n_steps = params.n_steps
    sqdt = math.sqrt(params.dtau)
    sign_drift = params.drift.kind == sde.SIGN_STEP

    parts, ids, cens = [], [], []
    buf = np.empty(n_steps + 1, dtype=np.int64)
    for i in range(n_particles):
        rng = particle_stream(seed, i)
        normals = rng.standard_normal(n_steps)
        thresholds = exp_thresholds(rng, n_steps + 1)
        fired_n, cens_steps = _one_state_kernel(
            float(m0),
            sign_drift,
            params.drift.inverse_time,
            params.sigma * sqdt,
            params.dtau,
            rate == "one",
            n_steps,
            normals,
            thresholds,
            buf,
        )
        if int(buf[:fired_n].sum()) + cens_steps != n_steps:
            raise RuntimeError(
                f"timeline not conserved for particle {i}"
            )
        if fired_n:
            parts.append(buf[:fired_n] * params.dtau)
            ids.append(np.full(fired_n, i, dtype=np.int64))
        if cens_steps > 0:
            cens.append(cens_steps * params.dtau)

    samples = np.concatenate(parts) if parts else np.empty(0)
    pid = np.concatenate(ids) if ids else np.empty(0, dtype=np.int64)
    return DurationSamples(
        kind=STOPPING_TIME,
        samples=samples,
        horizon=params.horizon,
        n_particles=n_particles,
        censored_count=len(cens),
        particle_ids=pid,
        censored_samples=np.asarray(cens, dtype=float),
    )
