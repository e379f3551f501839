#!/usr/bin/env python3
"""Individual-based model: constant-speed motion with internal-state tumbling.

Each particle carries a position x, a unit direction v, an internal state m
and an integrated-rate clock.  Per step: m is updated by Euler-Maruyama,
the clock advances with the indicator rate evaluated at the updated m, the
particle moves a full step with its pre-firing direction, and on firing m
resets to 0, the clock restarts and the direction is resampled uniformly.

Ensembles run one independent task per particle, keyed by
(master_seed, particle_index); output is bit-reproducible for a fixed
master seed regardless of the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

try:
    import numba as nb

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    nb = None
    HAVE_NUMBA = False

from . import sde
from .models import RUN_TIME, DurationSamples, OneStateParams
from .rngutil import exp_thresholds, particle_stream

__all__ = [
    "IbmParams",
    "ParticleState",
    "EnsembleRecord",
    "log_observation_times",
    "resample_direction",
    "step_ibm",
    "run_ensemble",
]

_TWO_PI = 2.0 * math.pi


def log_observation_times(dtau, horizon, per_decade=32):
    """Log-spaced observation times snapped to step boundaries.

    Covers [dtau, horizon] with roughly per_decade points per decade,
    deduplicated after snapping; always contains dtau and horizon.
    """
    n_steps = int(round(horizon / dtau))
    if n_steps < 1:
        raise ValueError("horizon must be at least one step")
    decades = math.log10(n_steps)
    count = max(2, int(round(decades * per_decade)) + 1)
    raw = np.logspace(0.0, decades, count)
    steps = np.unique(np.clip(np.round(raw).astype(np.int64), 1, n_steps))
    return steps * dtau


@dataclass(frozen=True)
class IbmParams:
    """Ensemble parameters for the individual-based model."""

    dimension: int = 1
    v0: float = 0.02
    internal: OneStateParams = field(
        default_factory=lambda: OneStateParams(
            drift=sde.DriftSpec(sde.SIGN_STEP, 0.0),
            sigma=math.sqrt(2.0),
            dtau=1.0,
            horizon=1e4,
        )
    )
    n_particles: int = 500
    observation_times: tuple = ()
    master_seed: int = 1
    record_firing_intervals: bool = False

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if not math.isfinite(self.v0) or self.v0 <= 0.0:
            raise ValueError("v0 must be finite and > 0")
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        obs = tuple(float(t) for t in self.observation_times)
        if not obs:
            obs = tuple(log_observation_times(self.internal.dtau, self.internal.horizon))
        arr = np.asarray(obs)
        if arr.size == 0:
            raise ValueError("observation_times must not be empty")
        if not (np.diff(arr) > 0.0).all():
            raise ValueError("observation_times must be strictly increasing")
        if arr[0] < 0.0 or arr[-1] > self.internal.horizon * (1 + 1e-12):
            raise ValueError("observation_times must lie in [0, horizon]")
        object.__setattr__(self, "observation_times", obs)

    @property
    def observation_steps(self):
        dtau = self.internal.dtau
        steps = []
        for t in self.observation_times:
            k = int(round(t / dtau))
            if abs(k * dtau - t) > 1e-9 * max(1.0, abs(t)):
                raise ValueError(f"observation time {t!r} is not a step multiple")
            steps.append(k)
        return np.asarray(steps, dtype=np.int64)


@dataclass
class ParticleState:
    """Full state of one particle (reference implementation of one step)."""

    x: np.ndarray
    v: np.ndarray
    m: float
    clock: sde.ClockState


@dataclass
class EnsembleRecord:
    """Positions at observation times plus run-time samples.

    snapshots has shape (n_obs, n_particles, dimension).  run_times holds
    intervals between consecutive direction changes by default, or between
    consecutive firings when the params flag record_firing_intervals is
    set.  m_snapshots/v_snapshots mirror the snapshot grid for debugging.
    """

    params: IbmParams
    observation_times: np.ndarray
    snapshots: np.ndarray
    initial_positions: np.ndarray
    run_times: DurationSamples
    firing_count: int
    m_snapshots: np.ndarray | None = None
    v_snapshots: np.ndarray | None = None


def resample_direction(dimension, rng):
    """Uniform random unit vector; consumes (1, 1, 2) uniforms for d=(1,2,3)."""
    if dimension == 1:
        return np.array([1.0 if rng.random() < 0.5 else -1.0])
    if dimension == 2:
        th = _TWO_PI * rng.random()
        return np.array([math.cos(th), math.sin(th)])
    z = 1.0 - 2.0 * rng.random()
    phi = _TWO_PI * rng.random()
    r = math.sqrt(max(0.0, 1.0 - z * z))
    return np.array([r * math.cos(phi), r * math.sin(phi), z])


def step_ibm(state, params, rng):
    """One step of the individual-based dynamics (pure reference version).

    Order per step: internal state first, clock with the updated state,
    transport with the pre-firing direction over the full step, then the
    firing side effects (m reset, clock reset, direction resample).
    """
    internal = params.internal
    dtau = internal.dtau
    db = rng.standard_normal() * math.sqrt(dtau)
    m = sde.em_step(internal.drift, internal.sigma, state.m, dtau, db)
    rate = 1.0 if m >= 0.0 else 0.0
    clock, fired = sde.clock_advance(state.clock, rate, dtau)
    x = state.x + params.v0 * state.v * dtau
    v = state.v
    if fired:
        m = 0.0
        clock = sde.clock_reset(rng)
        v = resample_direction(params.dimension, rng)
    return ParticleState(x=x, v=v, m=m, clock=clock)


def _jit(fn):
    if HAVE_NUMBA:
        return nb.njit(nogil=True, cache=True)(fn)
    return fn


@_jit
def _ibm_kernel(
    dimension,
    v0,
    sign_drift,
    inv_tm,
    sigma_sqdt,
    dtau,
    n_steps,
    normals,
    thresholds,
    dir_u,
    obs_steps,
    x_out,
    m_out,
    v_out,
    dir_buf,
    fire_buf,
):
    # dir_u row 0 seeds the initial direction; row j the j-th firing
    x0 = 0.0
    x1 = 0.0
    x2 = 0.0
    v0x = 0.0
    v0y = 0.0
    v0z = 0.0
    if dimension == 1:
        v0x = 1.0 if dir_u[0, 0] < 0.5 else -1.0
    elif dimension == 2:
        th = _TWO_PI * dir_u[0, 0]
        v0x = math.cos(th)
        v0y = math.sin(th)
    else:
        z = 1.0 - 2.0 * dir_u[0, 0]
        phi = _TWO_PI * dir_u[0, 1]
        r = math.sqrt(max(0.0, 1.0 - z * z))
        v0x = r * math.cos(phi)
        v0y = r * math.sin(phi)
        v0z = z
    m = 0.0
    acc = 0.0
    fires = 0
    gamma = thresholds[0]
    obs_i = 0
    n_obs = obs_steps.shape[0]
    n_dir = 0
    n_fire = 0
    dir_start = 0
    fire_start = 0
    if n_obs > 0 and obs_steps[0] == 0:
        x_out[0, 0] = 0.0
        if dimension > 1:
            x_out[0, 1] = 0.0
        if dimension > 2:
            x_out[0, 2] = 0.0
        m_out[0] = m
        v_out[0, 0] = v0x
        if dimension > 1:
            v_out[0, 1] = v0y
        if dimension > 2:
            v_out[0, 2] = v0z
        obs_i = 1
    for k in range(n_steps):
        if sign_drift:
            g = 1.0 if m >= 0.0 else -1.0
        else:
            g = m
        m = m - inv_tm * g * dtau + sigma_sqdt * normals[k]
        rate = 1.0 if m >= 0.0 else 0.0
        acc += rate * dtau
        x0 += v0 * v0x * dtau
        if dimension > 1:
            x1 += v0 * v0y * dtau
        if dimension > 2:
            x2 += v0 * v0z * dtau
        if acc >= gamma:
            fires += 1
            fire_buf[n_fire] = k + 1 - fire_start
            n_fire += 1
            fire_start = k + 1
            m = 0.0
            acc = 0.0
            gamma = thresholds[fires]
            nx = v0x
            ny = v0y
            nz = v0z
            if dimension == 1:
                nx = 1.0 if dir_u[fires, 0] < 0.5 else -1.0
            elif dimension == 2:
                th = _TWO_PI * dir_u[fires, 0]
                nx = math.cos(th)
                ny = math.sin(th)
            else:
                z = 1.0 - 2.0 * dir_u[fires, 0]
                phi = _TWO_PI * dir_u[fires, 1]
                r = math.sqrt(max(0.0, 1.0 - z * z))
                nx = r * math.cos(phi)
                ny = r * math.sin(phi)
                nz = z
            if nx != v0x or ny != v0y or nz != v0z:
                dir_buf[n_dir] = k + 1 - dir_start
                n_dir += 1
                dir_start = k + 1
            v0x = nx
            v0y = ny
            v0z = nz
        if obs_i < n_obs and obs_steps[obs_i] == k + 1:
            x_out[obs_i, 0] = x0
            if dimension > 1:
                x_out[obs_i, 1] = x1
            if dimension > 2:
                x_out[obs_i, 2] = x2
            m_out[obs_i] = m
            v_out[obs_i, 0] = v0x
            if dimension > 1:
                v_out[obs_i, 1] = v0y
            if dimension > 2:
                v_out[obs_i, 2] = v0z
            obs_i += 1
    return n_dir, n_fire, n_steps - dir_start, n_steps - fire_start, fires


def _simulate_particle(params, index):
    internal = params.internal
    n_steps = internal.n_steps
    obs_steps = params.observation_steps
    d = params.dimension
    rng = particle_stream(params.master_seed, index)
    normals = rng.standard_normal(n_steps)
    thresholds = exp_thresholds(rng, n_steps + 1)
    dir_u = rng.random((n_steps + 1, 2))
    x_out = np.zeros((obs_steps.size, d))
    m_out = np.zeros(obs_steps.size)
    v_out = np.zeros((obs_steps.size, d))
    dir_buf = np.empty(n_steps + 1, dtype=np.int64)
    fire_buf = np.empty(n_steps + 1, dtype=np.int64)
    n_dir, n_fire, cens_dir, cens_fire, fires = _ibm_kernel(
        d,
        params.v0,
        internal.drift.kind == sde.SIGN_STEP,
        internal.drift.inverse_time,
        internal.sigma * math.sqrt(internal.dtau),
        internal.dtau,
        n_steps,
        normals,
        thresholds,
        dir_u,
        obs_steps,
        x_out,
        m_out,
        v_out,
        dir_buf,
        fire_buf,
    )
    if int(dir_buf[:n_dir].sum()) + cens_dir != n_steps:
        raise RuntimeError(f"direction-change timeline broken for particle {index}")
    if int(fire_buf[:n_fire].sum()) + cens_fire != n_steps:
        raise RuntimeError(f"firing timeline broken for particle {index}")
    if params.record_firing_intervals:
        runs = fire_buf[:n_fire] * internal.dtau
        cens = cens_fire * internal.dtau
    else:
        runs = dir_buf[:n_dir] * internal.dtau
        cens = cens_dir * internal.dtau
    return x_out, m_out, v_out, runs.copy(), cens, fires


def run_ensemble(params, workers=1, progress=None):
    """Simulate the ensemble; returns positions, run times and debug state.

    workers sets the thread count; results are identical for any value
    because every particle consumes only its own random stream.  progress,
    if given, is called as progress(done, total) from the main thread.
    """
    workers = max(1, int(workers))
    n = params.n_particles
    n_obs = len(params.observation_times)
    d = params.dimension
    snapshots = np.zeros((n_obs, n, d))
    m_snap = np.zeros((n_obs, n))
    v_snap = np.zeros((n_obs, n, d))
    run_parts = [None] * n
    cens_parts = [0.0] * n
    fires_total = 0

    def work(i):
        return i, _simulate_particle(params, i)

    done = 0
    if workers == 1:
        results = map(work, range(n))
        for i, (x_out, m_out, v_out, runs, cens, fires) in results:
            snapshots[:, i, :] = x_out
            m_snap[:, i] = m_out
            v_snap[:, i, :] = v_out
            run_parts[i] = runs
            cens_parts[i] = cens
            fires_total += fires
            done += 1
            if progress is not None:
                progress(done, n)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for i, (x_out, m_out, v_out, runs, cens, fires) in pool.map(
                work, range(n)
            ):
                snapshots[:, i, :] = x_out
                m_snap[:, i] = m_out
                v_snap[:, i, :] = v_out
                run_parts[i] = runs
                cens_parts[i] = cens
                fires_total += fires
                done += 1
                if progress is not None:
                    progress(done, n)

    samples = (
        np.concatenate([r for r in run_parts if r.size])
        if any(r.size for r in run_parts)
        else np.empty(0)
    )
    ids = (
        np.concatenate(
            [np.full(r.size, i, dtype=np.int64) for i, r in enumerate(run_parts) if r.size]
        )
        if samples.size
        else np.empty(0, dtype=np.int64)
    )
    censored = [c for c in cens_parts if c > 0.0]
    run_times = DurationSamples(
        kind=RUN_TIME,
        samples=samples,
        horizon=params.internal.horizon,
        n_particles=n,
        censored_count=len(censored),
        particle_ids=ids,
        censored_samples=np.asarray(censored, dtype=float),
    )
    return EnsembleRecord(
        params=params,
        observation_times=np.asarray(params.observation_times, dtype=float),
        snapshots=snapshots,
        initial_positions=np.zeros((n, d)),
        run_times=run_times,
        firing_count=fires_total,
        m_snapshots=m_snap,
        v_snapshots=v_snap,
    )
