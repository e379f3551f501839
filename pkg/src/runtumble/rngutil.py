"""Deterministic per-particle random streams.

Every particle gets an independent generator keyed by
(master_seed, particle_index), so results do not depend on how particles
are distributed over worker threads.  Simulation kernels consume
pre-drawn blocks indexed by step number; unused entries are simply
discarded, which keeps the stream position independent of the dynamics.

Block draw order per particle is fixed and documented here:
  1. standard normals, one per step
  2. uniforms for clock thresholds (one per possible firing, plus one)
  3. any extra uniforms the model needs (flip checks, directions)
"""

from __future__ import annotations

import numpy as np

__all__ = ["particle_stream", "exp_thresholds"]

# strictly positive stand-in for -log(1-u) when u == 0.0 (prob 2^-53);
# keeps the threshold > 0 invariant without a resample loop in kernels
_TINY_THRESHOLD = 1e-300


def particle_stream(master_seed, particle_index):
    """Generator for one particle, independent across indices and seeds."""
    seq = np.random.SeedSequence((int(master_seed), int(particle_index)))
    return np.random.default_rng(seq)


def exp_thresholds(rng, n):
    """n Exp(1) clock thresholds as -log(1-u), u uniform in [0, 1)."""
    u = rng.random(n)
    g = -np.log1p(-u)
    if np.any(g <= 0.0):
        g = np.where(g <= 0.0, _TINY_THRESHOLD, g)
    return g
