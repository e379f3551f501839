#!/usr/bin/env python3
"""Quick look at the stopping-time tail: power-law window, then cutoff.

Simulates the one-state model, prints the log-log exponent over an
intermediate window and the exponential rate over the final decade.
Useful for eyeballing how T_m and sigma move the crossover before
committing to a long run.
"""

import argparse
import math
import sys

import numpy as np

from runtumble import sde, stats
from runtumble.models import OneStateParams, simulate_one_state


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-m", type=float, default=6000.0)
    ap.add_argument("--sigma", type=float, default=0.456)
    ap.add_argument("--dtau", type=float, default=0.1)
    ap.add_argument("--horizon", type=float, default=1e5)
    ap.add_argument("--n-particles", type=int, default=50)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--window", type=float, nargs=2, default=(1e2, 1e4))
    args = ap.parse_args(argv)

    inverse = 0.0 if math.isinf(args.t_m) else 1.0 / args.t_m
    params = OneStateParams(
        drift=sde.DriftSpec(sde.SIGN_STEP, inverse),
        sigma=args.sigma,
        dtau=args.dtau,
        horizon=args.horizon,
    )
    durations = simulate_one_state(params, args.n_particles, args.seed)
    print(f"samples: {durations.samples.size} "
          f"(censored {durations.censored_count})")

    curve = stats.survival_curve(durations.samples)
    power = stats.fit_loglog(curve, window=tuple(args.window))
    print(f"log-log slope on [{args.window[0]:g}, {args.window[1]:g}]: "
          f"{power.slope:+.4f} (rms {power.residual_rms:.3f}, "
          f"{power.n_points} pts)")

    t, p = curve.thresholds, curve.probabilities
    lo = curve.thresholds[-1] / 10.0
    mask = (t >= lo) & (p > 0.0)
    if int(mask.sum()) >= 3:
        tail = stats.fit_semilog(t[mask], p[mask], window=(lo, t[-1]))
        rate = -tail.slope * math.log(10.0)
        print(f"final-decade exponential rate: {rate:.3e} per time "
              f"(rms {tail.residual_rms:.3f})")
    else:
        print("final decade has too few positive points for a tail fit")
    return 0


if __name__ == "__main__":
    sys.exit(main())
