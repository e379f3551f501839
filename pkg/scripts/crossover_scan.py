#!/usr/bin/env python3
"""Scan memory times and print the transport-regime classification table.

Runs a small ensemble per memory time, measures characteristic lengths
over one time window and prints the regime report.  This is the desk
playground version of `runtumble reproduce --target table1`; crank
--n-particles and --t-e2 up for full-scale numbers.
"""

import argparse
import math
import sys

from runtumble import fileio, ibm, scaling, sde
from runtumble.models import OneStateParams

MEMORY_TIMES = (1e-2, 1.0, 10.0, 1e2, 1e3, math.inf)


def run_lengths(t_m, window, n_particles, v0, seed):
    inverse = 0.0 if math.isinf(t_m) else 1.0 / t_m
    params = ibm.IbmParams(
        dimension=1,
        v0=v0,
        internal=OneStateParams(
            drift=sde.DriftSpec(sde.SIGN_STEP, inverse),
            sigma=math.sqrt(2.0),
            dtau=1.0,
            horizon=window.t_e2,
        ),
        n_particles=n_particles,
        observation_times=(window.t_i, window.t_e1, window.t_e2),
        master_seed=seed,
    )
    record = ibm.run_ensemble(params)
    l1 = scaling.characteristic_length(record, window.t_i, window.t_e1)
    l2 = scaling.characteristic_length(record, window.t_i, window.t_e2)
    return l1, l2


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-i", type=float, default=1e2)
    ap.add_argument("--t-e1", type=float, default=6e2)
    ap.add_argument("--t-e2", type=float, default=1e3)
    ap.add_argument("--n-particles", type=int, default=200)
    ap.add_argument("--v0", type=float, default=0.02)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", help="also write lengths and report CSVs here")
    args = ap.parse_args(argv)

    window = scaling.ScalingWindow(args.t_i, args.t_e1, args.t_e2)
    print("  ".join(scaling.REPORT_COLUMNS))
    rows = []
    for t_m in MEMORY_TIMES:
        l1, l2 = run_lengths(t_m, window, args.n_particles, args.v0, args.seed)
        report = scaling.report_from_lengths(l1, l2, window, t_m)
        row = scaling.report_row(t_m, report)
        rows.append(row)
        print("  ".join(fileio.format_float(v) if isinstance(v, float) else str(v)
                        for v in row))
    if args.out:
        import os

        os.makedirs(args.out, exist_ok=True)
        fileio.write_csv(os.path.join(args.out, "scaling_table.csv"),
                         scaling.REPORT_COLUMNS, rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
