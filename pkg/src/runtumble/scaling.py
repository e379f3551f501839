#!/usr/bin/env python3
"""Crossover-exponent extraction and regime classification.

From the characteristic lengths of an ensemble over two nested time
intervals, extract the scaling exponents

    1 + mu = ln(T_t2/T_t1) / ln(L2/L1),
    eps_j  = (T_L / T_tj)^(1/(1+mu)),
    gamma  = ln(T_L / T_m) / ln(eps),

and classify the dispersion pattern.  The frozen CROSSOVER_* tables are
regression targets for the memory-time sweep of the one-dimensional
model over a short and a long observation window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .stats import _snapshot_index

__all__ = [
    "REGIME_BALLISTIC",
    "REGIME_DIFFUSIVE",
    "REGIME_UNDETERMINED",
    "ScalingWindow",
    "ClassifyTolerances",
    "ScalingReport",
    "characteristic_length",
    "extract_mu_eps",
    "gamma_of",
    "classify_regime",
    "build_report",
    "report_from_lengths",
    "report_to_dict",
    "report_row",
    "REPORT_COLUMNS",
    "CROSSOVER_SHORT_WINDOW",
    "CROSSOVER_LONG_WINDOW",
    "CROSSOVER_SHORT_ROWS",
    "CROSSOVER_LONG_ROWS",
]

REGIME_BALLISTIC = "BallisticTransport"
REGIME_DIFFUSIVE = "NormalDiffusion"
REGIME_UNDETERMINED = "Undetermined"

REPORT_COLUMNS = ("T_m", "L1", "L2", "eps1", "eps2", "one_plus_mu", "gamma1", "gamma2", "regime")


@dataclass(frozen=True)
class ScalingWindow:
    """Two nested observation intervals (t_i, t_e1) and (t_i, t_e2)."""

    t_i: float
    t_e1: float
    t_e2: float
    t_lambda: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.t_i < self.t_e1 < self.t_e2):
            raise ValueError(
                f"window times must satisfy 0 <= t_i < t_e1 < t_e2, got "
                f"({self.t_i!r}, {self.t_e1!r}, {self.t_e2!r})"
            )
        if not (math.isfinite(self.t_lambda) and self.t_lambda > 0.0):
            raise ValueError("t_lambda must be finite and > 0")

    @property
    def t_t1(self):
        return self.t_e1 - self.t_i

    @property
    def t_t2(self):
        return self.t_e2 - self.t_i


@dataclass(frozen=True)
class ClassifyTolerances:
    delta_gamma: float = 0.05
    delta_mu: float = 0.2

    def __post_init__(self):
        if not (0.0 <= self.delta_gamma < 0.5):
            raise ValueError("delta_gamma must be in [0, 0.5)")
        if not (0.0 <= self.delta_mu < 1.0):
            raise ValueError("delta_mu must be in [0, 1)")


@dataclass(frozen=True)
class ScalingReport:
    l1: float
    l2: float
    eps1: float
    eps2: float
    mu: float
    gamma1: float
    gamma2: float
    regime: str

    def __post_init__(self):
        if not (self.l2 > self.l1 > 0.0):
            raise ValueError("lengths must satisfy L2 > L1 > 0")
        if not (self.eps1 > 0.0 and self.eps2 > 0.0):
            raise ValueError("eps values must be > 0")
        if self.regime not in (REGIME_BALLISTIC, REGIME_DIFFUSIVE, REGIME_UNDETERMINED):
            raise ValueError(f"unknown regime {self.regime!r}")

    @property
    def one_plus_mu(self):
        return 1.0 + self.mu


def characteristic_length(record, t_i, t_e):
    """RMS displacement between the snapshots at t_i and t_e.

    L = sqrt((1/N) sum_n |x^n(t_e) - x^n(t_i)|^2).
    """
    snaps = np.asarray(record.snapshots, dtype=float)
    if t_i == 0.0:
        start = np.asarray(record.initial_positions, dtype=float)
    else:
        start = snaps[_snapshot_index(record, t_i)]
    end = snaps[_snapshot_index(record, t_e)]
    disp = end - start
    return float(np.sqrt(np.mean(np.sum(disp * disp, axis=1))))


def extract_mu_eps(l1, l2, t_t1, t_t2, t_lambda=1.0):
    """Exponent mu and the two eps values from two characteristic lengths."""
    if not (l2 > l1 > 0.0):
        raise ValueError(f"need L2 > L1 > 0, got L1={l1!r} L2={l2!r}")
    if not (t_t2 > t_t1 > 0.0):
        raise ValueError(f"need T_t2 > T_t1 > 0, got {t_t1!r}, {t_t2!r}")
    if not t_lambda > 0.0:
        raise ValueError("t_lambda must be > 0")
    one_plus_mu = math.log(t_t2 / t_t1) / math.log(l2 / l1)
    eps1 = (t_lambda / t_t1) ** (1.0 / one_plus_mu)
    eps2 = (t_lambda / t_t2) ** (1.0 / one_plus_mu)
    return one_plus_mu - 1.0, eps1, eps2


def gamma_of(eps, t_lambda, t_m):
    """Memory exponent gamma = ln(T_L/T_m) / ln(eps); +inf when T_m is."""
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must be in (0, 1), got {eps!r}")
    if not t_lambda > 0.0:
        raise ValueError("t_lambda must be > 0")
    if not t_m > 0.0:
        raise ValueError("t_m must be > 0 (or +inf)")
    if math.isinf(t_m):
        return math.inf
    if t_m == t_lambda:
        return 0.0
    return math.log(t_lambda / t_m) / math.log(eps)


def classify_regime(mu, gamma, tolerances=ClassifyTolerances()):
    """Dispersion pattern from the extracted exponents.

    Ballistic needs gamma above 1/2 with mu near 0; diffusive needs gamma
    below 1/2 with mu near 1; anything else is undetermined.  The
    half-way point separates the two limit theorems, so the bands are
    1/2 +- delta_gamma.
    """
    if math.isnan(mu) or math.isnan(gamma):
        raise ValueError("mu and gamma must not be NaN")
    dg, dm = tolerances.delta_gamma, tolerances.delta_mu
    if gamma > 0.5 + dg and abs(mu) <= dm:
        return REGIME_BALLISTIC
    if gamma <= 0.5 - dg and abs(mu - 1.0) <= dm:
        return REGIME_DIFFUSIVE
    return REGIME_UNDETERMINED


def report_from_lengths(l1, l2, window, t_m, tolerances=ClassifyTolerances()):
    """ScalingReport from two characteristic lengths over a window."""
    mu, eps1, eps2 = extract_mu_eps(l1, l2, window.t_t1, window.t_t2, window.t_lambda)
    gamma1 = gamma_of(eps1, window.t_lambda, t_m)
    gamma2 = gamma_of(eps2, window.t_lambda, t_m)
    r1 = classify_regime(mu, gamma1, tolerances)
    r2 = classify_regime(mu, gamma2, tolerances)
    regime = r1 if r1 == r2 else REGIME_UNDETERMINED
    return ScalingReport(
        l1=float(l1), l2=float(l2), eps1=eps1, eps2=eps2, mu=mu,
        gamma1=gamma1, gamma2=gamma2, regime=regime,
    )


def build_report(record, window, t_m, tolerances=ClassifyTolerances()):
    """ScalingReport straight from an ensemble record."""
    l1 = characteristic_length(record, window.t_i, window.t_e1)
    l2 = characteristic_length(record, window.t_i, window.t_e2)
    return report_from_lengths(l1, l2, window, t_m, tolerances)


def _json_float(x):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


def report_to_dict(report, t_m=None):
    """JSON-safe dict form; non-finite exponents become 'inf'/'-inf'."""
    out = {
        "L1": report.l1,
        "L2": report.l2,
        "eps1": report.eps1,
        "eps2": report.eps2,
        "mu": _json_float(report.mu),
        "one_plus_mu": _json_float(report.one_plus_mu),
        "gamma1": _json_float(report.gamma1),
        "gamma2": _json_float(report.gamma2),
        "regime": report.regime,
    }
    if t_m is not None:
        out["T_m"] = _json_float(t_m)
    return out


def report_row(t_m, report):
    """CSV row in REPORT_COLUMNS order."""
    return [
        _json_float(t_m),
        report.l1,
        report.l2,
        report.eps1,
        report.eps2,
        _json_float(report.one_plus_mu),
        _json_float(report.gamma1),
        _json_float(report.gamma2),
        report.regime,
    ]


# Frozen regression targets for the memory-time sweep of the 1-D model
# (V0 = 0.02, sigma = sqrt(2), dtau = 1): characteristic lengths and the
# exponents extracted from them, over a short and a long window.  regime
# None marks rows left unclassified in the reference extraction.

CROSSOVER_SHORT_WINDOW = ScalingWindow(t_i=1e2, t_e1=6e2, t_e2=1e3)
CROSSOVER_LONG_WINDOW = ScalingWindow(t_i=1e5, t_e1=6e5, t_e2=1e6)

_INF = math.inf

CROSSOVER_SHORT_ROWS = (
    {"t_m": 1e-2, "l1": 6.33e-1, "l2": 8.63e-1, "eps1": 3.60e-2, "eps2": 2.77e-2,
     "one_plus_mu": 1.90, "gamma1": -1.39, "gamma2": -1.29, "regime": REGIME_DIFFUSIVE},
    {"t_m": 1.0, "l1": 7.18e-1, "l2": 9.73e-1, "eps1": 4.06e-2, "eps2": 3.00e-2,
     "one_plus_mu": 1.94, "gamma1": 0.0, "gamma2": 0.0, "regime": REGIME_DIFFUSIVE},
    {"t_m": 10.0, "l1": 4.03, "l2": 5.81, "eps1": 2.11e-2, "eps2": 1.47e-2,
     "one_plus_mu": 1.61, "gamma1": 0.60, "gamma2": 0.55, "regime": None},
    {"t_m": 1e2, "l1": 6.71, "l2": 1.16e1, "eps1": 3.10e-3, "eps2": 1.79e-3,
     "one_plus_mu": 1.08, "gamma1": 0.80, "gamma2": 0.73, "regime": REGIME_BALLISTIC},
    {"t_m": 1e3, "l1": 6.91, "l2": 1.21e1, "eps1": 2.70e-3, "eps2": 1.55e-3,
     "one_plus_mu": 1.05, "gamma1": 1.17, "gamma2": 1.07, "regime": REGIME_BALLISTIC},
    {"t_m": _INF, "l1": 6.87, "l2": 1.22e1, "eps1": 2.40e-3, "eps2": 1.34e-3,
     "one_plus_mu": 1.03, "gamma1": _INF, "gamma2": _INF, "regime": REGIME_BALLISTIC},
)

CROSSOVER_LONG_ROWS = (
    {"t_m": 1e-2, "l1": 2.12e1, "l2": 2.79e1, "eps1": 2.10e-3, "eps2": 1.59e-3,
     "one_plus_mu": 2.13, "gamma1": -0.75, "gamma2": -0.71, "regime": REGIME_DIFFUSIVE},
    {"t_m": 1.0, "l1": 2.3330e1, "l2": 3.08e1, "eps1": 2.00e-3, "eps2": 1.51e-3,
     "one_plus_mu": 2.11, "gamma1": 0.0, "gamma2": 0.0, "regime": REGIME_DIFFUSIVE},
    {"t_m": 10.0, "l1": 1.57e2, "l2": 2.06e2, "eps1": 2.40e-3, "eps2": 1.83e-3,
     "one_plus_mu": 2.17, "gamma1": 0.38, "gamma2": 0.37, "regime": REGIME_DIFFUSIVE},
    {"t_m": 1e2, "l1": 1.62e3, "l2": 2.18e3, "eps1": 1.30e-3, "eps2": 1.00e-3,
     "one_plus_mu": 1.99, "gamma1": 0.70, "gamma2": 0.67, "regime": None},
    {"t_m": 1e3, "l1": 6.08e3, "l2": 1.01e4, "eps1": 1.10e-5, "eps2": 6.57e-6,
     "one_plus_mu": 1.15, "gamma1": 0.60, "gamma2": 0.58, "regime": REGIME_BALLISTIC},
    {"t_m": _INF, "l1": 7.07e3, "l2": 1.24e4, "eps1": 3.80e-6, "eps2": 2.17e-6,
     "one_plus_mu": 1.05, "gamma1": _INF, "gamma2": _INF, "regime": REGIME_BALLISTIC},
)
