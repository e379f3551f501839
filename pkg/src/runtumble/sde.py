"""Primitive numerical machinery for internal-state SDEs with integrated-rate clocks.

The internal state m of a particle follows an Euler-Maruyama discretisation of

    dm = -inverse_time * g(m) dt + sigma dB

where g is either the identity (mean reversion toward 0) or the unit sign
step.  Events (tumbles, rotation-state flips) are driven by an
integrated-rate clock: the accumulator I(t) = int_0^t rate(m_s) ds fires
when it crosses an Exp(1) threshold, after which the clock is reset with a
fresh threshold.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

__all__ = [
    "OU",
    "SIGN_STEP",
    "STEP_INDICATOR",
    "EXP_CCW_TO_CW",
    "EXP_CW_TO_CCW",
    "RATE_EXPONENT_CLAMP",
    "DriftSpec",
    "RateSpec",
    "ClockState",
    "drift_eval",
    "em_step",
    "rate_eval",
    "clock_advance",
    "clock_reset",
]

LOG = logging.getLogger(__name__)

OU = "ou"
SIGN_STEP = "sign-step"

STEP_INDICATOR = "step-indicator"
EXP_CCW_TO_CW = "exp-ccw-to-cw"
EXP_CW_TO_CCW = "exp-cw-to-ccw"

# exp(710) overflows a double; anything this large saturates the flip
# probability at 1 anyway, so clamping only needs to avoid inf/nan
RATE_EXPONENT_CLAMP = 700.0


def _require_finite(name, value):
    v = float(value)
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return v


@dataclass(frozen=True)
class DriftSpec:
    """Drift term -inverse_time * g(m).

    kind OU uses g(m) = m; kind SIGN_STEP uses g(m) = 1 for m >= 0 and -1
    for m < 0 (the value at m = 0 is pinned to +1).  inverse_time = 0
    encodes an infinite relaxation time, i.e. no drift.
    """

    kind: str
    inverse_time: float

    def __post_init__(self):
        if self.kind not in (OU, SIGN_STEP):
            raise ValueError(f"unknown drift kind {self.kind!r}")
        v = float(self.inverse_time)
        if not math.isfinite(v) or v < 0.0:
            raise ValueError(
                f"inverse_time must be finite and >= 0, got {self.inverse_time!r}"
            )
        object.__setattr__(self, "inverse_time", v)


@dataclass(frozen=True)
class RateSpec:
    """Event-rate function of the internal state.

    STEP_INDICATOR is the unit indicator rate(m) = 1 for m >= 0, else 0.
    The exponential kinds rate(y) = exp(alpha * (y - y_bar) / y_bar) / t
    model rotation-state switching; EXP_CCW_TO_CW uses (t0, alpha1) and
    EXP_CW_TO_CCW uses (t1, alpha2).  Unused fields may stay NaN.
    """

    kind: str
    t0: float = math.nan
    t1: float = math.nan
    alpha1: float = math.nan
    alpha2: float = math.nan
    y_bar: float = math.nan

    def __post_init__(self):
        if self.kind == STEP_INDICATOR:
            return
        if self.kind == EXP_CCW_TO_CW:
            t, a = float(self.t0), float(self.alpha1)
            tname, aname = "t0", "alpha1"
        elif self.kind == EXP_CW_TO_CCW:
            t, a = float(self.t1), float(self.alpha2)
            tname, aname = "t1", "alpha2"
        else:
            raise ValueError(f"unknown rate kind {self.kind!r}")
        if not math.isfinite(t) or t <= 0.0:
            raise ValueError(f"{tname} must be finite and > 0, got {t!r}")
        if not math.isfinite(a):
            raise ValueError(f"{aname} must be finite, got {a!r}")
        yb = float(self.y_bar)
        if not math.isfinite(yb) or yb == 0.0:
            raise ValueError(f"y_bar must be finite and nonzero, got {self.y_bar!r}")


@dataclass(frozen=True)
class ClockState:
    """Integrated-rate clock: fires when accumulator reaches threshold."""

    accumulator: float
    threshold: float

    def __post_init__(self):
        a = float(self.accumulator)
        g = float(self.threshold)
        if not math.isfinite(a) or a < 0.0:
            raise ValueError(f"accumulator must be finite and >= 0, got {a!r}")
        if not math.isfinite(g) or g <= 0.0:
            raise ValueError(f"threshold must be finite and > 0, got {g!r}")


def drift_eval(spec, m):
    """Evaluate -inverse_time * g(m) for the given DriftSpec."""
    m = float(m)
    if spec.kind == OU:
        g = m
    else:
        g = 1.0 if m >= 0.0 else -1.0
    return -spec.inverse_time * g


def em_step(spec, sigma, m, dtau, db):
    """One Euler-Maruyama update m + drift(m)*dtau + sigma*db.

    db is the Brownian increment over the step, supplied by the caller so
    stepping stays deterministic given the noise sequence.
    """
    sigma = _require_finite("sigma", sigma)
    if sigma < 0.0:
        raise ValueError(f"sigma must be >= 0, got {sigma!r}")
    dtau = _require_finite("dtau", dtau)
    if dtau <= 0.0:
        raise ValueError(f"dtau must be > 0, got {dtau!r}")
    m = _require_finite("m", m)
    db = _require_finite("db", db)
    return m + drift_eval(spec, m) * dtau + sigma * db


def rate_eval(spec, value):
    """Evaluate a RateSpec at the internal-state value.

    The exponent of the exponential kinds is clamped at
    RATE_EXPONENT_CLAMP to avoid overflow; clamping is logged because it
    means the parameters pushed the state far outside the modelled range.
    """
    value = float(value)
    if spec.kind == STEP_INDICATOR:
        return 1.0 if value >= 0.0 else 0.0
    if spec.kind == EXP_CCW_TO_CW:
        inv_t, alpha = 1.0 / spec.t0, spec.alpha1
    else:
        inv_t, alpha = 1.0 / spec.t1, spec.alpha2
    expo = alpha * (value - spec.y_bar) / spec.y_bar
    if expo > RATE_EXPONENT_CLAMP:
        LOG.warning(
            "rate exponent %.6g clamped to %.0f (kind=%s)",
            expo,
            RATE_EXPONENT_CLAMP,
            spec.kind,
        )
        expo = RATE_EXPONENT_CLAMP
    return math.exp(expo) * inv_t


def clock_advance(clock, rate, dtau):
    """Advance the clock by rate*dtau; returns (new_state, fired).

    fired is True when the accumulator reached the threshold during the
    step.  The caller decides what to do on firing (typically clock_reset
    plus a state update).
    """
    rate = _require_finite("rate", rate)
    if rate < 0.0:
        raise ValueError(f"rate must be >= 0, got {rate!r}")
    dtau = _require_finite("dtau", dtau)
    if dtau <= 0.0:
        raise ValueError(f"dtau must be > 0, got {dtau!r}")
    acc = clock.accumulator + rate * dtau
    return ClockState(acc, clock.threshold), acc >= clock.threshold


def clock_reset(rng):
    """Fresh clock: zero accumulator, Exp(1) threshold Gamma = -log(u).

    u is drawn in (0, 1] so the threshold is strictly positive.
    """
    while True:
        u = 1.0 - rng.random()
        g = -math.log(u)
        if g > 0.0:
            return ClockState(0.0, g)
