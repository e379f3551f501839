"""Tests for the two-state and one-state renewal simulators."""

import math

import numpy as np
import pytest

from runtumble import models, sde
from runtumble.rngutil import exp_thresholds, particle_stream


def exp_cdf(rate):
    return lambda t: -np.expm1(-rate * np.asarray(t))


def ks_statistic(samples, cdf):
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    f = cdf(x)
    hi = (np.arange(1, n + 1) / n - f).max()
    lo = (f - np.arange(0, n) / n).max()
    return max(hi, lo)


class TestParams:
    def test_two_state_validation(self):
        with pytest.raises(ValueError):
            models.TwoStateParams(t0=0.0)
        with pytest.raises(ValueError):
            models.TwoStateParams(y_bar=0.0)
        with pytest.raises(ValueError):
            models.TwoStateParams(sigma=-1.0)
        with pytest.raises(ValueError):
            models.TwoStateParams(horizon=0.35, dtau=0.1)

    def test_infinite_t_m_allowed(self):
        p = models.TwoStateParams(t_m=math.inf)
        assert p.inverse_t_m == 0.0

    def test_one_state_validation(self):
        with pytest.raises(ValueError):
            models.OneStateParams(sigma=-0.1)
        p = models.OneStateParams(horizon=100.0, dtau=0.1)
        assert p.n_steps == 1000

    def test_duration_samples_validation(self):
        with pytest.raises(ValueError):
            models.DurationSamples("nope", np.array([1.0]), 10.0, 1, 0)
        with pytest.raises(ValueError):
            models.DurationSamples(models.CCW, np.array([0.0]), 10.0, 1, 0)
        with pytest.raises(ValueError):
            models.DurationSamples(models.CCW, np.array([11.0]), 10.0, 1, 0)


class TestRates:
    def test_rate_at_mean_is_base_rate(self):
        p = models.TwoStateParams()
        assert models.rate_ccw_to_cw(p, 5.0) == pytest.approx(1.0 / 300.0, rel=1e-15)
        assert models.rate_cw_to_ccw(p, 5.0) == pytest.approx(1.0 / 30.0, rel=1e-15)

    def test_rate_above_mean(self):
        p = models.TwoStateParams(alpha1=10.0, y_bar=5.0, t0=300.0)
        # exponent is 10 * 0.5/5 = 1
        assert models.rate_ccw_to_cw(p, 5.5) == pytest.approx(9.0609e-3, rel=1e-4)
        assert models.rate_ccw_to_cw(p, 5.5) == pytest.approx(math.e / 300.0, rel=1e-14)


class TestTwoState:
    def test_sigma_zero_gives_iid_exponentials(self):
        # with no noise Y stays at y_bar, so both rates are constant and
        # the durations are exponential with rates 1/t0 and 1/t1
        p = models.TwoStateParams(sigma=0.0, horizon=3e4, dtau=0.1)
        res = models.simulate_two_state(p, 20, seed=42, flip_mode=models.FLIP_EXACT)
        assert res.ccw.samples.size > 500
        assert res.cw.samples.size > 500
        d_ccw = ks_statistic(res.ccw.samples, exp_cdf(1.0 / p.t0))
        d_cw = ks_statistic(res.cw.samples, exp_cdf(1.0 / p.t1))
        assert d_ccw < 1.63 / math.sqrt(res.ccw.samples.size)
        assert d_cw < 1.63 / math.sqrt(res.cw.samples.size)

    def test_timeline_conservation(self):
        p = models.TwoStateParams(horizon=5e3, dtau=0.1)
        n = 7
        res = models.simulate_two_state(p, n, seed=3)
        total = (
            math.fsum(res.ccw.samples)
            + math.fsum(res.cw.samples)
            + math.fsum(res.ccw.censored_samples)
            + math.fsum(res.cw.censored_samples)
            + math.fsum(res.first_interval_samples)
        )
        assert total == pytest.approx(n * p.horizon, rel=1e-9)

    def test_first_interval_excluded_and_censoring(self):
        p = models.TwoStateParams(horizon=5e3, dtau=0.1)
        n = 7
        res = models.simulate_two_state(p, n, seed=3)
        # every particle ends inside an open interval (flipping at the
        # exact final step has negligible probability at this seed)
        assert res.ccw.censored_count + res.cw.censored_count == n
        assert res.first_intervals_excluded <= n
        assert res.first_interval_samples.size == res.first_intervals_excluded

    def test_histogram_state_asymmetry(self):
        # occupancy: CCW mass sits at dY < 0, CW mass at dY > 0
        p = models.TwoStateParams(horizon=2e4, dtau=0.1)
        res = models.simulate_two_state(p, 20, seed=11)
        h = res.histogram
        mid = (h.bin_edges.size - 1) // 2
        assert h.bin_edges[mid] == pytest.approx(0.0, abs=1e-12)
        ccw_neg = h.ccw_counts[:mid].sum()
        ccw_pos = h.ccw_counts[mid:].sum()
        cw_neg = h.cw_counts[:mid].sum()
        cw_pos = h.cw_counts[mid:].sum()
        assert ccw_neg > ccw_pos
        assert cw_pos > cw_neg

    def test_determinism(self):
        p = models.TwoStateParams(horizon=2e3, dtau=0.1)
        a = models.simulate_two_state(p, 5, seed=9)
        b = models.simulate_two_state(p, 5, seed=9)
        np.testing.assert_array_equal(a.ccw.samples, b.ccw.samples)
        np.testing.assert_array_equal(a.cw.samples, b.cw.samples)
        np.testing.assert_array_equal(a.histogram.ccw_counts, b.histogram.ccw_counts)
        c = models.simulate_two_state(p, 5, seed=10)
        assert not np.array_equal(a.ccw.samples, c.ccw.samples)

    def test_flip_modes_differ_and_are_recorded(self):
        p = models.TwoStateParams(horizon=2e3, dtau=0.1)
        a = models.simulate_two_state(p, 5, seed=1)
        b = models.simulate_two_state(p, 5, seed=1, flip_mode=models.FLIP_EXACT)
        assert a.flip_mode == models.FLIP_RATE_EXP
        assert b.flip_mode == models.FLIP_EXACT
        # the rate-exp rule flips more often, so durations differ
        assert not np.array_equal(a.ccw.samples, b.ccw.samples)

    def test_clamp_counted(self):
        p = models.TwoStateParams(
            alpha1=5000.0, alpha2=5000.0, t_m=2.0, sigma=2.0, horizon=50.0, dtau=0.1
        )
        res = models.simulate_two_state(p, 3, seed=2)
        assert res.clamp_count > 0

    def test_initial_state_uniform(self):
        # with a horizon too short for flips, the censored interval's
        # state is the initial state; counts should be near-balanced
        p = models.TwoStateParams(sigma=0.0, horizon=1.0, dtau=0.1)
        res = models.simulate_two_state(p, 400, seed=5)
        assert res.ccw.censored_count + res.cw.censored_count == 400
        assert 140 < res.ccw.censored_count < 260


class TestOneState:
    def test_unit_rate_mean_near_one(self):
        p = models.OneStateParams(
            drift=sde.DriftSpec(sde.SIGN_STEP, 1.0 / 6000.0),
            sigma=0.456,
            dtau=0.01,
            horizon=200.0,
        )
        s = models.simulate_one_state(p, 100, seed=123, rate="one")
        assert s.samples.size >= 10_000
        mean = s.samples.mean()
        assert 1.0 - 3 * p.dtau <= mean <= 1.0 + 3 * p.dtau

    def test_unit_rate_first_samples_are_exp1(self):
        p = models.OneStateParams(
            drift=sde.DriftSpec(sde.SIGN_STEP, 1.0 / 6000.0),
            sigma=0.456,
            dtau=0.01,
            horizon=50.0,
        )
        s = models.simulate_one_state(p, 400, seed=7, rate="one")
        # first stopping time per particle: exactly iid
        first = np.array(
            [s.samples[s.particle_ids == i][0] for i in range(400)]
        )
        assert ks_statistic(first, exp_cdf(1.0)) < 1.63 / math.sqrt(400)

    def test_sigma_zero_deterministic_trace(self):
        # sigma = 0, sign-step drift, m0 = 0: m alternates 0 -> -inv*dtau
        # -> 0, so the clock gains dtau every second step and each stopping
        # time is (2*ceil(Gamma/dtau) - 1)*dtau
        dtau = 0.25
        horizon = 50.0
        n_steps = 200
        p = models.OneStateParams(
            drift=sde.DriftSpec(sde.SIGN_STEP, 1.0), sigma=0.0, dtau=dtau, horizon=horizon
        )
        seed = 77
        n = 5
        got = models.simulate_one_state(p, n, seed=seed)
        for i in range(n):
            rng = particle_stream(seed, i)
            rng.standard_normal(n_steps)  # normals drawn first, unused here
            thresholds = exp_thresholds(rng, n_steps + 1)
            expected = []
            step = 0
            j = 0
            while True:
                c = math.ceil(thresholds[j] / dtau)
                dur = 2 * c - 1
                if step + dur > n_steps:
                    break
                expected.append(dur * dtau)
                step += dur
                j += 1
            np.testing.assert_array_equal(
                got.samples[got.particle_ids == i], np.asarray(expected)
            )
        assert got.censored_count == n

    def test_stopping_times_at_least_dtau(self):
        p = models.OneStateParams(
            drift=sde.DriftSpec(sde.SIGN_STEP, 1.0 / 10.0),
            sigma=1.0,
            dtau=0.1,
            horizon=500.0,
        )
        s = models.simulate_one_state(p, 10, seed=8)
        assert s.samples.min() >= p.dtau * (1 - 1e-12)

    def test_timeline_conservation(self):
        p = models.OneStateParams(
            drift=sde.DriftSpec(sde.SIGN_STEP, 1.0 / 100.0),
            sigma=0.5,
            dtau=0.1,
            horizon=1000.0,
        )
        n = 9
        s = models.simulate_one_state(p, n, seed=21)
        total = math.fsum(s.samples) + math.fsum(s.censored_samples)
        assert total == pytest.approx(n * p.horizon, rel=1e-9)

    def test_ou_drift_supported(self):
        p = models.OneStateParams(
            drift=sde.DriftSpec(sde.OU, 1.0 / 50.0), sigma=0.3, dtau=0.1, horizon=500.0
        )
        s = models.simulate_one_state(p, 5, seed=4)
        assert s.samples.size > 0

    def test_determinism(self):
        p = models.OneStateParams(
            drift=sde.DriftSpec(sde.SIGN_STEP, 1.0 / 100.0),
            sigma=0.5,
            dtau=0.1,
            horizon=200.0,
        )
        a = models.simulate_one_state(p, 4, seed=1)
        b = models.simulate_one_state(p, 4, seed=1)
        np.testing.assert_array_equal(a.samples, b.samples)
        np.testing.assert_array_equal(a.particle_ids, b.particle_ids)
