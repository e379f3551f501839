#!/usr/bin/env python3
"""Tests for exponent extraction and regime classification."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from runtumble import scaling
from runtumble.ibm import EnsembleRecord, IbmParams
from runtumble.models import RUN_TIME, DurationSamples, OneStateParams
from runtumble.scaling import (
    CROSSOVER_LONG_ROWS,
    CROSSOVER_LONG_WINDOW,
    CROSSOVER_SHORT_ROWS,
    CROSSOVER_SHORT_WINDOW,
    REGIME_BALLISTIC,
    REGIME_DIFFUSIVE,
    REGIME_UNDETERMINED,
    ClassifyTolerances,
    ScalingWindow,
    build_report,
    characteristic_length,
    classify_regime,
    extract_mu_eps,
    gamma_of,
    report_from_lengths,
    report_row,
    report_to_dict,
)


def make_record(times, snapshots, initial=None):
    snapshots = np.asarray(snapshots, dtype=float)
    n = snapshots.shape[1]
    if initial is None:
        initial = np.zeros((n, snapshots.shape[2]))
    params = IbmParams(
        internal=OneStateParams(dtau=1.0, horizon=float(times[-1])),
        n_particles=n,
        observation_times=tuple(times),
    )
    runs = DurationSamples(
        kind=RUN_TIME,
        samples=np.ones(n),
        horizon=float(times[-1]),
        n_particles=n,
        censored_count=0,
    )
    return EnsembleRecord(
        params=params,
        observation_times=np.asarray(times, dtype=float),
        snapshots=snapshots,
        initial_positions=np.asarray(initial, dtype=float),
        run_times=runs,
        firing_count=n,
    )


# ------------------------------------------------------------- window


def test_window_validation():
    w = ScalingWindow(1e2, 6e2, 1e3)
    assert w.t_t1 == 500.0 and w.t_t2 == 900.0 and w.t_lambda == 1.0
    with pytest.raises(ValueError):
        ScalingWindow(10.0, 5.0, 20.0)
    with pytest.raises(ValueError):
        ScalingWindow(1.0, 2.0, 2.0)
    with pytest.raises(ValueError):
        ScalingWindow(1.0, 2.0, 3.0, t_lambda=0.0)


# ------------------------------------------- characteristic lengths


def test_length_pure_transport():
    v0 = 0.25
    times = [100.0, 600.0, 1000.0]
    signs = np.array([1.0, -1.0, 1.0, -1.0])
    snaps = np.stack([v0 * t * signs[:, None] for t in times])
    rec = make_record(times, snaps)
    assert characteristic_length(rec, 100.0, 600.0) == pytest.approx(v0 * 500.0, rel=1e-15)
    assert characteristic_length(rec, 100.0, 1000.0) == pytest.approx(v0 * 900.0, rel=1e-15)


def test_length_two_particles_displaced():
    times = [1.0, 2.0]
    snaps = np.array([[[0.0], [0.0]], [[3.0], [-3.0]]])
    rec = make_record(times, snaps)
    assert characteristic_length(rec, 1.0, 2.0) == pytest.approx(3.0, rel=1e-15)


def test_length_brownian_matches_variance():
    rng = np.random.default_rng(7)
    n, diffusion, dt = 4000, 1.7, 9.0
    start = rng.normal(0.0, 1.0, size=(n, 1))
    end = start + rng.normal(0.0, math.sqrt(2.0 * diffusion * dt), size=(n, 1))
    rec = make_record([1.0, 10.0], np.stack([start, end]))
    expected = math.sqrt(2.0 * diffusion * dt)
    assert characteristic_length(rec, 1.0, 10.0) == pytest.approx(expected, rel=0.03)


def test_length_missing_time_errors():
    rec = make_record([1.0, 2.0], np.zeros((2, 3, 1)))
    with pytest.raises(ValueError):
        characteristic_length(rec, 1.0, 5.0)


def test_length_from_time_zero_uses_initial_positions():
    initial = np.array([[1.0], [-1.0]])
    snaps = np.array([[[4.0], [-4.0]]])
    rec = make_record([2.0], snaps, initial=initial)
    assert characteristic_length(rec, 0.0, 2.0) == pytest.approx(3.0, rel=1e-15)


# ----------------------------------------------------- extract_mu_eps


def test_extract_reference_row_small_memory():
    mu, eps1, eps2 = extract_mu_eps(6.33e-1, 8.63e-1, 500.0, 900.0, 1.0)
    assert 1.0 + mu == pytest.approx(1.90, rel=0.02)
    assert eps1 == pytest.approx(3.6e-2, rel=0.06)
    assert eps2 == pytest.approx(2.77e-2, rel=0.06)


def test_extract_reference_row_large_memory():
    mu, eps1, _ = extract_mu_eps(6.91, 1.21e1, 500.0, 900.0)
    assert 1.0 + mu == pytest.approx(1.05, rel=0.01)
    assert eps1 == pytest.approx(2.7e-3, rel=0.02)


def test_extract_exact_ballistic_inputs():
    # L proportional to T_t with an exactly representable V0 gives mu = 0 bitwise
    v0 = 0.25
    mu, eps1, eps2 = extract_mu_eps(v0 * 500.0, v0 * 900.0, 500.0, 900.0)
    assert mu == 0.0
    assert eps1 == pytest.approx(1.0 / 500.0, rel=1e-15)
    assert eps2 == pytest.approx(1.0 / 900.0, rel=1e-15)
    # non-representable speeds stay at roundoff
    mu, _, _ = extract_mu_eps(0.02 * 500.0, 0.02 * 900.0, 500.0, 900.0)
    assert abs(mu) < 1e-12


def test_extract_validation():
    with pytest.raises(ValueError):
        extract_mu_eps(1.0, 1.0, 500.0, 900.0)
    with pytest.raises(ValueError):
        extract_mu_eps(2.0, 1.0, 500.0, 900.0)
    with pytest.raises(ValueError):
        extract_mu_eps(1.0, 2.0, 900.0, 500.0)


@given(
    l1=st.floats(1e-3, 1e3),
    ratio=st.floats(1.1, 50.0),
    t1=st.floats(1e-2, 1e4),
    tr=st.floats(1.1, 50.0),
    c=st.floats(1e-3, 1e3),
)
def test_extract_invariant_under_power_law_rescaling(l1, ratio, t1, tr, c):
    l2, t2 = l1 * ratio, t1 * tr
    mu, _, _ = extract_mu_eps(l1, l2, t1, t2)
    mu_scaled, _, _ = extract_mu_eps(c * l1, c * l2, t1 * c ** (1.0 + mu), t2 * c ** (1.0 + mu))
    assert mu_scaled == pytest.approx(mu, abs=1e-9)


# ------------------------------------------------------------ gamma_of


def test_gamma_reference_value():
    assert gamma_of(3.6e-2, 1.0, 1e-2) == pytest.approx(-1.39, rel=0.01)


def test_gamma_special_cases():
    assert gamma_of(0.1, 1.0, 1.0) == 0.0
    assert gamma_of(0.77, 1.0, math.inf) == math.inf
    for bad in (0.0, 1.0, 1.5, -0.2):
        with pytest.raises(ValueError):
            gamma_of(bad, 1.0, 10.0)


@given(
    eps=st.floats(1e-6, 0.99),
    t_m_lo=st.floats(1e-3, 1e3),
    factor=st.floats(1.01, 1e3),
)
def test_gamma_monotone_increasing_in_memory_time(eps, t_m_lo, factor):
    # gamma = ln(T_L/T_m)/ln(eps) grows with T_m when eps < 1
    assert gamma_of(eps, 1.0, t_m_lo * factor) > gamma_of(eps, 1.0, t_m_lo)


# ------------------------------------------------------------ classify


def test_classify_examples():
    assert classify_regime(0.05, math.inf) == REGIME_BALLISTIC
    assert classify_regime(0.90, -1.39) == REGIME_DIFFUSIVE
    assert classify_regime(0.61, 0.60) == REGIME_UNDETERMINED


def test_classify_custom_tolerances():
    tol = ClassifyTolerances(delta_gamma=0.0, delta_mu=0.7)
    assert classify_regime(0.61, 0.60, tol) == REGIME_BALLISTIC
    with pytest.raises(ValueError):
        ClassifyTolerances(delta_gamma=0.5)
    with pytest.raises(ValueError):
        classify_regime(math.nan, 1.0)


@pytest.mark.parametrize("rows,window", [
    (CROSSOVER_SHORT_ROWS, CROSSOVER_SHORT_WINDOW),
    (CROSSOVER_LONG_ROWS, CROSSOVER_LONG_WINDOW),
])
def test_classify_matches_reference_labels(rows, window):
    for row in rows:
        mu = row["one_plus_mu"] - 1.0
        got1 = classify_regime(mu, row["gamma1"])
        got2 = classify_regime(mu, row["gamma2"])
        if row["regime"] is None:
            assert got1 == REGIME_UNDETERMINED and got2 == REGIME_UNDETERMINED
        else:
            assert got1 == row["regime"]
            assert got2 == row["regime"]


# -------------------------------------------------- report end to end


@pytest.mark.parametrize("rows,window", [
    (CROSSOVER_SHORT_ROWS, CROSSOVER_SHORT_WINDOW),
    (CROSSOVER_LONG_ROWS, CROSSOVER_LONG_WINDOW),
])
def test_reference_table_regression(rows, window):
    for row in rows:
        report = report_from_lengths(row["l1"], row["l2"], window, row["t_m"])
        assert report.one_plus_mu == pytest.approx(row["one_plus_mu"], rel=0.02)
        assert report.eps1 == pytest.approx(row["eps1"], rel=0.12)
        assert report.eps2 == pytest.approx(row["eps2"], rel=0.12)
        for got, want in ((report.gamma1, row["gamma1"]), (report.gamma2, row["gamma2"])):
            if math.isinf(want):
                assert math.isinf(got)
            elif want == 0.0:
                assert got == 0.0
            else:
                assert got == pytest.approx(want, rel=0.03)
        if row["regime"] is not None:
            assert report.regime == row["regime"]


def test_build_report_on_transport_ensemble():
    v0 = 0.25
    window = ScalingWindow(1e2, 6e2, 1e3)
    times = [1e2, 6e2, 1e3]
    signs = np.array([1.0, -1.0])
    snaps = np.stack([v0 * t * signs[:, None] for t in times])
    rec = make_record(times, snaps)
    report = build_report(rec, window, math.inf)
    assert report.mu == 0.0
    assert report.regime == REGIME_BALLISTIC
    assert math.isinf(report.gamma1) and math.isinf(report.gamma2)


def test_report_serialization():
    window = ScalingWindow(1e2, 6e2, 1e3)
    report = report_from_lengths(6.87, 1.22e1, window, math.inf)
    d = report_to_dict(report, t_m=math.inf)
    assert d["T_m"] == "inf"
    assert d["gamma1"] == "inf"
    assert d["regime"] == REGIME_BALLISTIC
    assert isinstance(d["L1"], float)
    row = report_row(math.inf, report)
    assert len(row) == len(scaling.REPORT_COLUMNS)
    assert row[0] == "inf" and row[-1] == REGIME_BALLISTIC
