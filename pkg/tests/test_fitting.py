import math

import numpy as np
import pytest

from bellchip.fitting import (
    BELL_THRESHOLD,
    NOT_SUPPORTED,
    VIOLATION_SUPPORTED,
    FitError,
    bell_criterion,
    discrimination_visibility,
    fit_fringe,
    fit_hom,
)
from bellchip.spectral import SpectralEnvelope, overlap


def fringe_samples(v, phi, w, offset=3000.0, n=60, span=None):
    span = span or 2.5 * 2 * math.pi / w
    x = np.linspace(0.0, span, n)
    return x, offset * (1 + v * np.cos(w * x + phi))


def test_fringe_round_trip_reference():
    x, y = fringe_samples(0.895, 0.7, 2 * math.pi / 90.0)
    fit = fit_fringe(list(zip(x, y)))
    assert fit.raw_visibility == pytest.approx(0.895, abs=1e-6)
    assert fit.period == pytest.approx(90.0, rel=1e-6)
    assert fit.residual_rms < 1e-6
    assert fit.amplitude >= 0


def test_fringe_round_trip_random():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        v = rng.uniform(0.05, 1.0)
        phi = rng.uniform(-math.pi, math.pi)
        w = rng.uniform(0.2, 3.0)
        periods = rng.uniform(1.2, 6.0)
        x, y = fringe_samples(v, phi, w, offset=rng.uniform(10, 1e5), n=int(rng.integers(40, 120)),
                              span=periods * 2 * math.pi / w)
        fit = fit_fringe(list(zip(x, y)))
        assert abs(fit.raw_visibility - v) <= 1e-6


def test_fringe_poisson():
    rng = np.random.default_rng(9)
    x, y = fringe_samples(0.895, 0.3, 2 * math.pi / 90.0, offset=5000.0, n=36)
    for _ in range(20):
        fit = fit_fringe(list(zip(x, rng.poisson(y))))
        assert abs(fit.raw_visibility - 0.895) <= 0.02


def test_fringe_errors():
    x = np.linspace(0, 10, 20)
    with pytest.raises(FitError):
        fit_fringe(list(zip(x, np.full(20, 50.0))))
    with pytest.raises(FitError):
        fit_fringe([(0.0, 1.0), (1.0, 2.0)])
    with pytest.raises(FitError):
        fit_fringe([(1.0, float(k)) for k in range(10)])


def test_fringe_peak_positions():
    x, y = fringe_samples(0.9, -1.0, 2 * math.pi / 10.0)
    fit = fit_fringe(list(zip(x, y)))
    peaks = fit.peak_positions(0.0, 25.0)
    np.testing.assert_allclose(peaks, [1.0 / (2 * math.pi / 10.0) + 10 * k for k in range(3)],
                               atol=1e-6)


def hom_samples(v, dnu, t0=0.0, base=4000.0):
    tau = np.arange(-80.0, 80.5, 1.0)
    u = math.pi * dnu * 1e-3 * (tau - t0)
    return tau, base * (1 - v * np.sinc(u / math.pi) ** 2)


def test_hom_round_trip():
    tau, y = hom_samples(0.910, 60.0, t0=1.3)
    fit = fit_hom(list(zip(tau, y)))
    assert fit.visibility == pytest.approx(0.910, abs=1e-6)
    assert fit.bandwidth == pytest.approx(60.0, abs=1e-6)
    assert fit.delay_offset == pytest.approx(1.3, abs=1e-6)
    assert fit.baseline == pytest.approx(4000.0, rel=1e-9)


def test_hom_poisson():
    rng = np.random.default_rng(77)
    tau, y = hom_samples(0.939, 60.0)
    for _ in range(20):
        fit = fit_hom(list(zip(tau, rng.poisson(y))))
        assert abs(fit.visibility - 0.939) <= 0.02


def test_hom_errors():
    tau = np.arange(-50.0, 51.0, 2.0)
    with pytest.raises(FitError):
        fit_hom(list(zip(tau, np.full(len(tau), 300.0))))
    # a peak instead of a dip
    _, y = hom_samples(0.9, 60.0)
    with pytest.raises(FitError):
        fit_hom(list(zip(np.arange(-80.0, 80.5, 1.0), 8000.0 - y)))


def test_hom_model_mismatch_detectable():
    tau = np.arange(-80.0, 80.5, 1.0)
    gauss = SpectralEnvelope("gaussian", 1552.4934, 60.0)
    rect = SpectralEnvelope("rectangular", 1552.4934, 60.0)
    y_g = 4000.0 * (1 - 0.9 * np.array([overlap(gauss, t) for t in tau]))
    y_r = 4000.0 * (1 - 0.9 * np.array([overlap(rect, t) for t in tau]))
    mismatched = fit_hom(list(zip(tau, y_g)))
    matched = fit_hom(list(zip(tau, y_r)))
    assert mismatched.residual_rms > matched.residual_rms
    assert mismatched.residual_rms > 1.0


def test_discrimination_visibility():
    assert discrimination_visibility(1000, 0) == 1.0
    assert discrimination_visibility(123, 123) == 0.0
    assert discrimination_visibility(936, 64) == pytest.approx(0.872)
    for k in (0.5, 3.0, 17.0, 1e6):
        assert discrimination_visibility(k * 936, k * 64) == discrimination_visibility(936, 64)
    with pytest.raises(ValueError):
        discrimination_visibility(0, 0)
    with pytest.raises(ValueError):
        discrimination_visibility(5, 10)


def test_bell_criterion():
    assert BELL_THRESHOLD == pytest.approx(0.70711, abs=1e-5)
    assert bell_criterion(0.895) == VIOLATION_SUPPORTED
    assert bell_criterion(0.777) == VIOLATION_SUPPORTED
    assert bell_criterion(0.70) == NOT_SUPPORTED
    assert bell_criterion(BELL_THRESHOLD) == NOT_SUPPORTED
    with pytest.raises(ValueError):
        bell_criterion(1.2)
