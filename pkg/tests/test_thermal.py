import math

import numpy as np
import pytest

from bellchip.fitting import FitError
from bellchip.thermal import (
    HeaterDrive,
    PhaseVoltageLaw,
    SquareWave,
    calibrate_law,
    instantaneous_phase,
    phase_of_voltage,
    phase_trajectory,
)

TWO_PI = 2 * math.pi


def wrap(x):
    return math.remainder(x, TWO_PI)


def test_phase_of_voltage_examples():
    law = PhaseVoltageLaw(0.0, 0.1)
    assert phase_of_voltage(law, 3.0) == pytest.approx(0.9)
    assert phase_of_voltage(PhaseVoltageLaw(1.3, 0.1), 0.0) == 1.3
    with pytest.raises(ValueError):
        phase_of_voltage(law, -0.1)
    with pytest.raises(ValueError):
        PhaseVoltageLaw(0.0, 0.0)


def test_split_voltage_law():
    law = PhaseVoltageLaw.with_zero_at(7.47, 2 * math.pi / 50)
    assert wrap(phase_of_voltage(law, 7.47)) == pytest.approx(0.0, abs=1e-12)
    assert law.voltage_for(0.0, 5.0) == pytest.approx(7.47, abs=1e-12)


def fringe(phi0, kappa, volts, a=1000.0, b=800.0):
    return a + b * np.cos(phi0 + kappa * volts ** 2)


def test_calibrate_round_trip():
    v = np.linspace(0, 12, 50)
    fit = calibrate_law(list(zip(v, fringe(1.0, 0.07, v))))
    assert fit.law.kappa == pytest.approx(0.07, abs=1e-6)
    assert wrap(fit.law.phi0 - 1.0) == pytest.approx(0.0, abs=1e-6)
    assert fit.residual_rms < 1e-6


def test_calibrate_with_poisson_noise():
    v = np.linspace(0, 12, 50)
    rng = np.random.default_rng(3)
    # ~2 % relative noise at the mean level
    counts = rng.poisson(fringe(1.0, 0.07, v, 2500.0, 2000.0))
    fit = calibrate_law(list(zip(v, counts)))
    assert fit.law.kappa == pytest.approx(0.07, rel=0.02)
    assert abs(wrap(fit.law.phi0 - 1.0)) <= 0.02


def test_calibrate_errors():
    with pytest.raises(FitError):
        calibrate_law([(0, 1), (1, 2), (2, 3)])
    v = np.linspace(0, 12, 50)
    with pytest.raises(FitError):
        calibrate_law(list(zip(v, np.full(50, 100.0))))
    v = np.linspace(0, 2, 50)  # v^2 spans 4, far less than one period
    with pytest.raises(FitError):
        calibrate_law(list(zip(v, fringe(1.0, 0.07, v))))


LAW = PhaseVoltageLaw.with_zero_at(4.0, 2 * math.pi / 50)


def drive(rate, tau=10.0):
    return HeaterDrive(SquareWave(4.0, math.sqrt(41.0), rate), LAW, tau)


def test_drive_validation():
    with pytest.raises(ValueError):
        SquareWave(-1.0, 2.0, 1e3)
    with pytest.raises(ValueError):
        SquareWave(1.0, 2.0, 0.0)
    with pytest.raises(ValueError):
        HeaterDrive(1.0, LAW, 0.0)
    with pytest.raises(ValueError):
        phase_trajectory(drive(1e3), 1)


def test_settled_at_1khz():
    tr = phase_trajectory(drive(1e3), 2000)
    swing = LAW.kappa * (41.0 - 16.0)
    end_low = tr.phase_at(500.0 - 1e-9)
    end_high = tr.phase_at(1000.0 - 1e-9)
    assert abs(end_low - phase_of_voltage(LAW, 4.0)) <= swing * math.exp(-50) * 1.01
    assert abs(end_high - phase_of_voltage(LAW, math.sqrt(41))) <= swing * math.exp(-50) * 1.01


def test_transient_at_20khz():
    tr = phase_trajectory(drive(20e3), 2000)
    swing = LAW.kappa * 25.0
    # the distance to the target at the end of a half period, relative to
    # the distance at the start of that half period
    lo, hi = phase_of_voltage(LAW, 4.0), phase_of_voltage(LAW, math.sqrt(41))
    start = tr.phase_at(0.0)
    end = tr.phase_at(25.0 - 1e-12)
    assert (end - lo) / (start - lo) == pytest.approx(math.exp(-2.5), rel=1e-9)
    assert 0.0 < (end - lo) / swing < 0.0821


@pytest.mark.parametrize("rate", [1e3, 20e3, 77e3])
def test_continuity_periodicity_monotone(rate):
    tr = phase_trajectory(drive(rate), 4000)
    T = tr.period
    assert abs(tr.phase_at(0.0) - tr.phase_at(T - 1e-12)) <= 1e-9
    for edge in (0.0, T / 2):
        assert abs(tr.phase_at(edge + 1e-12) - tr.phase_at(edge - 1e-12)) <= 1e-9
    lo, hi = phase_of_voltage(LAW, 4.0), phase_of_voltage(LAW, math.sqrt(41))
    t1 = np.linspace(0, T / 2, 500, endpoint=False)
    t2 = np.linspace(T / 2, T, 500, endpoint=False)
    # non-increasing distance to the target; exactly settled samples tie
    assert np.all(np.diff(np.abs(tr.phase_at(t1) - lo)) <= 1e-15)
    assert np.all(np.diff(np.abs(tr.phase_at(t2) - hi)) <= 1e-15)


def test_samples():
    tr = phase_trajectory(drive(1e3), 16)
    assert len(tr) == 16
    assert np.all(np.diff(tr.times) > 0)
    np.testing.assert_allclose(tr.phases, tr.phase_at(tr.times))


def test_fast_limit_matches_instantaneous():
    d = drive(1e3, tau=1e-3)  # 1 ns
    tr = phase_trajectory(d, 100)
    t = np.linspace(0, 1000, 997)
    away = np.minimum(np.abs(t - 500), np.minimum(t, 1000 - t)) > 0.1
    np.testing.assert_allclose(tr.phase_at(t[away]), instantaneous_phase(d, t[away]), atol=1e-6)


def test_constant_drive():
    d = HeaterDrive(3.0, LAW, 10.0)
    tr = phase_trajectory(d, 10)
    np.testing.assert_allclose(tr.phases, phase_of_voltage(LAW, 3.0), atol=1e-12)
