import math

import numpy as np
import pytest

from bellchip.calibration import bsm_visibility
from bellchip.circuit import BellPhaseConfig, get_chip
from bellchip.detection import (
    DetectorModel,
    NoiseModel,
    Rates,
    expected_rates,
    modulation_histogram,
    sample_counts,
    sample_sweep,
)
from bellchip.presets import FITTED_NOISE, TPS1_LAW
from bellchip.thermal import HeaterDrive, SquareWave, phase_trajectory

LOSSLESS = DetectorModel(1.0, 0.0, 1.0)


def test_model_validation():
    with pytest.raises(ValueError):
        DetectorModel(0.0, 100.0, 1.0)
    with pytest.raises(ValueError):
        DetectorModel(0.2, -1.0, 1.0)
    with pytest.raises(ValueError):
        DetectorModel(0.2, 1.0, 0.0)
    with pytest.raises(ValueError):
        NoiseModel(mode_overlap_mu=1.1)
    with pytest.raises(ValueError):
        NoiseModel(pdl={"P5": (1.2, 1.0)})


def test_expected_rates_examples():
    r = expected_rates(0.5, 1000.0, LOSSLESS, LOSSLESS)
    assert r.coinc - r.accidentals == pytest.approx(500.0, rel=1e-12)
    assert r.accidentals == pytest.approx(1e-3)  # 1 kHz singles in a 1 ns window
    d = DetectorModel(0.2, 0.0, 1.0)
    r = expected_rates(0.5, 1e6, d, d)
    assert r.coinc - r.accidentals == pytest.approx(2e4, rel=1e-12)
    assert r.accidentals == pytest.approx(2e5 * 2e5 * 1e-9)
    d = DetectorModel(0.2, 100.0, 1.0)
    r = expected_rates(0.5, 0.0, d, d)
    assert r.accidentals == pytest.approx(1e-5, rel=1e-12)
    assert r.coinc == pytest.approx(1e-5, rel=1e-12)
    with pytest.raises(ValueError):
        expected_rates(0.5, -1.0, d, d)


@pytest.mark.parametrize("pair_rate", [1e4, 2e5, 3e6])
def test_accidentals_quadruple(pair_rate):
    d = DetectorModel(0.2, 100.0, 1.0)
    d2 = DetectorModel(0.2, 200.0, 1.0)
    a = expected_rates(0.3, pair_rate, d, d)
    b = expected_rates(0.3, 2 * pair_rate, d2, d2)
    assert b.singles_1 == pytest.approx(2 * a.singles_1)
    assert b.accidentals == pytest.approx(4 * a.accidentals, rel=1e-12)


def test_sample_counts_determinism_and_zero():
    r = Rates(5e4, 6e4, 1e3, 1.0)
    assert sample_counts(r, 1.0, 42, 3) == sample_counts(r, 1.0, 42, 3)
    assert sample_counts(r, 1.0, 42, 3) != sample_counts(r, 1.0, 43, 3)
    zero = Rates(0.0, 0.0, 0.0, 0.0)
    for s in range(20):
        rec = sample_counts(zero, 10.0, s)
        assert (rec.singles_1, rec.singles_2, rec.coincidences) == (0, 0, 0)
    with pytest.raises(ValueError):
        sample_counts(r, 0.0, 1)


def test_sample_counts_invariants():
    r = Rates(5e3, 4e3, 3e3, 1.0)
    for i in range(50):
        rec = sample_counts(r, 1.0, 7, i)
        assert 0 <= rec.coincidences <= min(rec.singles_1, rec.singles_2)


def test_sample_mean_within_5_sigma():
    r = Rates(2e4, 2e4, 1e4, 0.0)
    mean = np.mean([sample_counts(r, 1.0, 11, i).coincidences for i in range(100)])
    assert abs(mean - 1e4) <= 5 * 100  # 5 sigma of a single draw


def test_sweep_independent_of_workers():
    rates = [Rates(1e4 + i, 1e4, 300.0 + 10 * i, 0.1) for i in range(37)]
    one = sample_sweep(rates, 2.0, 99, workers=1)
    assert sample_sweep(rates, 2.0, 99, workers=4) == one
    assert sample_sweep(rates, 2.0, 99, workers=8) == one
    assert sample_sweep(rates, 2.0, 99, stream=5) != one
    # a point can be regenerated on its own
    assert sample_sweep(rates[:10], 2.0, 99)[7] == one[7]


def test_monte_carlo_bands():
    chip = get_chip("symmetric")
    d = DetectorModel()
    settings = []
    for h2 in (0.0, 20.0, 45.0):
        det = chip.analyzer_detection(BellPhaseConfig(alpha=math.pi), 0.0, h2, FITTED_NOISE)
        settings.append(expected_rates(det.p_coinc, 2e5, d, d, FITTED_NOISE,
                                       (det.singles_1, det.singles_2)))
    for k, r in enumerate(settings):
        lam = r.coinc * 2.0
        inside = sum(
            abs(sample_counts(r, 2.0, 1000 * k + s).coincidences - lam) <= 5 * math.sqrt(lam)
            for s in range(1000)
        )
        assert inside >= 990


def test_bsm_visibility_monotone_in_mu():
    mus = np.linspace(0.5, 1.0, 6)
    vis = [bsm_visibility(FITTED_NOISE.replace(mode_overlap_mu=m)) for m in mus]
    assert np.all(np.diff(vis) > 0)


def singles_vs_hwp2(noise):
    # detector 2 sits behind HWP2, so its singles follow the HWP2 angle
    chip = get_chip("symmetric")
    cfg = BellPhaseConfig(alpha=math.pi)
    return np.array([chip.analyzer_detection(cfg, 0.0, h, noise).singles_2
                     for h in np.arange(0.0, 180.0, 5.0)])


def test_pdl_singles_modulation():
    s = singles_vs_hwp2(NoiseModel(pdl={"P5": (1.0, 0.8), "P6": (0.9, 1.0)}))
    assert np.ptp(s) > 1e-3
    # period 90 degrees on a 5 degree grid
    np.testing.assert_allclose(s[:18], s[18:], atol=1e-12)
    assert not np.allclose(s[:9], s[9:18])
    flat = singles_vs_hwp2(NoiseModel(pdl={"P5": (0.9, 0.9), "P6": (0.8, 0.8)}))
    assert np.ptp(flat) <= 1e-12


def bsm_model(noise):
    chip = get_chip("symmetric")
    return lambda alpha: chip.bsm_detection(BellPhaseConfig(alpha=float(alpha) % (2 * math.pi)),
                                            0.0, None, noise)


def histogram(total_time, seed=5, n_bins=40):
    drive = HeaterDrive(SquareWave(4.0, math.sqrt(41.0), 1e3), TPS1_LAW, 10.0)
    traj = phase_trajectory(drive, 400)
    d = DetectorModel()
    return modulation_histogram(traj, bsm_model(FITTED_NOISE), d, d, FITTED_NOISE,
                                n_bins=n_bins, total_time=total_time, seed=seed)


def test_histogram_basics():
    h = histogram(600.0)
    assert h.n_bins == 40 and len(h.bin_counts) == 40
    assert np.array_equal(h.bin_counts, histogram(600.0).bin_counts)
    assert not np.array_equal(h.bin_counts, histogram(600.0, seed=6).bin_counts)
    np.testing.assert_allclose(h.t_centers[[0, -1]], [12.5, 987.5])
    # the second half sits at |Psi->, the first at |Psi+>
    assert h.bin_counts[25:].mean() > 3 * h.bin_counts[5:20].mean()


def test_histogram_zero_time_and_errors():
    h = histogram(0.0)
    assert np.all(h.bin_counts == 0)
    with pytest.raises(ValueError):
        histogram(10.0, n_bins=1)
    with pytest.raises(ValueError):
        histogram(-1.0)
