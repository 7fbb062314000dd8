"""Least-squares calibration of the phenomenological noise model.

The three free knobs (cross-term contrast, analyzer coherence, accidental
floor) are fitted so the simulated raw visibilities of the polarization
fringes and the BSM contrast reach target values.  PDL is held fixed: it
only sets the singles modulation and is not separately identifiable.
"""

from __future__ import annotations

import math

import numpy as np

from .circuit import BellPhaseConfig, get_chip
from .detection import DetectorModel, NoiseModel, expected_rates
from .fitting import FitError, damped_gauss_newton, fit_fringe, discrimination_visibility

HWP2_GRID = np.arange(0.0, 180.0, 5.0)


def polarization_visibility(noise: NoiseModel, hwp1: float, *, pair_rate: float = 2e5,
                            detector: DetectorModel = DetectorModel(),
                            convention: str = "symmetric", alpha: float = math.pi) -> float:
    """Raw visibility of the noise-free expected coincidence fringe vs HWP2."""
    chip = get_chip(convention)
    cfg = BellPhaseConfig(alpha=alpha)
    counts = []
    for h2 in HWP2_GRID:
        det = chip.analyzer_detection(cfg, hwp1, h2, noise)
        counts.append(expected_rates(det.p_coinc, pair_rate, detector, detector, noise,
                                     (det.singles_1, det.singles_2)).coinc)
    return fit_fringe(list(zip(HWP2_GRID, counts))).raw_visibility


def bsm_visibility(noise: NoiseModel, *, pair_rate: float = 2e5,
                   detector: DetectorModel = DetectorModel(),
                   convention: str = "symmetric") -> float:
    """Contrast between the |Psi->| and |Psi+> coincidence rates at zero delay."""
    chip = get_chip(convention)
    rates = []
    for alpha in (math.pi, 0.0):
        det = chip.bsm_detection(BellPhaseConfig(alpha=alpha), 0.0, None, noise)
        rates.append(expected_rates(det.p_coinc, pair_rate, detector, detector, noise,
                                    (det.singles_1, det.singles_2)).coinc)
    return discrimination_visibility(*rates)


def fit_noise_model(targets: tuple[float, float, float], pdl: dict,
                    **kw) -> NoiseModel:
    """Fit (mu, analyzer_coherence, floor) to (V at HWP1=0, V at HWP1=22.5, BSM F)."""
    targets = np.asarray(targets, dtype=float)

    def model(p):
        mu, coh, floor = np.clip(p, 0.0, 1.0)
        noise = NoiseModel(mu, coh, pdl, floor)
        return np.array([
            polarization_visibility(noise, 0.0, **kw),
            polarization_visibility(noise, 22.5, **kw),
            bsm_visibility(noise, **kw),
        ])

    def residual(p):
        return model(p) - targets

    def jacobian(p, h=1e-6):
        r0 = residual(p)
        cols = []
        for i in range(len(p)):
            dp = np.zeros_like(p)
            dp[i] = h if p[i] + h <= 1 else -h
            cols.append((residual(p + dp) - r0) / dp[i])
        return np.column_stack(cols)

    p, _ = damped_gauss_newton(residual, jacobian, [0.9, 0.95, 0.03], step_tol=1e-9)
    if np.any(p < 0) or np.any(p > 1):
        raise FitError(f"calibration left the physical range: {p}")
    mu, coh, floor = p
    return NoiseModel(float(mu), float(coh), pdl, float(floor))
