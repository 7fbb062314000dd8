"""Heater voltage to optical phase, with a single-pole thermal lag.

Time is in microseconds throughout this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class PhaseVoltageLaw:
    phi0: float  # rad at 0 V
    kappa: float  # rad / V^2

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")

    @classmethod
    def with_zero_at(cls, voltage: float, kappa: float, target: float = 0.0) -> PhaseVoltageLaw:
        """Law whose phase at ``voltage`` is ``target`` modulo 2 pi."""
        return cls((target - kappa * voltage ** 2) % TWO_PI, kappa)

    def voltage_for(self, phase: float, v_min: float = 0.0) -> float:
        """Smallest voltage >= ``v_min`` reaching ``phase`` modulo 2 pi."""
        p_min = self.phi0 + self.kappa * v_min ** 2
        dp = (phase - p_min) % TWO_PI
        return math.sqrt(v_min ** 2 + dp / self.kappa)


def phase_of_voltage(law: PhaseVoltageLaw, v):
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("heater voltage must be non-negative")
    out = law.phi0 + law.kappa * v ** 2
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LawFit:
    law: PhaseVoltageLaw
    offset: float
    amplitude: float
    residual_rms: float


def calibrate_law(fringe_samples: Sequence[tuple[float, float]]) -> LawFit:
    """Fit ``C(v) = a + b cos(phi0 + kappa v^2)`` to a heater sweep."""
    from .fitting import FitError, fit_fringe

    samples = [(float(v), float(c)) for v, c in fringe_samples]
    if len(samples) < 6:
        raise FitError(f"need at least 6 samples, got {len(samples)}")
    v = np.array([s[0] for s in samples])
    x = v ** 2
    fit = fit_fringe(list(zip(x, (s[1] for s in samples))))
    if fit.frequency * (x.max() - x.min()) < TWO_PI:
        raise FitError("sweep spans less than one fringe period in V^2")
    law = PhaseVoltageLaw(fit.phase % TWO_PI, fit.frequency)
    return LawFit(law, fit.offset, fit.offset * fit.visibility, fit.residual_rms)


@dataclass(frozen=True)
class SquareWave:
    v_low: float
    v_high: float
    rate: float  # Hz

    def __post_init__(self):
        if self.v_low < 0 or self.v_high < 0:
            raise ValueError("voltages must be non-negative")
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    @property
    def period_us(self) -> float:
        return 1e6 / self.rate


@dataclass(frozen=True)
class HeaterDrive:
    """Constant voltage (``waveform`` a float) or a 50 % duty square wave.

    A square wave sits at ``v_low`` for the first half period.
    """

    waveform: float | SquareWave
    law: PhaseVoltageLaw
    tau_thermal: float = 10.0  # us

    def __post_init__(self):
        if not self.tau_thermal > 0:
            raise ValueError("tau_thermal must be positive")
        if not isinstance(self.waveform, SquareWave) and self.waveform < 0:
            raise ValueError("voltage must be non-negative")


@dataclass(frozen=True)
class PhaseTrajectory:
    """Steady-state phase over one drive period.

    ``times``/``phases`` are the stored samples; :meth:`phase_at` evaluates
    the closed form anywhere.
    """

    times: np.ndarray
    phases: np.ndarray
    period: float
    phi0: float
    kappa: float
    p_low: float
    p_high: float
    p_start: float
    tau_thermal: float

    def lagged_power(self, t) -> np.ndarray:
        t = np.mod(np.asarray(t, dtype=float), self.period)
        half = self.period / 2
        p_mid = self.p_low + (self.p_start - self.p_low) * math.exp(-half / self.tau_thermal)
        first = t < half
        out = np.where(
            first,
            self.p_low + (self.p_start - self.p_low) * np.exp(-t / self.tau_thermal),
            self.p_high + (p_mid - self.p_high) * np.exp(-np.maximum(t - half, 0.0) / self.tau_thermal),
        )
        return out

    def phase_at(self, t):
        out = self.phi0 + self.kappa * self.lagged_power(t)
        return float(out) if np.ndim(out) == 0 else out

    def __len__(self):
        return len(self.times)


def phase_trajectory(drive: HeaterDrive, samples_per_period: int) -> PhaseTrajectory:
    """Periodic steady state of the lag-filtered heater power.

    With ``r = exp(-T / (2 tau))`` the power at the start of the low half is
    ``(P_high + r P_low) / (1 + r)``, which closes the cycle exactly.
    """
    if samples_per_period < 2:
        raise ValueError("samples_per_period must be >= 2")
    wf = drive.waveform
    if isinstance(wf, SquareWave):
        period = wf.period_us
        p_low, p_high = wf.v_low ** 2, wf.v_high ** 2
    else:
        # constant drive: any period works, use 1 ms
        period = 1000.0
        p_low = p_high = float(wf) ** 2
    r = math.exp(-period / (2 * drive.tau_thermal))
    p_start = (p_high + r * p_low) / (1 + r)
    traj = PhaseTrajectory(
        times=np.empty(0), phases=np.empty(0), period=period,
        phi0=drive.law.phi0, kappa=drive.law.kappa,
        p_low=p_low, p_high=p_high, p_start=p_start, tau_thermal=drive.tau_thermal,
    )
    times = np.arange(samples_per_period) * (period / samples_per_period)
    object.__setattr__(traj, "times", times)
    object.__setattr__(traj, "phases", traj.phase_at(times))
    return traj


def instantaneous_phase(drive: HeaterDrive, t) -> np.ndarray:
    """Phase with no thermal lag, for comparison."""
    wf = drive.waveform
    if not isinstance(wf, SquareWave):
        return np.full(np.shape(t), phase_of_voltage(drive.law, wf))
    t = np.mod(np.asarray(t, dtype=float), wf.period_us)
    v = np.where(t < wf.period_us / 2, wf.v_low, wf.v_high)
    return phase_of_voltage(drive.law, v)
