"""Fringe and dip fitting.

Both fits normalize counts by a data scale so every parameter is O(1); the
damped Gauss-Newton loop then stops on an absolute step norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

BELL_THRESHOLD = 1 / math.sqrt(2)
VIOLATION_SUPPORTED = "violation_supported"
NOT_SUPPORTED = "not_supported"


class FitError(RuntimeError):
    pass


def damped_gauss_newton(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    p0,
    max_iter: int = 200,
    step_tol: float = 1e-10,
) -> tuple[np.ndarray, int]:
    """Levenberg-style damped Gauss-Newton.  Returns (params, iterations)."""
    p = np.array(p0, dtype=float)
    r = residual(p)
    cost = r @ r
    lam = 1e-3
    for it in range(1, max_iter + 1):
        jac = jacobian(p)
        a = jac.T @ jac
        g = jac.T @ r
        diag = np.diag(a).copy()
        diag[diag == 0] = 1.0
        while True:
            try:
                step = np.linalg.solve(a + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                step = np.full_like(p, np.nan)
            if np.all(np.isfinite(step)):
                r_new = residual(p + step)
                c_new = r_new @ r_new
                if np.isfinite(c_new) and c_new <= cost:
                    break
            lam *= 10
            if lam > 1e16:
                # no downhill step left at machine precision
                return p, it
        p = p + step
        r, cost = r_new, c_new
        lam = max(lam / 10, 1e-12)
        if np.linalg.norm(step) < step_tol:
            return p, it
    raise FitError(f"no convergence after {max_iter} iterations")


@dataclass(frozen=True)
class FringeFit:
    offset: float
    amplitude: float
    phase: float
    period: float
    residual_rms: float
    extremal_visibility: float

    @property
    def frequency(self) -> float:
        return 2 * math.pi / self.period

    @property
    def raw_visibility(self) -> float:
        return self.amplitude / self.offset

    visibility = raw_visibility

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.offset + self.amplitude * np.cos(self.frequency * x + self.phase)

    def peak_positions(self, lo: float, hi: float) -> np.ndarray:
        """Sweep values in [lo, hi] where the fitted fringe is maximal."""
        w = self.frequency
        k0 = math.ceil((w * lo + self.phase) / (2 * math.pi))
        k1 = math.floor((w * hi + self.phase) / (2 * math.pi))
        return np.array([(2 * math.pi * k - self.phase) / w for k in range(k0, k1 + 1)])


def _xy(samples) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise FitError("samples must be (x, count) pairs")
    order = np.argsort(arr[:, 0], kind="stable")
    return arr[order, 0], arr[order, 1]


def _periodogram_start(x, y):
    span = x.max() - x.min()
    dx = np.diff(x)
    dx = np.median(dx[dx > 0])
    w_lo = 2 * math.pi / span * 0.75
    w_hi = math.pi / dx
    grid = np.arange(w_lo, w_hi, 2 * math.pi / span / 16)
    total = np.sum((y - y.mean()) ** 2)
    best = None
    for w in grid:
        basis = np.column_stack([np.ones_like(x), np.cos(w * x), np.sin(w * x)])
        coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
        # explained variance stays bounded where the basis is ill-conditioned
        # (sin(w x) vanishes on a uniform grid at the Nyquist frequency)
        explained = total - np.sum((y - basis @ coef) ** 2)
        if best is None or explained > best[0]:
            best = (explained, w, coef)
    return best


def fit_fringe(samples: Sequence[tuple[float, float]]) -> FringeFit:
    """Fit ``C(x) = offset * (1 + v cos(w x + phi))``.

    Parametrized internally as ``a + b cos(w x) + c sin(w x)``, which is
    linear except in ``w``.
    """
    x, y = _xy(samples)
    if len(x) < 8:
        raise FitError(f"need at least 8 samples, got {len(x)}")
    if x.max() == x.min():
        raise FitError("sweep variable does not vary")
    scale = np.mean(np.abs(y))
    if scale == 0 or np.ptp(y) <= 1e-12 * scale:
        raise FitError("no fringe: data are constant")
    yn = y / scale
    explained, w0, coef = _periodogram_start(x, yn)
    if not explained > 0.5 * np.sum((yn - yn.mean()) ** 2):
        raise FitError("no dominant Fourier component")

    def model_parts(p):
        a, b, c, w = p
        cw, sw = np.cos(w * x), np.sin(w * x)
        return a + b * cw + c * sw, cw, sw

    def residual(p):
        return model_parts(p)[0] - yn

    def jacobian(p):
        a, b, c, w = p
        _, cw, sw = model_parts(p)
        return np.column_stack([np.ones_like(x), cw, sw, x * (c * cw - b * sw)])

    p, _ = damped_gauss_newton(residual, jacobian, [coef[0], coef[1], coef[2], w0])
    a, b, c, w = p
    if w < 0:
        w, c = -w, -c
    amp = math.hypot(b, c)
    phase = math.atan2(-c, b)
    rms = float(np.sqrt(np.mean(residual(p) ** 2))) * scale
    ext = (y.max() - y.min()) / (y.max() + y.min()) if y.max() + y.min() > 0 else float("nan")
    return FringeFit(
        offset=float(a * scale), amplitude=float(amp * scale), phase=phase,
        period=float(2 * math.pi / w), residual_rms=rms, extremal_visibility=float(ext),
    )


@dataclass(frozen=True)
class HomFit:
    baseline: float
    visibility: float
    bandwidth: float  # GHz
    delay_offset: float  # ps
    residual_rms: float

    def __call__(self, tau):
        u = math.pi * self.bandwidth * 1e-3 * (np.asarray(tau, dtype=float) - self.delay_offset)
        return self.baseline * (1 - self.visibility * np.sinc(u / math.pi) ** 2)


def _sinc2_and_slope(u):
    s = np.sinc(u / math.pi)
    small = np.abs(u) < 1e-4
    safe = np.where(small, 1.0, u)
    ds = np.where(small, -2 * u / 3, (np.cos(safe) - s) / safe)  # d sinc / du
    return s ** 2, 2 * s * ds


def fit_hom(samples: Sequence[tuple[float, float]]) -> HomFit:
    """Fit ``C(tau) = baseline * (1 - V sinc^2(pi dnu (tau - tau0)))``."""
    tau, y = _xy(samples)
    if len(tau) < 5:
        raise FitError(f"need at least 5 samples, got {len(tau)}")
    scale = np.max(np.abs(y))
    if scale == 0 or np.ptp(y) <= 1e-12 * scale:
        raise FitError("dip not found: data are flat")
    yn = y / scale
    n_edge = max(1, len(tau) // 8)
    b0 = 0.5 * (np.mean(yn[:n_edge]) + np.mean(yn[-n_edge:]))
    i_min = int(np.argmin(yn))
    v0 = 1 - yn[i_min] / b0
    if v0 <= 0 or i_min in (0, len(tau) - 1):
        raise FitError("dip not found")
    t0 = tau[i_min]
    half = b0 * (1 - v0 / 2)
    lo = hi = i_min
    while lo > 0 and yn[lo - 1] < half:
        lo -= 1
    while hi < len(tau) - 1 and yn[hi + 1] < half:
        hi += 1
    width = tau[hi] - tau[lo] + np.median(np.diff(tau))
    dnu0 = 2 * 1.39156 / (math.pi * width * 1e-3)
    k = math.pi * 1e-3

    def residual(p):
        b, v, dnu, t = p
        s2, _ = _sinc2_and_slope(k * dnu * (tau - t))
        return b * (1 - v * s2) - yn

    def jacobian(p):
        b, v, dnu, t = p
        d = tau - t
        s2, ds2 = _sinc2_and_slope(k * dnu * d)
        return np.column_stack([1 - v * s2, -b * s2, -b * v * ds2 * k * d, b * v * ds2 * k * dnu])

    p, _ = damped_gauss_newton(residual, jacobian, [b0, v0, dnu0, t0])
    b, v, dnu, t = p
    dnu = abs(dnu)
    if not v > 0:
        raise FitError(f"dip not found: fitted visibility {v:.4g} <= 0")
    if not tau[0] <= t <= tau[-1]:
        raise FitError("fitted dip centre lies outside the delay range")
    if tau[0] > t - 1e3 / dnu or tau[-1] < t + 1e3 / dnu:
        raise FitError("delay range does not extend past the dip on both sides")
    rms = float(np.sqrt(np.mean(residual(p) ** 2))) * scale
    return HomFit(float(b * scale), float(v), float(dnu), float(t), rms)


def discrimination_visibility(c_max: float, c_min: float) -> float:
    """Discrimination contrast ``(C_max - C_min) / (C_max + C_min)``."""
    if c_max < 0 or c_min < 0:
        raise ValueError("counts must be non-negative")
    if c_max + c_min == 0:
        raise ValueError("both counts are zero")
    if c_max < c_min:
        raise ValueError("c_max must be >= c_min")
    return (c_max - c_min) / (c_max + c_min)


def bell_criterion(visibility: float) -> str:
    if not 0 <= visibility <= 1:
        raise ValueError(f"visibility {visibility} outside [0, 1]")
    return VIOLATION_SUPPORTED if visibility > BELL_THRESHOLD else NOT_SUPPORTED
