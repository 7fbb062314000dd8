"""Filter-limited spectral envelopes and Hong-Ou-Mandel overlap.

Delays are in ps and bandwidths in GHz, so ``fwhm * tau`` carries a factor
of 1e-3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

LN2 = math.log(2)


@dataclass(frozen=True)
class SpectralEnvelope:
    shape: str = "rectangular"
    center_wavelength: float = 1552.5  # nm
    fwhm: float = 60.0  # GHz

    def __post_init__(self):
        if self.shape not in ("rectangular", "gaussian"):
            raise ValueError(f"unknown envelope shape {self.shape!r}")
        if not self.fwhm > 0:
            raise ValueError("fwhm must be positive")
        if not self.center_wavelength > 0:
            raise ValueError("center_wavelength must be positive")

    @property
    def first_zero(self) -> float:
        """Smallest positive delay (ps) with zero overlap; rectangular only."""
        if self.shape != "rectangular":
            raise ValueError("a gaussian overlap has no zeros")
        return 1e3 / self.fwhm


def overlap(envelope: SpectralEnvelope, tau):
    """Two-photon spectral overlap ``|FT of the intensity spectrum|^2`` at delay ``tau`` (ps)."""
    x = math.pi * envelope.fwhm * 1e-3 * np.asarray(tau, dtype=float)
    if envelope.shape == "rectangular":
        # np.sinc(y) = sin(pi y)/(pi y)
        out = np.sinc(x / math.pi) ** 2
    else:
        out = np.exp(-(x ** 2) / (2 * LN2))
    return float(out) if out.ndim == 0 else out


def hom_coincidence(tau, envelope: SpectralEnvelope, visibility_v: float):
    """Coincidence rate normalized to the distinguishable baseline."""
    if not 0 <= visibility_v <= 1:
        raise ValueError(f"visibility {visibility_v} outside [0, 1]")
    return 1 - visibility_v * overlap(envelope, tau)


def quadrature_oracle(envelope: SpectralEnvelope, tau: float, dps: int = 25) -> float:
    """Overlap by direct numerical integration of the intensity spectrum.

    Runs in extended precision: at large delays the transform is many orders
    of magnitude below the O(1) integrand it cancels from.  The gaussian is
    truncated at +-5 FWHM, where it is below 2**-100.
    """
    tau = float(tau)
    with mpmath.workdps(dps):
        dnu = mpmath.mpf(envelope.fwhm) / 1000  # cycles per ps
        w = 2j * mpmath.pi * tau
        if envelope.shape == "rectangular":
            lo, hi = -dnu / 2, dnu / 2

            def s(nu):
                return mpmath.exp(w * nu) / dnu
        else:
            lo, hi = -5 * dnu, 5 * dnu
            norm = dnu / 2 * mpmath.sqrt(mpmath.pi / mpmath.log(2))
            c = 4 * mpmath.log(2) / dnu ** 2

            def s(nu):
                return mpmath.exp(-c * nu * nu + w * nu) / norm

        # one panel per half oscillation keeps every panel smooth
        n = max(4, int(math.ceil(2 * abs(tau) * float(hi - lo))) + 2)
        amp = mpmath.quad(s, mpmath.linspace(lo, hi, n + 1), method="gauss-legendre")
        val = abs(amp) ** 2
    if not mpmath.isfinite(val):
        raise ArithmeticError("overlap quadrature did not converge")
    return float(val)
