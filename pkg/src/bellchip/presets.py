"""Reference values and calibrated defaults.

Measured raw visibilities are the calibration targets; the noise model
below is the least-squares solution for them (see
:func:`bellchip.calibration.fit_noise_model`).  Absolute rates are not
measured quantities and are chosen for statistics only.
"""

import math

from .detection import DetectorModel, NoiseModel
from .spectral import SpectralEnvelope
from .thermal import PhaseVoltageLaw

PUMP_1_NM = 1555.7
PUMP_2_NM = 1549.3
FILTER_CENTER_NM = 1552.4934  # degenerate wavelength of the two pumps
FILTER_FWHM_GHZ = 60.0

HOM_VISIBILITY_W12 = 0.910
HOM_VISIBILITY_W34 = 0.939
POLARIZATION_VISIBILITY_HV = 0.895  # HWP1 at 0 deg
POLARIZATION_VISIBILITY_DIAG = 0.777  # HWP1 at 22.5 deg
BSM_VISIBILITY = 0.872

SPLIT_VOLTAGE = 7.47  # TPS2 voltage of the coincidence maximum
MODULATION_RATES_HZ = (1e3, 20e3)
MODULATION_TIMES_S = (600.0, 1200.0)
HISTOGRAM_BINS = 40

DETECTOR = DetectorModel(efficiency=0.2, dark_rate=100.0, coincidence_window=1.0)
ENVELOPE = SpectralEnvelope("rectangular", FILTER_CENTER_NM, FILTER_FWHM_GHZ)

PAIR_RATE_HZ = 2e5
TAU_THERMAL_US = 10.0

# one fringe period per 50 V^2 on each heater
KAPPA = 2 * math.pi / 50
TPS2_LAW = PhaseVoltageLaw.with_zero_at(SPLIT_VOLTAGE, KAPPA)
TPS1_LAW = PhaseVoltageLaw.with_zero_at(4.0, KAPPA)  # |Psi+> at 4.0 V

PDL = {"P5": (1.0, 0.92), "P6": (0.94, 1.0)}

FITTED_NOISE = NoiseModel(
    mode_overlap_mu=0.929551558071,
    analyzer_coherence=0.940299550258,
    pdl=PDL,
    accidental_floor=0.029286300008,
)
