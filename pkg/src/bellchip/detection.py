"""Detector models, phenomenological noise and seeded photon counting.

Every random draw comes from a Philox stream keyed by ``(seed, index)``,
so each measurement point can be regenerated on its own and results do not
depend on evaluation order or worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .state import FIBER, MixedTwoPhotonState, ModeRegistry

U64 = (1 << 64) - 1


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 0.2
    dark_rate: float = 100.0  # Hz
    coincidence_window: float = 1.0  # ns

    def __post_init__(self):
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must be in (0, 1]")
        if self.dark_rate < 0:
            raise ValueError("dark_rate must be >= 0")
        if not self.coincidence_window > 0:
            raise ValueError("coincidence_window must be > 0")


@dataclass(frozen=True)
class NoiseModel:
    """Phenomenological imperfections.

    mode_overlap_mu
        Contrast of every two-photon interference cross term.
    analyzer_coherence
        Extra cross-term contrast seen only through the polarization
        analyzer (residual birefringence drift in the analyzer fibers).
    pdl
        ``{fiber: (t_H, t_V)}`` transmittances of the 2-D grating outputs.
    accidental_floor
        Probability per pair added to every coincidence probability.
    """

    mode_overlap_mu: float = 1.0
    analyzer_coherence: float = 1.0
    pdl: tuple = ()
    accidental_floor: float = 0.0

    def __post_init__(self):
        pdl = self.pdl.items() if isinstance(self.pdl, dict) else self.pdl
        pdl = tuple(sorted((str(f), (float(t[0]), float(t[1]))) for f, t in pdl))
        object.__setattr__(self, "pdl", pdl)
        for name in ("mode_overlap_mu", "analyzer_coherence", "accidental_floor"):
            val = getattr(self, name)
            if not 0 <= val <= 1:
                raise ValueError(f"{name}={val} outside [0, 1]")
        for f, (th, tv) in pdl:
            if not (0 <= th <= 1 and 0 <= tv <= 1):
                raise ValueError(f"pdl for {f} outside [0, 1]")

    def transmittance(self, fiber: str) -> tuple[float, float]:
        return dict(self.pdl).get(fiber, (1.0, 1.0))

    def amplitude_filter(self, registry: ModeRegistry) -> np.ndarray:
        """Per-mode amplitude transmission ``sqrt(t)``; on-chip modes pass."""
        out = np.ones(len(registry))
        for i, m in enumerate(registry.modes):
            if m.kind == FIBER:
                th, tv = self.transmittance(m.label[:-1])
                out[i] = math.sqrt(th if m.polarization == "H" else tv)
        return out

    def replace(self, **kw) -> NoiseModel:
        d = dict(mode_overlap_mu=self.mode_overlap_mu, analyzer_coherence=self.analyzer_coherence,
                 pdl=self.pdl, accidental_floor=self.accidental_floor)
        d.update(kw)
        return NoiseModel(**d)


IDEAL_NOISE = NoiseModel()


class Detection(NamedTuple):
    """Per-pair probabilities at a detector pair."""

    p_coinc: float
    singles_1: float  # mean photons reaching detector 1
    singles_2: float


def detect(
    ensemble: MixedTwoPhotonState,
    bench: np.ndarray,
    noise: NoiseModel,
    modes_1: Sequence[int],
    modes_2: Sequence[int],
) -> Detection:
    """Push an ensemble through PDL, then the unitary ``bench``, then count.

    PDL is a non-unitary amplitude filter so it is applied to raw amplitude
    matrices here instead of inside the state algebra.  Losses are not
    renormalized: the result is a per-pair probability.
    """
    d = noise.amplitude_filter(ensemble.registry)
    m1, m2 = list(modes_1), list(modes_2)
    p = s1 = s2 = 0.0
    for w, st in ensemble.branches:
        if w == 0:
            continue
        a = bench @ (d[:, None] * st.amplitudes * d[None, :]) @ bench.T
        p += w * float(np.sum(np.abs(2 * a[np.ix_(m1, m2)]) ** 2))
        rows = 4 * np.sum(np.abs(a) ** 2, axis=1)
        s1 += w * float(rows[m1].sum())
        s2 += w * float(rows[m2].sum())
    return Detection(p + noise.accidental_floor, s1, s2)


class Rates(NamedTuple):
    singles_1: float  # Hz
    singles_2: float
    coinc: float  # true + accidental
    accidentals: float


def expected_rates(
    p_coinc: float,
    pair_rate: float,
    detector_1: DetectorModel,
    detector_2: DetectorModel,
    noise: NoiseModel = IDEAL_NOISE,
    p_single: tuple[float, float] = (1.0, 1.0),
) -> Rates:
    """Mean count rates for one measurement setting.

    ``p_coinc`` and ``p_single`` already include interference contrast and
    PDL (see :func:`detect`).
    """
    if pair_rate < 0:
        raise ValueError("pair_rate must be >= 0")
    s1 = pair_rate * detector_1.efficiency * p_single[0] + detector_1.dark_rate
    s2 = pair_rate * detector_2.efficiency * p_single[1] + detector_2.dark_rate
    window = 1e-9 * min(detector_1.coincidence_window, detector_2.coincidence_window)
    acc = s1 * s2 * window
    true = pair_rate * detector_1.efficiency * detector_2.efficiency * p_coinc
    return Rates(s1, s2, true + acc, acc)


@dataclass(frozen=True)
class CountRecord:
    singles_1: int
    singles_2: int
    coincidences: int
    integration_time: float
    seed: int


def point_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for measurement point ``index`` under ``seed``."""
    return np.random.Generator(np.random.Philox(key=((int(index) & U64) << 64) | (int(seed) & U64)))


def stream_index(stream: int, index: int) -> int:
    return ((int(stream) & 0xFFFFFFFF) << 32) | (int(index) & 0xFFFFFFFF)


def sample_counts(rates: Rates, integration_time: float, seed: int, index: int = 0) -> CountRecord:
    """Poisson counts; coincident clicks are part of each singles tally."""
    if not integration_time > 0:
        raise ValueError("integration_time must be > 0")
    rng = point_rng(seed, index)
    c = int(rng.poisson(rates.coinc * integration_time))
    e1 = int(rng.poisson(max(rates.singles_1 - rates.coinc, 0.0) * integration_time))
    e2 = int(rng.poisson(max(rates.singles_2 - rates.coinc, 0.0) * integration_time))
    return CountRecord(c + e1, c + e2, c, integration_time, seed)


def sample_sweep(
    rates: Sequence[Rates],
    integration_time: float,
    seed: int,
    workers: int = 1,
    stream: int = 0,
) -> list[CountRecord]:
    """Sample every point of a sweep; output order follows the sweep index.

    ``stream`` selects an independent family of point keys for the same seed.
    """
    def one(i):
        return sample_counts(rates[i], integration_time, seed, stream_index(stream, i))

    if workers <= 1:
        return [one(i) for i in range(len(rates))]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(one, range(len(rates))))


@dataclass(frozen=True)
class CoincidenceHistogram:
    n_bins: int
    bin_counts: np.ndarray
    expected: np.ndarray
    period: float  # us
    total_time: float  # s

    @property
    def t_centers(self) -> np.ndarray:
        return (np.arange(self.n_bins) + 0.5) * self.period / self.n_bins


def modulation_histogram(
    trajectory,
    bsm_model: Callable[[np.ndarray], Detection],
    detector_1: DetectorModel,
    detector_2: DetectorModel,
    noise: NoiseModel,
    n_bins: int = 40,
    total_time: float = 600.0,
    seed: int = 0,
    pair_rate: float = 1e5,
    subsamples: int = 64,
    stream: int = 0,
) -> CoincidenceHistogram:
    """Coincidences folded into ``n_bins`` time bins of one drive period.

    ``bsm_model`` maps the superposition phase to a :class:`Detection`.  Each
    bin averages the coincidence rate over ``subsamples`` midpoint times and
    is drawn from Poisson with its own keyed stream.
    """
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    if trajectory is None or len(trajectory) == 0:
        raise ValueError("empty trajectory")
    if total_time < 0:
        raise ValueError("total_time must be >= 0")
    width = trajectory.period / n_bins
    expected = np.empty(n_bins)
    for b in range(n_bins):
        t = b * width + (np.arange(subsamples) + 0.5) * (width / subsamples)
        rates = [
            expected_rates(det.p_coinc, pair_rate, detector_1, detector_2, noise,
                           (det.singles_1, det.singles_2)).coinc
            for det in map(bsm_model, trajectory.phase_at(t))
        ]
        expected[b] = np.mean(rates) * total_time / n_bins
    counts = np.array([point_rng(seed, stream_index(stream, b)).poisson(expected[b]) for b in range(n_bins)], dtype=np.int64)
    return CoincidenceHistogram(n_bins, counts, expected, trajectory.period, total_time)
