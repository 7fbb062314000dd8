"""The six experiment drivers behind ``bellchip run``.

Each driver sweeps one variable, turns probabilities into expected rates,
samples Poisson counts and fits the result.  Output is a CSV whose first
line is ``# experiment=<name> seed=<u64> version=<semver>``.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import BellPhaseConfig, get_chip
from .config import ExperimentConfig
from .detection import (
    CoincidenceHistogram,
    detect,
    expected_rates,
    modulation_histogram,
    sample_sweep,
)
from .fitting import (
    FitError,
    bell_criterion,
    discrimination_visibility,
    fit_fringe,
    fit_hom,
)
from .thermal import HeaterDrive, SquareWave, calibrate_law, phase_of_voltage, phase_trajectory

FRINGE_COLUMNS = ("sweep_value", "coincidences", "singles_1", "singles_2")
HOM_COLUMNS = ("delay_ps", "coincidences")
MODULATION_COLUMNS = ("bin_index", "t_center_us", "coincidences")


def fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".9g")


def as_written(values) -> np.ndarray:
    """Values exactly as they will read back from the CSV."""
    return np.array([float(fmt(float(v))) for v in values])


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    comments: list[str]
    columns: tuple[str, ...]
    rows: list[tuple]
    summary: dict = field(default_factory=dict)
    expected: np.ndarray | None = None  # expected coincidences per row
    histogram: CoincidenceHistogram | None = None

    def csv_text(self) -> str:
        cfg = self.config
        lines = [f"# experiment={cfg.experiment} seed={cfg.seed} version={__version__}"]
        lines += [f"# {c}" for c in self.comments]
        lines.append(",".join(self.columns))
        lines += [",".join(fmt(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def write(self, path=None) -> Path:
        path = Path(path or self.config.output)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.csv_text())
        except OSError as exc:
            raise OSError(f"cannot write output {path}: {exc}") from None
        return path

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)

    def summary_text(self) -> str:
        return "\n".join(f"{k}: {fmt(v) if isinstance(v, (float, int, np.number)) else v}"
                         for k, v in self.summary.items())


def rng_stream(cfg: ExperimentConfig) -> int:
    """Per-experiment key family so that different runs under one seed are independent."""
    return zlib.crc32(f"{cfg.experiment}/{cfg.label}".encode())


def _provenance(cfg: ExperimentConfig) -> list[str]:
    out = []
    if cfg.reproduces:
        out.append(f"reproduces: {cfg.reproduces}")
    out.append(f"label: {cfg.label}")
    return out


def _chip(cfg: ExperimentConfig):
    return get_chip(cfg.convention, cfg.pump.injection)


def detection_rates(cfg: ExperimentConfig, detections) -> list:
    det, noise = cfg.detector_model(), cfg.noise_model()
    return [expected_rates(d.p_coinc, cfg.pair_rate_hz, det, det, noise, (d.singles_1, d.singles_2))
            for d in detections]


def _sample(cfg: ExperimentConfig, detections=None, rates=None) -> tuple[list, np.ndarray]:
    if rates is None:
        rates = detection_rates(cfg, detections)
    records = sample_sweep(rates, cfg.sweep.integration_s, cfg.seed, cfg.sweep.workers, rng_stream(cfg))
    expected = np.array([r.coinc for r in rates]) * cfg.sweep.integration_s
    return records, expected


def _fringe_rows(x, records):
    return [(float(v), r.coincidences, r.singles_1, r.singles_2) for v, r in zip(x, records)]


def fringe_summary(fit, prefix: str = "") -> dict:
    v = fit.raw_visibility
    out = {
        f"{prefix}raw_visibility": v,
        f"{prefix}extremal_visibility": fit.extremal_visibility,
        f"{prefix}offset": fit.offset,
        f"{prefix}amplitude": fit.amplitude,
        f"{prefix}period": fit.period,
        f"{prefix}residual_rms": fit.residual_rms,
    }
    if 0 <= v <= 1:
        out[f"{prefix}bell_criterion"] = bell_criterion(v)
    return out


# -- experiments ---------------------------------------------------------------

def _direct_detection(chip, phases, noise):
    """Fiber coincidences P5 x P6 with no bench in front of the detectors."""
    st = chip.output_state(phases, warn=False)
    ens = chip.ensemble(st, noise.mode_overlap_mu)
    fib = chip.fibers
    d1 = [fib.index("P5H"), fib.index("P5V")]
    d2 = [fib.index("P6H"), fib.index("P6V")]
    return detect(ens, np.eye(len(fib)), noise, d1, d2)


def run_fringe_vs_voltage(cfg: ExperimentConfig) -> ExperimentResult:
    """Coincidences behind BS4 versus the TPS2 heater voltage."""
    chip = _chip(cfg)
    volts = cfg.sweep_values()
    law = cfg.law("tps2_law")
    noise = cfg.noise_model()
    p = cfg.phases
    dets = [_direct_detection(chip, BellPhaseConfig(p.alpha, phase_of_voltage(law, v), p.theta_45p), noise)
            for v in volts]
    records, expected = _sample(cfg, dets)
    rows = _fringe_rows(volts, records)
    result = ExperimentResult(cfg, _provenance(cfg) + ["sweep=voltage transform=square"],
                              FRINGE_COLUMNS, rows, expected=expected)
    x = as_written(volts)
    counts = [r.coincidences for r in records]
    cal = calibrate_law(list(zip(x, counts)))
    fit = fit_fringe(list(zip(x ** 2, counts)))
    peaks = np.sqrt(fit.peak_positions(x.min() ** 2, x.max() ** 2))
    result.summary = fringe_summary(fit)
    result.summary["fitted_phi0_rad"] = cal.law.phi0
    result.summary["fitted_kappa_rad_per_v2"] = cal.law.kappa
    result.summary["fringe_maxima_v"] = " ".join(f"{v:.3f}" for v in peaks)
    result.summary["grid_maximum_v"] = float(volts[int(np.argmax(expected))])
    return result


def hom_rates(cfg: ExperimentConfig) -> list:
    """Expected rates along the delay sweep of a HOM config.

    The configured visibility is already a raw visibility, so the accidental
    floor of the noise model is not applied on top of it.
    """
    chip = _chip(cfg)
    env = cfg.envelope()
    noise = cfg.noise_model().replace(accidental_floor=0.0)
    return detection_rates(cfg, [chip.hom_detection(t, env, cfg.hom.visibility, noise)
                                 for t in cfg.sweep_values()])


def run_hom(cfg: ExperimentConfig, rates=None) -> ExperimentResult:
    """HOM dip of one interferometer's pair versus the delay-line setting.

    ``rates`` may be passed in from :func:`hom_rates` when the same sweep is
    sampled under many seeds.
    """
    taus = cfg.sweep_values()
    records, expected = _sample(cfg, rates=rates if rates is not None else hom_rates(cfg))
    rows = [(float(t), r.coincidences) for t, r in zip(taus, records)]
    result = ExperimentResult(cfg, _provenance(cfg) + ["sweep=delay_ps"], HOM_COLUMNS, rows,
                              expected=expected)
    fit = fit_hom(list(zip(as_written(taus), (r.coincidences for r in records))))
    result.summary = hom_summary(fit)
    result.summary["configured_visibility"] = cfg.hom.visibility
    return result


def hom_summary(fit) -> dict:
    return {
        "visibility": fit.visibility,
        "baseline": fit.baseline,
        "bandwidth_ghz": fit.bandwidth,
        "delay_offset_ps": fit.delay_offset,
        "residual_rms": fit.residual_rms,
    }


def run_polarization_fringe(cfg: ExperimentConfig) -> ExperimentResult:
    """Coincidences behind the two polarization analyzers versus HWP2."""
    chip = _chip(cfg)
    noise = cfg.noise_model()
    p = cfg.phases
    phases = BellPhaseConfig(p.alpha, p.theta_45, p.theta_45p)
    angles = cfg.sweep_values()
    h1 = cfg.analyzer.hwp1_deg
    dets = [chip.analyzer_detection(phases, h1, h2, noise) for h2 in angles]
    records, expected = _sample(cfg, dets)
    rows = _fringe_rows(angles, records)
    result = ExperimentResult(cfg, _provenance(cfg) + [f"sweep=hwp2_deg hwp1_deg={fmt(h1)}"],
                              FRINGE_COLUMNS, rows, expected=expected)
    fit = fit_fringe(list(zip(as_written(angles), (r.coincidences for r in records))))
    result.summary = fringe_summary(fit)
    s1 = np.array([r.singles_1 for r in records], dtype=float)
    s2 = np.array([r.singles_2 for r in records], dtype=float)
    result.summary["singles_1_spread"] = float(np.ptp(s1) / np.mean(s1))
    result.summary["singles_2_spread"] = float(np.ptp(s2) / np.mean(s2))
    return result


def run_bsm_phase_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    """Coincidences after the fiber coupler versus the TPS1 heater voltage."""
    chip = _chip(cfg)
    noise = cfg.noise_model()
    env = cfg.envelope()
    law = cfg.law("tps1_law")
    p = cfg.phases
    volts = cfg.sweep_values()
    dets = [chip.bsm_detection(BellPhaseConfig(phase_of_voltage(law, v), p.theta_45, p.theta_45p),
                               0.0, env, noise)
            for v in volts]
    records, expected = _sample(cfg, dets)
    rows = _fringe_rows(volts, records)
    result = ExperimentResult(cfg, _provenance(cfg) + ["sweep=voltage transform=square"],
                              FRINGE_COLUMNS, rows, expected=expected)
    x = as_written(volts)
    fit = fit_fringe(list(zip(x ** 2, (r.coincidences for r in records))))
    c_max, c_min = fit.offset + fit.amplitude, fit.offset - fit.amplitude
    result.summary = fringe_summary(fit)
    result.summary["discrimination_visibility"] = discrimination_visibility(c_max, max(c_min, 0.0))
    maxima = np.sqrt(fit.peak_positions(x.min() ** 2, x.max() ** 2))
    shifted = fit.__class__(fit.offset, fit.amplitude, fit.phase + math.pi, fit.period,
                            fit.residual_rms, fit.extremal_visibility)
    minima = np.sqrt(shifted.peak_positions(x.min() ** 2, x.max() ** 2))
    result.summary["psi_minus_voltages_v"] = " ".join(f"{v:.3f}" for v in maxima)
    result.summary["psi_plus_voltages_v"] = " ".join(f"{v:.3f}" for v in minima)
    return result


def run_bsm_delay(cfg: ExperimentConfig) -> ExperimentResult:
    """Coincidences after the fiber coupler versus delay, for a fixed Bell state."""
    chip = _chip(cfg)
    noise = cfg.noise_model()
    env = cfg.envelope()
    p = cfg.phases
    phases = BellPhaseConfig(p.alpha, p.theta_45, p.theta_45p)
    taus = cfg.sweep_values()
    dets = [chip.bsm_detection(phases, t, env, noise) for t in taus]
    records, expected = _sample(cfg, dets)
    rows = [(float(t), r.coincidences) for t, r in zip(taus, records)]
    result = ExperimentResult(cfg, _provenance(cfg) + [f"sweep=delay_ps alpha_rad={fmt(p.alpha)}"],
                              HOM_COLUMNS, rows, expected=expected)
    counts = np.array([r.coincidences for r in records], dtype=float)
    tail = np.abs(taus) > 3e3 / env.fwhm
    centre = int(np.argmin(np.abs(taus)))
    result.summary = {
        "alpha_rad": p.alpha,
        "zero_delay_counts": int(counts[centre]),
        "tail_mean_counts": float(counts[tail].mean()) if tail.any() else float("nan"),
    }
    try:
        fit = fit_hom(list(zip(as_written(taus), counts)))
        result.summary.update(hom_summary(fit))
    except FitError as exc:
        result.summary["dip_fit"] = f"none ({exc})"
    return result


def modulation_trajectory(cfg: ExperimentConfig):
    m = cfg.modulation
    law = cfg.law("tps1_law")
    v_low = m.v_low if m.v_low >= 0 else law.voltage_for(0.0)
    v_high = m.v_high if m.v_high >= 0 else law.voltage_for(math.pi, v_low)
    drive = HeaterDrive(SquareWave(v_low, v_high, m.rate_hz), law, m.tau_thermal_us)
    return phase_trajectory(drive, m.samples_per_period), (v_low, v_high)


def run_modulation(cfg: ExperimentConfig) -> ExperimentResult:
    """TPS1 square-wave drive, coincidences folded into one drive period."""
    chip = _chip(cfg)
    noise = cfg.noise_model()
    env = cfg.envelope()
    p = cfg.phases
    m = cfg.modulation
    traj, (v_low, v_high) = modulation_trajectory(cfg)
    det = cfg.detector_model()

    def model(alpha):
        return chip.bsm_detection(BellPhaseConfig(alpha, p.theta_45, p.theta_45p), 0.0, env, noise)

    hist = modulation_histogram(traj, model, det, det, noise, m.n_bins, m.total_time_s, cfg.seed,
                                cfg.pair_rate_hz, stream=rng_stream(cfg))
    rows = [(b, float(t), int(c)) for b, t, c in zip(range(m.n_bins), hist.t_centers, hist.bin_counts)]
    comments = _provenance(cfg) + [
        f"drive rate_hz={fmt(m.rate_hz)} v_low={fmt(v_low)} v_high={fmt(v_high)} "
        f"tau_thermal_us={fmt(m.tau_thermal_us)} total_time_s={fmt(m.total_time_s)}"
    ]
    result = ExperimentResult(cfg, comments, MODULATION_COLUMNS, rows,
                              expected=hist.expected, histogram=hist)
    half = m.n_bins // 2
    low, high = hist.bin_counts[:half], hist.bin_counts[half:]
    result.summary = {
        "period_us": hist.period,
        "total_coincidences": int(hist.bin_counts.sum()),
        "low_half_mean": float(low.mean()),
        "high_half_mean": float(high.mean()),
    }
    if low.mean() > 0:
        result.summary["half_ratio"] = float(high.mean() / low.mean())
    return result


RUNNERS = {
    "fringe-vs-voltage": run_fringe_vs_voltage,
    "hom": run_hom,
    "polarization-fringe": run_polarization_fringe,
    "bsm-phase-sweep": run_bsm_phase_sweep,
    "bsm-delay": run_bsm_delay,
    "modulation": run_modulation,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    return RUNNERS[cfg.experiment](cfg)
