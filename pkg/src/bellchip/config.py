"""Experiment configuration files.

Configs are TOML.  Every key is optional and falls back to the defaults
below; unknown keys are rejected with their dotted path.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import presets
from .detection import DetectorModel, NoiseModel
from .spectral import SpectralEnvelope
from .thermal import PhaseVoltageLaw

EXPERIMENTS = (
    "fringe-vs-voltage",
    "hom",
    "polarization-fringe",
    "bsm-phase-sweep",
    "bsm-delay",
    "modulation",
)

C_NM_GHZ = 299792458.0  # c in nm*GHz
ENERGY_TOL_GHZ = 0.1

DEFAULTS_DIR = Path(__file__).parent / "configs"


class ConfigError(ValueError):
    pass


@dataclass
class PumpSection:
    wavelength_1_nm: float = presets.PUMP_1_NM
    wavelength_2_nm: float = presets.PUMP_2_NM
    injection: str = "port12"


@dataclass
class FilterSection:
    shape: str = "rectangular"
    center_wavelength_nm: float = presets.FILTER_CENTER_NM
    fwhm_ghz: float = presets.FILTER_FWHM_GHZ


@dataclass
class PhasesSection:
    alpha: float = 0.0  # rad
    theta_45: float = 0.0
    theta_45p: float = 0.0


@dataclass
class LawSection:
    phi0: float = presets.TPS2_LAW.phi0
    kappa: float = presets.TPS2_LAW.kappa


def _tps1_law():
    return LawSection(presets.TPS1_LAW.phi0, presets.TPS1_LAW.kappa)


@dataclass
class DetectorSection:
    efficiency: float = presets.DETECTOR.efficiency
    dark_rate_hz: float = presets.DETECTOR.dark_rate
    coincidence_window_ns: float = presets.DETECTOR.coincidence_window


@dataclass
class NoiseSection:
    mode_overlap_mu: float = presets.FITTED_NOISE.mode_overlap_mu
    analyzer_coherence: float = presets.FITTED_NOISE.analyzer_coherence
    accidental_floor: float = presets.FITTED_NOISE.accidental_floor
    pdl: dict = field(default_factory=lambda: {k: list(v) for k, v in presets.PDL.items()})


@dataclass
class SweepSection:
    start: float = 0.0
    stop: float = 10.0
    step: float = 0.1
    integration_s: float = 1.0
    workers: int = 1


@dataclass
class HomSection:
    visibility: float = presets.HOM_VISIBILITY_W12


@dataclass
class AnalyzerSection:
    hwp1_deg: float = 0.0


@dataclass
class ModulationSection:
    rate_hz: float = 1e3
    total_time_s: float = 600.0
    n_bins: int = presets.HISTOGRAM_BINS
    samples_per_period: int = 4000
    tau_thermal_us: float = presets.TAU_THERMAL_US
    v_low: float = -1.0  # negative: derive from the TPS1 law (|Psi+>)
    v_high: float = -1.0  # negative: derive from the TPS1 law (|Psi->)


@dataclass
class ExperimentConfig:
    experiment: str = "fringe-vs-voltage"
    label: str = ""
    reproduces: str = ""
    seed: int = 1
    output: str = "out.csv"
    convention: str = "symmetric"
    pair_rate_hz: float = presets.PAIR_RATE_HZ
    pump: PumpSection = field(default_factory=PumpSection)
    filter: FilterSection = field(default_factory=FilterSection)
    phases: PhasesSection = field(default_factory=PhasesSection)
    tps1_law: LawSection = field(default_factory=_tps1_law)
    tps2_law: LawSection = field(default_factory=LawSection)
    detector: DetectorSection = field(default_factory=DetectorSection)
    noise: NoiseSection = field(default_factory=NoiseSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    hom: HomSection = field(default_factory=HomSection)
    analyzer: AnalyzerSection = field(default_factory=AnalyzerSection)
    modulation: ModulationSection = field(default_factory=ModulationSection)

    # -- derived objects -------------------------------------------------
    def envelope(self) -> SpectralEnvelope:
        f = self.filter
        return SpectralEnvelope(f.shape, f.center_wavelength_nm, f.fwhm_ghz)

    def detector_model(self) -> DetectorModel:
        d = self.detector
        return DetectorModel(d.efficiency, d.dark_rate_hz, d.coincidence_window_ns)

    def noise_model(self) -> NoiseModel:
        n = self.noise
        return NoiseModel(n.mode_overlap_mu, n.analyzer_coherence,
                          {k: tuple(v) for k, v in n.pdl.items()}, n.accidental_floor)

    def law(self, which: str) -> PhaseVoltageLaw:
        sec = getattr(self, which)
        return PhaseVoltageLaw(sec.phi0, sec.kappa)

    def sweep_values(self):
        import numpy as np

        s = self.sweep
        n = int(math.floor((s.stop - s.start) / s.step + 1e-9)) + 1
        return np.round(s.start + s.step * np.arange(n), 10)

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: unknown experiment {self.experiment!r}")
        if self.convention not in ("symmetric", "hadamard"):
            raise ConfigError(f"convention: unknown beam-splitter convention {self.convention!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed: must be an unsigned 64-bit integer")
        if self.pair_rate_hz < 0:
            raise ConfigError("pair_rate_hz: must be >= 0")
        if self.pump.injection not in ("port12", "port3", "port4"):
            raise ConfigError(f"pump.injection: unknown injection {self.pump.injection!r}")
        if min(self.pump.wavelength_1_nm, self.pump.wavelength_2_nm) <= 0:
            raise ConfigError("pump: wavelengths must be positive")
        mismatch = energy_mismatch_ghz(self.pump.wavelength_1_nm, self.pump.wavelength_2_nm,
                                       self.filter.center_wavelength_nm)
        if abs(mismatch) > ENERGY_TOL_GHZ:
            raise ConfigError(
                f"filter.center_wavelength_nm: pumps violate energy conservation by "
                f"{mismatch:.3f} GHz (limit {ENERGY_TOL_GHZ} GHz)")
        s = self.sweep
        if not s.step > 0 or s.stop < s.start:
            raise ConfigError("sweep: need step > 0 and stop >= start")
        if not s.integration_s > 0:
            raise ConfigError("sweep.integration_s: must be > 0")
        if s.workers < 1:
            raise ConfigError("sweep.workers: must be >= 1")
        m = self.modulation
        if m.n_bins < 2:
            raise ConfigError("modulation.n_bins: must be >= 2")
        if m.total_time_s < 0:
            raise ConfigError("modulation.total_time_s: must be >= 0")
        for name, build in (("filter", self.envelope), ("detector", self.detector_model),
                            ("noise", self.noise_model), ("tps1_law", lambda: self.law("tps1_law")),
                            ("tps2_law", lambda: self.law("tps2_law"))):
            try:
                build()
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"{name}: {exc}") from None
        if not 0 <= self.hom.visibility <= 1:
            raise ConfigError("hom.visibility: must be in [0, 1]")


def energy_mismatch_ghz(pump_1_nm: float, pump_2_nm: float, center_nm: float) -> float:
    """``f_p1 + f_p2 - 2 f_s`` in GHz."""
    return C_NM_GHZ / pump_1_nm + C_NM_GHZ / pump_2_nm - 2 * C_NM_GHZ / center_nm


def _coerce(value, default, path):
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif isinstance(default, str):
        ok = isinstance(value, str)
    elif isinstance(default, dict):
        ok = isinstance(value, dict)
    else:
        ok = True
    if not ok:
        raise ConfigError(f"{path}: expected {type(default).__name__}, got {value!r}")
    return value


def _build(cls, data: dict, prefix: str = ""):
    obj = cls()
    names = {f.name for f in dataclasses.fields(cls)}
    for key, value in data.items():
        path = f"{prefix}{key}"
        if key not in names:
            raise ConfigError(f"{path}: unknown key")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            if not isinstance(value, dict):
                raise ConfigError(f"{path}: expected a section")
            setattr(obj, key, _build(type(current), value, path + "."))
        else:
            setattr(obj, key, _coerce(value, current, path))
    return obj


def config_from_dict(data: dict[str, Any]) -> ExperimentConfig:
    cfg = _build(ExperimentConfig, data)
    if "pdl" in data.get("noise", {}):
        for fiber, t in cfg.noise.pdl.items():
            if not (isinstance(t, list) and len(t) == 2):
                raise ConfigError(f"noise.pdl.{fiber}: expected [t_H, t_V]")
    if not cfg.label:
        cfg.label = cfg.experiment
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data)


def default_config_paths() -> dict[str, Path]:
    return {p.stem: p for p in sorted(DEFAULTS_DIR.glob("*.toml"))}


def load_default(name: str) -> ExperimentConfig:
    paths = default_config_paths()
    if name not in paths:
        raise ConfigError(f"no default config named {name!r}")
    return load_config(paths[name])
