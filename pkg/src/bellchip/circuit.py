"""The Bell-state chip: pump tree, four pair sources, two interferometers and
the 2-D grating outputs, plus the fiber benches used to probe the output.

Phases in :class:`BellPhaseConfig` are effective two-photon phases.  The
chip converts them to physical shifter settings using offsets derived from
its own compiled unitary, so every observable is independent of the
beam-splitter phase convention.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .components import (
    BeamSplitter50,
    CircuitGraph,
    DelayLine,
    FiberCoupler50,
    GratingMapper2D,
    HalfWavePlate,
    PhaseShifter,
    PolarizationRotator,
    Polarizer,
    SfwmSource,
    compile_unitary,
)
from .detection import IDEAL_NOISE, Detection, NoiseModel, detect
from .spectral import SpectralEnvelope, overlap
from .state import (
    FIBER,
    ON_CHIP,
    MixedTwoPhotonState,
    Mode,
    ModeRegistry,
    StateError,
    TwoPhotonState,
    apply_unitary,
    prob_bunched,
    prob_coincidence,
)

TWO_PI = 2 * math.pi
CENTER_THZ = 193.1  # ~1552.5 nm

WAVEGUIDES = ("W1", "W2", "W3", "W4")
FIBER_MODES = ("P5H", "P5V", "P6H", "P6V")

# which fiber mode each interferometer output lands in
OUTPUT_MAP = {
    ("BS4", "c"): "P5H",
    ("BS4", "d"): "P6V",
    ("BS5", "c"): "P5V",
    ("BS5", "d"): "P6H",
}
# in-place labels of the interferometer outputs
BS_OUTPUT_LINE = {("BS4", "c"): "W1", ("BS4", "d"): "W2", ("BS5", "c"): "W3", ("BS5", "d"): "W4"}

# pump line entered by (pump 1, pump 2) for each injection
INJECTIONS = {
    "port12": ("W1", "W3"),
    "port3": ("W2", "W2"),
    "port4": ("W4", "W4"),
}


@dataclass(frozen=True)
class BellPhaseConfig:
    alpha: float = 0.0
    theta_45: float = 0.0
    theta_45p: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "theta_45", "theta_45p"):
            object.__setattr__(self, name, float(getattr(self, name)) % TWO_PI)


def fiber_registry(center_frequency: float = CENTER_THZ) -> ModeRegistry:
    return ModeRegistry(tuple(Mode(lab, FIBER, lab[-1], center_frequency) for lab in FIBER_MODES))


def chip_registry(center_frequency: float = CENTER_THZ) -> ModeRegistry:
    on_chip = tuple(Mode(lab, ON_CHIP, None, center_frequency) for lab in WAVEGUIDES)
    return ModeRegistry(on_chip + fiber_registry(center_frequency).modes)


def chip_graph(registry: ModeRegistry | None = None, pair_amplitude: complex = 1.0) -> CircuitGraph:
    registry = registry or chip_registry()
    return CircuitGraph(registry, [
        [SfwmSource(w, pair_amplitude) for w in WAVEGUIDES],
        [BeamSplitter50("W1", "W2"), BeamSplitter50("W3", "W4")],  # BS4, BS5
        [GratingMapper2D(in_top="W1", in_bottom="W3", out_fiber="P5"),
         GratingMapper2D(in_top="W4", in_bottom="W2", out_fiber="P6")],
    ])


def pump_graph(tps1_phase: float = 0.0) -> CircuitGraph:
    """BS1 splits the pumps, TPS1 sits on the arm feeding BS3."""
    reg = ModeRegistry.from_labels(WAVEGUIDES)
    return CircuitGraph(reg, [
        [BeamSplitter50("W1", "W3")],  # BS1
        [PhaseShifter("W3", tps1_phase)],  # TPS1
        [BeamSplitter50("W1", "W2"), BeamSplitter50("W3", "W4")],  # BS2, BS3
    ])


def pump_fields(injection: str, tps1_phase: float, convention: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        line1, line2 = INJECTIONS[injection]
    except KeyError:
        raise StateError(f"unknown pump injection {injection!r}") from None
    g = pump_graph(tps1_phase)
    u = compile_unitary(g, convention)
    e1 = u[:, g.registry.index(line1)]
    e2 = u[:, g.registry.index(line2)]
    return e1, e2


def _sources(graph: CircuitGraph) -> dict[str, complex]:
    found = {s.port: complex(s.pair_amplitude) for s in graph.find(SfwmSource)}
    missing = [w for w in WAVEGUIDES if w not in found]
    if missing:
        raise StateError(f"graph lacks pair sources on {', '.join(missing)}")
    return found


def split_probability(theta: float) -> float:
    """Coincidence probability behind BS4 at two-photon phase ``theta``."""
    return (1 + math.cos(theta)) / 2


class BellChip:
    """Compiled chip for one beam-splitter convention and pump injection."""

    def __init__(self, convention: str = "symmetric", injection: str = "port12"):
        self.convention = convention
        self.injection = injection
        self.registry = chip_registry()
        self.graph = chip_graph(self.registry)
        self.unitary = compile_unitary(self.graph, convention)
        self.fibers = fiber_registry()
        self._fiber_idx = [self.registry.index(lab) for lab in FIBER_MODES]
        self._theta_off = (0.0, 0.0)
        self._alpha_off = 0.0
        self._calibrate()

    # -- physical phase bookkeeping -------------------------------------
    def _raw_amplitudes(self, tps1_pair_phase, tps2_pair_phase, tps3_pair_phase):
        e1, e2 = pump_fields(self.injection, tps1_pair_phase / 2, self.convention)
        c = e1 * e2
        c[0] *= np.exp(1j * tps2_pair_phase)
        c[2] *= np.exp(1j * tps3_pair_phase)
        return c

    def _pair_gain(self, line: str, bs: str) -> complex:
        """Amplitude for a pair in ``line`` to leave ``bs`` split, up to a common factor."""
        k = self.registry.index(line)
        o1 = self.registry.index(OUTPUT_MAP[(bs, "c")])
        o2 = self.registry.index(OUTPUT_MAP[(bs, "d")])
        return complex(self.unitary[o1, k] * self.unitary[o2, k])

    def _calibrate(self):
        c0 = self._raw_amplitudes(0.0, 0.0, 0.0)
        offs = []
        for (la, lb), bs in ((("W1", "W2"), "BS4"), (("W3", "W4"), "BS5")):
            ka, kb = WAVEGUIDES.index(la), WAVEGUIDES.index(lb)
            ta = self._pair_gain(la, bs) * c0[ka]
            tb = self._pair_gain(lb, bs) * c0[kb]
            offs.append(np.angle(tb) - np.angle(ta) if abs(ta) > 0 and abs(tb) > 0 else 0.0)
        self._theta_off = tuple(offs)
        if self.injection == "port12":
            a = self._fiber_amplitudes(self._raw_amplitudes(0.0, *self._theta_off))
            x = a[FIBER_MODES.index("P5H"), FIBER_MODES.index("P6V")]
            y = a[FIBER_MODES.index("P5V"), FIBER_MODES.index("P6H")]
            self._alpha_off = -float(np.angle(y / x))

    def physical_phases(self, phases: BellPhaseConfig) -> tuple[float, float, float]:
        """Two-photon phases (TPS1, TPS2, TPS3) realizing ``phases`` on this chip."""
        return (phases.alpha + self._alpha_off,
                phases.theta_45 + self._theta_off[0],
                phases.theta_45p + self._theta_off[1])

    def source_amplitudes(self, phases: BellPhaseConfig) -> np.ndarray:
        return self._raw_amplitudes(*self.physical_phases(phases))

    def _fiber_amplitudes(self, c) -> np.ndarray:
        a = np.zeros((len(self.registry),) * 2, dtype=complex)
        for k in range(4):
            a[k, k] = c[k] / math.sqrt(2)
        out = apply_unitary(TwoPhotonState(a, self.registry), self.unitary).amplitudes
        return out[np.ix_(self._fiber_idx, self._fiber_idx)]

    # -- states ------------------------------------------------------------
    def build_source_state(self, phases: BellPhaseConfig, pair_amplitude: complex = 1.0,
                           graph: CircuitGraph | None = None) -> TwoPhotonState:
        src = _sources(graph or self.graph)
        c = self.source_amplitudes(phases) * complex(pair_amplitude)
        c = c * np.array([src[w] for w in WAVEGUIDES])
        if np.max(np.abs(c)) == 0:
            raise StateError("zero pair amplitude: no pairs generated")
        a = np.zeros((len(self.registry),) * 2, dtype=complex)
        for k in range(4):
            a[k, k] = c[k] / math.sqrt(2)
        return TwoPhotonState(a, self.registry)

    def propagate(self, phases: BellPhaseConfig) -> TwoPhotonState:
        return apply_unitary(self.build_source_state(phases), self.unitary)

    def output_state(self, phases: BellPhaseConfig, warn: bool = True) -> TwoPhotonState:
        """Two-photon state in the fiber modes P5H, P5V, P6H, P6V."""
        full = self.propagate(phases)
        a = full.amplitudes[np.ix_(self._fiber_idx, self._fiber_idx)]
        state = TwoPhotonState(a, self.fibers)
        if warn:
            split = sum(prob_coincidence(state, j, k) for j in (0, 1) for k in (2, 3))
            if split < 1 - 1e-10:
                warnings.warn(f"interference phases off the split condition: "
                              f"{1 - split:.3g} of pairs leave one fiber together",
                              stacklevel=2)
        return state

    def simulated_split_probability(self, theta: float) -> float:
        """Coincidence behind BS4 from the full compiled chip, pumped via Port 3."""
        chip = self if self.injection == "port3" else get_chip(self.convention, "port3")
        st = chip.propagate(BellPhaseConfig(theta_45=theta))
        return prob_coincidence(st, OUTPUT_MAP[("BS4", "c")], OUTPUT_MAP[("BS4", "d")])

    def simulated_bunch_probability(self, theta: float) -> float:
        chip = self if self.injection == "port3" else get_chip(self.convention, "port3")
        st = chip.propagate(BellPhaseConfig(theta_45=theta))
        return prob_bunched(st, OUTPUT_MAP[("BS4", "c")]) + prob_bunched(st, OUTPUT_MAP[("BS4", "d")])

    def ensemble(self, state: TwoPhotonState, coherence: float) -> MixedTwoPhotonState:
        """Keep the BS4 and BS5 contributions coherent with weight ``coherence``,
        otherwise mix them incoherently."""
        a = state.amplitudes
        branches = [(coherence, state)]
        total = 0.0
        parts = []
        for bs in ("BS4", "BS5"):
            idx = [FIBER_MODES.index(OUTPUT_MAP[(bs, p)]) for p in "cd"]
            mask = np.zeros_like(a, dtype=bool)
            mask[np.ix_(idx, idx)] = True
            part = np.where(mask, a, 0)
            w = float(2 * np.sum(np.abs(part) ** 2))
            total += w
            if w > 0:
                parts.append((w, TwoPhotonState(part, state.registry)))
        for w, st in parts:
            branches.append(((1 - coherence) * w / total, st))
        return MixedTwoPhotonState(tuple(branches))

    # -- fiber benches -----------------------------------------------------
    def analyzer_graph(self, hwp1: float, hwp2: float) -> CircuitGraph:
        return CircuitGraph(self.fibers, [
            [HalfWavePlate("P5", hwp1 % 180), HalfWavePlate("P6", hwp2 % 180)],
            [Polarizer("P5", "H"), Polarizer("P6", "H")],
        ])

    def analyzer_detection(self, phases: BellPhaseConfig, hwp1: float, hwp2: float,
                           noise: NoiseModel = IDEAL_NOISE) -> Detection:
        g = self.analyzer_graph(hwp1, hwp2)
        p1, p2 = (self.fibers.index(p.pass_label) for p in g.find(Polarizer))
        ens = self.ensemble(self.output_state(phases),
                            noise.mode_overlap_mu * noise.analyzer_coherence)
        return detect(ens, compile_unitary(g, self.convention), noise, [p1], [p2])

    def bsm_graph(self, tau: float = 0.0, rotator=((1, 0), (0, 1))) -> CircuitGraph:
        return CircuitGraph(self.fibers, [
            [DelayLine("P5", tau), PolarizationRotator("P6", rotator)],
            [FiberCoupler50("P5", "P6")],
        ])

    def bsm_detection(self, phases: BellPhaseConfig, tau: float = 0.0,
                      spectral: SpectralEnvelope | None = None,
                      noise: NoiseModel = IDEAL_NOISE) -> Detection:
        spectral = spectral or SpectralEnvelope()
        g = self.bsm_graph(tau)
        ens = self.ensemble(self.output_state(phases),
                            noise.mode_overlap_mu * overlap(spectral, tau))
        d1 = [self.fibers.index(lab) for lab in ("P5H", "P5V")]
        d2 = [self.fibers.index(lab) for lab in ("P6H", "P6V")]
        return detect(ens, compile_unitary(g, self.convention), noise, d1, d2)

    def hom_detection(self, tau: float, spectral: SpectralEnvelope, visibility: float,
                      noise: NoiseModel = IDEAL_NOISE) -> Detection:
        """HOM between the two photons of one interferometer's pair.

        Pumping via Port 3 probes the W1/W2 pair, Port 4 the W3/W4 pair; any
        other injection falls back to Port 3.  The photon in fiber 6 is
        rotated onto the polarization of its partner; the distinguishable
        fraction is modelled by leaving it orthogonal.
        """
        chip = self if self.injection in ("port3", "port4") else get_chip(self.convention, "port3")
        st = chip.output_state(BellPhaseConfig())
        d1 = [self.fibers.index(lab) for lab in ("P5H", "P5V")]
        d2 = [self.fibers.index(lab) for lab in ("P6H", "P6V")]
        c = visibility * overlap(spectral, tau)
        one = MixedTwoPhotonState(((1.0, st),))
        same = detect(one, compile_unitary(self.bsm_graph(tau, ((0, 1), (1, 0))), self.convention),
                      noise, d1, d2)
        diff = detect(one, compile_unitary(self.bsm_graph(tau), self.convention), noise, d1, d2)
        return Detection(*(c * s + (1 - c) * d for s, d in zip(same, diff)))


@lru_cache(maxsize=None)
def get_chip(convention: str = "symmetric", injection: str = "port12") -> BellChip:
    return BellChip(convention, injection)


def build_source_state(graph: CircuitGraph, pump_tree_phases: BellPhaseConfig,
                       pair_amplitude: complex = 1.0, convention: str = "symmetric") -> TwoPhotonState:
    return get_chip(convention).build_source_state(pump_tree_phases, pair_amplitude, graph)


def output_state(config: BellPhaseConfig, convention: str = "symmetric") -> TwoPhotonState:
    return get_chip(convention).output_state(config)


def bell_state(alpha: float) -> TwoPhotonState:
    """``(|H,V> + e^{i alpha} |V,H>)/sqrt(2)`` with ``|H,V>`` = P5H & P6V."""
    reg = fiber_registry()
    a = np.zeros((4, 4), dtype=complex)
    i, j = reg.index("P5H"), reg.index("P6V")
    k, l = reg.index("P5V"), reg.index("P6H")
    a[i, j] = a[j, i] = 0.5 / math.sqrt(2)
    a[k, l] = a[l, k] = 0.5 * np.exp(1j * alpha) / math.sqrt(2)
    return TwoPhotonState(a, reg)


def analyzer_coincidence(config: BellPhaseConfig, hwp1: float, hwp2: float,
                         noise: NoiseModel = IDEAL_NOISE, convention: str = "symmetric") -> float:
    return get_chip(convention).analyzer_detection(config, hwp1, hwp2, noise).p_coinc


def bsm_coincidence(config: BellPhaseConfig, tau: float = 0.0,
                    spectral: SpectralEnvelope | None = None,
                    noise: NoiseModel = IDEAL_NOISE, convention: str = "symmetric") -> float:
    return get_chip(convention).bsm_detection(config, tau, spectral, noise).p_coinc
