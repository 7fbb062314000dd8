"""Linear-optical component library and circuit graphs.

Components act in place on the modes they name.  A beam splitter on
``(a, b)`` leaves its first output on ``a`` and its second on ``b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .state import FIBER, ModeRegistry, StateError, check_unitary

SQRT_HALF = 1 / np.sqrt(2)

BS_CONVENTIONS = {
    "symmetric": SQRT_HALF * np.array([[1, 1j], [1j, 1]], dtype=complex),
    "hadamard": SQRT_HALF * np.array([[1, 1], [1, -1]], dtype=complex),
}


def beam_splitter_matrix(convention: str = "symmetric") -> np.ndarray:
    try:
        return BS_CONVENTIONS[convention]
    except KeyError:
        raise StateError(f"unknown beam-splitter convention {convention!r}") from None


def half_wave_plate_matrix(angle_deg: float) -> np.ndarray:
    t = 2 * np.deg2rad(angle_deg)
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, s], [s, -c]], dtype=complex)


class Component:
    """Base class.  ``block`` returns the touched indices and their matrix,
    or ``None`` when the element has no mode-transfer action."""

    def labels(self, registry: ModeRegistry) -> tuple[str, ...]:
        raise NotImplementedError

    def indices(self, registry: ModeRegistry) -> tuple[int, ...]:
        return tuple(registry.index(lab) for lab in self.labels(registry))

    def block(self, registry: ModeRegistry, convention: str):
        return None


def _fiber_labels(registry: ModeRegistry, fiber: str) -> tuple[str, str]:
    h, v = fiber + "H", fiber + "V"
    for lab in (h, v):
        m = registry.modes[registry.index(lab)]
        if m.kind != FIBER:
            raise StateError(f"{lab!r} is not a fiber polarization mode")
    return h, v


@dataclass(frozen=True)
class BeamSplitter50(Component):
    port_a: str
    port_b: str

    def labels(self, registry):
        return (self.port_a, self.port_b)

    def block(self, registry, convention):
        return self.indices(registry), beam_splitter_matrix(convention)


@dataclass(frozen=True)
class PhaseShifter(Component):
    port: str
    phase: float  # rad, per photon

    def labels(self, registry):
        return (self.port,)

    def block(self, registry, convention):
        return self.indices(registry), np.array([[np.exp(1j * self.phase)]])


@dataclass(frozen=True)
class SfwmSource(Component):
    port: str
    pair_amplitude: complex = 1.0

    def labels(self, registry):
        return (self.port,)


@dataclass(frozen=True)
class GratingMapper2D(Component):
    """2-D grating: ``in_top`` couples to the fiber's H mode, ``in_bottom`` to V."""

    in_top: str
    in_bottom: str
    out_fiber: str

    def labels(self, registry):
        h, v = _fiber_labels(registry, self.out_fiber)
        return (self.in_top, self.in_bottom, h, v)

    def block(self, registry, convention):
        # swap in_top <-> H and in_bottom <-> V
        p = np.zeros((4, 4), dtype=complex)
        p[2, 0] = p[0, 2] = p[3, 1] = p[1, 3] = 1
        return self.indices(registry), p


@dataclass(frozen=True)
class HalfWavePlate(Component):
    fiber: str
    angle: float  # degrees

    def __post_init__(self):
        if not 0 <= self.angle < 180:
            raise StateError(f"half-wave plate angle {self.angle} outside [0, 180)")

    def labels(self, registry):
        return _fiber_labels(registry, self.fiber)

    def block(self, registry, convention):
        return self.indices(registry), half_wave_plate_matrix(self.angle)


@dataclass(frozen=True)
class Polarizer(Component):
    """Projective filter; it selects detection modes and has no unitary action."""

    fiber: str
    pass_axis: str = "H"

    def __post_init__(self):
        if self.pass_axis not in ("H", "V"):
            raise StateError(f"invalid polarizer axis {self.pass_axis!r}")

    def labels(self, registry):
        return _fiber_labels(registry, self.fiber)

    @property
    def pass_label(self) -> str:
        return self.fiber + self.pass_axis


@dataclass(frozen=True)
class FiberCoupler50(Component):
    fiber_a: str
    fiber_b: str

    def labels(self, registry):
        return _fiber_labels(registry, self.fiber_a) + _fiber_labels(registry, self.fiber_b)

    def block(self, registry, convention):
        b = beam_splitter_matrix(convention)
        u = np.zeros((4, 4), dtype=complex)
        # index order (aH, aV, bH, bV); couple aH-bH and aV-bV
        for pol in (0, 1):
            idx = [pol, 2 + pol]
            u[np.ix_(idx, idx)] = b
        return self.indices(registry), u


@dataclass(frozen=True)
class DelayLine(Component):
    """Relative delay in ps; acts through the spectral overlap, not here."""

    fiber: str
    delay: float

    def labels(self, registry):
        return _fiber_labels(registry, self.fiber)


@dataclass(frozen=True)
class PolarizationRotator(Component):
    fiber: str
    unitary: tuple = ((1, 0), (0, 1))

    def __post_init__(self):
        u = np.array(self.unitary, dtype=complex)
        if u.shape != (2, 2):
            raise StateError("polarization rotator needs a 2x2 matrix")
        check_unitary(u)

    def labels(self, registry):
        return _fiber_labels(registry, self.fiber)

    def block(self, registry, convention):
        return self.indices(registry), np.array(self.unitary, dtype=complex)


class CircuitGraph:
    """Ordered stages of components; components within a stage act on disjoint modes."""

    def __init__(self, registry: ModeRegistry, stages: Sequence[Sequence[Component]]):
        self.registry = registry
        self.stages = tuple(tuple(stage) for stage in stages)
        for n, stage in enumerate(self.stages):
            seen: set[int] = set()
            for comp in stage:
                idx = comp.indices(registry)
                if len(set(idx)) != len(idx):
                    raise StateError(f"{comp!r} repeats a port")
                if seen.intersection(idx):
                    raise StateError(f"stage {n}: {comp!r} overlaps another component")
                seen.update(idx)

    def components(self):
        for stage in self.stages:
            yield from stage

    def find(self, kind: type) -> list:
        return [c for c in self.components() if isinstance(c, kind)]


def compile_unitary(graph: CircuitGraph, convention: str = "symmetric") -> np.ndarray:
    m = len(graph.registry)
    u = np.eye(m, dtype=complex)
    for stage in graph.stages:
        s = np.eye(m, dtype=complex)
        for comp in stage:
            blk = comp.block(graph.registry, convention)
            if blk is None:
                continue
            idx, mat = blk
            s[np.ix_(idx, idx)] = mat
        u = s @ u
    check_unitary(u)
    return u
