"""Two-photon states over a registry of optical modes.

A state is stored as a symmetric amplitude matrix ``A`` so that the ket is
``sum_jk A[j, k] a_j^dag a_k^dag |0>``.  With this convention

* ``|2>`` in mode ``j`` has ``A[j, j] = 1/sqrt(2)``,
* ``|1_j 1_k>`` has ``A[j, k] = A[k, j] = 1/2``,
* the squared norm is ``2 * sum |A|^2``.

Linear optics acts on creation operators as ``a_j^dag -> sum_k U[k, j] a_k^dag``,
which maps the amplitude matrix to ``U A U^T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NORM_TOL = 1e-12
UNITARY_TOL = 1e-10

ON_CHIP = "on-chip-path"
FIBER = "fiber-polarization"


class StateError(ValueError):
    """Raised for invalid states, registries or transformations."""


@dataclass(frozen=True)
class Mode:
    label: str
    kind: str = ON_CHIP
    polarization: str | None = None
    center_frequency: float = 193.1  # THz

    def __post_init__(self):
        if self.kind not in (ON_CHIP, FIBER):
            raise StateError(f"unknown mode kind {self.kind!r}")
        if self.kind == FIBER and self.polarization not in ("H", "V"):
            raise StateError(f"fiber mode {self.label!r} needs polarization H or V")
        if self.kind == ON_CHIP and self.polarization is not None:
            raise StateError(f"on-chip mode {self.label!r} cannot carry a polarization")
        if not self.center_frequency > 0:
            raise StateError("center_frequency must be positive")


@dataclass(frozen=True)
class ModeRegistry:
    modes: tuple[Mode, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        modes = tuple(self.modes)
        object.__setattr__(self, "modes", modes)
        index = {}
        for i, m in enumerate(modes):
            if m.label in index:
                raise StateError(f"duplicate mode label {m.label!r}")
            index[m.label] = i
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_labels(cls, labels: Iterable[str], center_frequency: float = 193.1) -> ModeRegistry:
        return cls(tuple(Mode(lab, ON_CHIP, None, center_frequency) for lab in labels))

    def __len__(self) -> int:
        return len(self.modes)

    def __contains__(self, label: str) -> bool:
        return label in self._index

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise StateError(f"unknown mode label {label!r}") from None

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.modes)

    def fiber_pair(self, fiber: str) -> tuple[int, int]:
        """Indices of the (H, V) modes of a fiber, labelled ``<fiber>H``/``<fiber>V``."""
        return self.index(fiber + "H"), self.index(fiber + "V")


def _norm2(a: np.ndarray) -> float:
    return float(2.0 * np.sum(np.abs(a) ** 2))


def _as_index(state: "TwoPhotonState", mode) -> int:
    if isinstance(mode, str):
        return state.registry.index(mode)
    mode = int(mode)
    if not 0 <= mode < len(state.registry):
        raise StateError(f"mode index {mode} out of range")
    return mode


class TwoPhotonState:
    """Immutable pure two-photon state.

    The constructor symmetrizes and renormalizes ``amplitudes``; use
    :meth:`_trusted` internally when both already hold.
    """

    __slots__ = ("_a", "registry")

    def __init__(self, amplitudes, registry: ModeRegistry):
        a = np.array(amplitudes, dtype=complex)
        m = len(registry)
        if a.shape != (m, m):
            raise StateError(f"amplitude matrix must be {m}x{m}, got {a.shape}")
        a = (a + a.T) / 2
        n2 = _norm2(a)
        if not n2 > 0 or not np.isfinite(n2):
            raise StateError("zero or non-finite state")
        a = a / np.sqrt(n2)
        self._init(a, registry)

    def _init(self, a, registry):
        a.setflags(write=False)
        self._a = a
        self.registry = registry

    @classmethod
    def _trusted(cls, a: np.ndarray, registry: ModeRegistry) -> TwoPhotonState:
        obj = cls.__new__(cls)
        obj._init(a, registry)
        return obj

    @property
    def amplitudes(self) -> np.ndarray:
        return self._a

    @property
    def norm(self) -> float:
        return float(np.sqrt(_norm2(self._a)))

    def __repr__(self):
        nz = [(self.registry.labels[j], self.registry.labels[k], complex(self._a[j, k]))
              for j, k in zip(*np.nonzero(np.abs(np.triu(self._a)) > 1e-14))]
        return f"TwoPhotonState({nz})"


@dataclass(frozen=True)
class MixedTwoPhotonState:
    """Finite ensemble of pure two-photon states."""

    branches: tuple[tuple[float, TwoPhotonState], ...]

    def __post_init__(self):
        branches = tuple((float(w), s) for w, s in self.branches)
        if not branches:
            raise StateError("empty ensemble")
        if any(w < 0 for w, _ in branches):
            raise StateError("negative branch weight")
        if abs(sum(w for w, _ in branches) - 1.0) > NORM_TOL:
            raise StateError("branch weights must sum to 1")
        reg = branches[0][1].registry
        if any(s.registry is not reg and s.registry != reg for _, s in branches):
            raise StateError("branches must share one registry")
        object.__setattr__(self, "branches", branches)

    @property
    def registry(self) -> ModeRegistry:
        return self.branches[0][1].registry

    def expectation(self, fn) -> float:
        """Weighted average of ``fn(state)`` over the branches."""
        return float(sum(w * fn(s) for w, s in self.branches if w > 0))

    def map(self, fn) -> MixedTwoPhotonState:
        return MixedTwoPhotonState(tuple((w, fn(s)) for w, s in self.branches))


def _same_registry(a: ModeRegistry, b: ModeRegistry) -> bool:
    return a is b or a == b


def make_pair_in_mode(registry: ModeRegistry, mode_label: str) -> TwoPhotonState:
    j = registry.index(mode_label)
    a = np.zeros((len(registry), len(registry)), dtype=complex)
    a[j, j] = 1 / np.sqrt(2)
    return TwoPhotonState._trusted(a, registry)


def make_split_pair(registry: ModeRegistry, mode_j: str, mode_k: str) -> TwoPhotonState:
    """``|1_j 1_k>`` for two distinct modes."""
    j, k = registry.index(mode_j), registry.index(mode_k)
    if j == k:
        raise StateError("use make_pair_in_mode for a single mode")
    a = np.zeros((len(registry), len(registry)), dtype=complex)
    a[j, k] = a[k, j] = 0.5
    return TwoPhotonState._trusted(a, registry)


def superpose(states: Sequence[tuple[complex, TwoPhotonState]]) -> TwoPhotonState:
    """Coherent sum ``sum_i c_i |psi_i>``, renormalized."""
    if not states:
        raise StateError("nothing to superpose")
    reg = states[0][1].registry
    total = np.zeros_like(states[0][1].amplitudes)
    for c, s in states:
        if not _same_registry(s.registry, reg):
            raise StateError("states live on different registries")
        total = total + complex(c) * s.amplitudes
    n2 = _norm2(total)
    if n2 < NORM_TOL ** 2:
        raise StateError("superposition cancels to the zero state")
    return TwoPhotonState(total, reg)


def check_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> None:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise StateError(f"unitary must be square, got shape {u.shape}")
    err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if err > tol:
        raise StateError(f"matrix is not unitary (max deviation {err:.3e})")


def apply_unitary(state: TwoPhotonState, u) -> TwoPhotonState:
    u = np.asarray(u, dtype=complex)
    m = len(state.registry)
    if u.shape != (m, m):
        raise StateError(f"unitary is {u.shape}, registry has {m} modes")
    check_unitary(u)
    a = u @ state.amplitudes @ u.T
    a = (a + a.T) / 2
    drift = abs(_norm2(a) - 1.0)
    if drift > NORM_TOL:
        raise StateError(f"norm drifted by {drift:.3e}")
    return TwoPhotonState._trusted(a, state.registry)


def prob_coincidence(state: TwoPhotonState, mode_j, mode_k) -> float:
    j, k = _as_index(state, mode_j), _as_index(state, mode_k)
    if j == k:
        raise StateError("coincidence needs two distinct modes; use prob_bunched")
    return float(abs(2 * state.amplitudes[j, k]) ** 2)


def prob_bunched(state: TwoPhotonState, mode_j) -> float:
    j = _as_index(state, mode_j)
    return float(2 * abs(state.amplitudes[j, j]) ** 2)


def mean_photon_number(state: TwoPhotonState, mode_j) -> float:
    j = _as_index(state, mode_j)
    a = state.amplitudes
    return float(4 * np.sum(np.abs(a[j]) ** 2))


def inner(state_a: TwoPhotonState, state_b: TwoPhotonState) -> complex:
    if not _same_registry(state_a.registry, state_b.registry):
        raise StateError("states live on different registries")
    return complex(2 * np.sum(state_a.amplitudes.conj() * state_b.amplitudes))


def fidelity(state_a: TwoPhotonState, state_b: TwoPhotonState) -> float:
    return float(min(1.0, abs(inner(state_a, state_b)) ** 2))


def fock_amplitudes(a: np.ndarray) -> dict[tuple[int, int], complex]:
    """Occupation-basis amplitudes keyed by the sorted pair of occupied modes.

    ``(j, j)`` is ``|2_j>`` and ``(j, k)`` with ``j < k`` is ``|1_j 1_k>``.
    """
    a = np.asarray(a)
    out = {}
    m = a.shape[0]
    for j in range(m):
        out[(j, j)] = complex(np.sqrt(2) * a[j, j])
        for k in range(j + 1, m):
            out[(j, k)] = complex(a[j, k] + a[k, j])
    return out
