"""Brute-force creation-operator expansion.

Independent check on :func:`bellchip.state.apply_unitary` composed with
:func:`bellchip.components.compile_unitary`.  A two-photon state is a
quadratic polynomial in commuting creation operators, stored as
``{(j, k): coeff}`` with ``j <= k``.  Each component substitutes every
creation operator it touches by a linear form, written out by hand below.
"""

from __future__ import annotations

import cmath
import math
from collections import defaultdict

from .components import (
    BeamSplitter50,
    FiberCoupler50,
    GratingMapper2D,
    HalfWavePlate,
    PhaseShifter,
    PolarizationRotator,
)

R2 = 1 / math.sqrt(2)


def polynomial_from_matrix(a) -> dict:
    m = len(a)
    poly = defaultdict(complex)
    for j in range(m):
        for k in range(m):
            c = complex(a[j][k])
            if c != 0:
                poly[(min(j, k), max(j, k))] += c
    return dict(poly)


def _bs_rule(p, q, convention):
    if convention == "symmetric":
        return {p: [(p, R2), (q, 1j * R2)], q: [(p, 1j * R2), (q, R2)]}
    if convention == "hadamard":
        return {p: [(p, R2), (q, R2)], q: [(p, R2), (q, -R2)]}
    raise ValueError(convention)


def substitution_rule(comp, registry, convention="symmetric") -> dict:
    """Map ``mode -> [(mode', coeff), ...]`` for the modes a component touches."""
    ix = registry.index
    if isinstance(comp, BeamSplitter50):
        return _bs_rule(ix(comp.port_a), ix(comp.port_b), convention)
    if isinstance(comp, PhaseShifter):
        p = ix(comp.port)
        return {p: [(p, cmath.exp(1j * comp.phase))]}
    if isinstance(comp, HalfWavePlate):
        h, v = ix(comp.fiber + "H"), ix(comp.fiber + "V")
        c, s = math.cos(math.radians(2 * comp.angle)), math.sin(math.radians(2 * comp.angle))
        return {h: [(h, c), (v, s)], v: [(h, s), (v, -c)]}
    if isinstance(comp, PolarizationRotator):
        h, v = ix(comp.fiber + "H"), ix(comp.fiber + "V")
        r = comp.unitary
        return {h: [(h, complex(r[0][0])), (v, complex(r[1][0]))],
                v: [(h, complex(r[0][1])), (v, complex(r[1][1]))]}
    if isinstance(comp, FiberCoupler50):
        rule = {}
        for pol in "HV":
            rule.update(_bs_rule(ix(comp.fiber_a + pol), ix(comp.fiber_b + pol), convention))
        return rule
    if isinstance(comp, GratingMapper2D):
        top, bot = ix(comp.in_top), ix(comp.in_bottom)
        h, v = ix(comp.out_fiber + "H"), ix(comp.out_fiber + "V")
        return {top: [(h, 1)], h: [(top, 1)], bot: [(v, 1)], v: [(bot, 1)]}
    return {}


def substitute(poly: dict, rule: dict) -> dict:
    out = defaultdict(complex)
    for (j, k), c in poly.items():
        for jj, cj in rule.get(j, [(j, 1)]):
            for kk, ck in rule.get(k, [(k, 1)]):
                out[(min(jj, kk), max(jj, kk))] += c * cj * ck
    return dict(out)


def evolve(poly: dict, graph, convention="symmetric") -> dict:
    for comp in graph.components():
        poly = substitute(poly, substitution_rule(comp, graph.registry, convention))
    return poly


def fock_from_polynomial(poly: dict, m: int) -> dict:
    """Occupation amplitudes: ``a_j^dag^2 |0> = sqrt(2) |2_j>``."""
    out = {}
    for j in range(m):
        for k in range(j, m):
            c = poly.get((j, k), 0j)
            out[(j, k)] = c * math.sqrt(2) if j == k else c
    return out


# -- random circuits for equivalence checks ------------------------------------

def random_circuit(rng, max_components: int = 6):
    """Random 4-mode circuit of 1..``max_components`` single-component stages.

    Half of the draws use two on-chip paths plus one fiber (so grating
    mappers appear), the other half two fibers (so fiber couplers appear).
    """
    import numpy as np

    from .components import CircuitGraph
    from .state import FIBER, ON_CHIP, Mode, ModeRegistry

    if rng.random() < 0.5:
        reg = ModeRegistry((Mode("W1", ON_CHIP), Mode("W2", ON_CHIP),
                            Mode("P5H", FIBER, "H"), Mode("P5V", FIBER, "V")))
        fibers = ["P5"]
    else:
        reg = ModeRegistry(tuple(Mode(f + p, FIBER, p) for f in ("P5", "P6") for p in "HV"))
        fibers = ["P5", "P6"]
    labels = list(reg.labels)

    def unitary2():
        z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        q, r = np.linalg.qr(z)
        q = q * (np.diag(r) / np.abs(np.diag(r)))
        return tuple(tuple(complex(x) for x in row) for row in q)

    kinds = ["bs", "ps", "hwp", "rot"] + (["map"] if len(fibers) == 1 else ["coupler"])
    stages = []
    for _ in range(int(rng.integers(1, max_components + 1))):
        kind = kinds[int(rng.integers(len(kinds)))]
        if kind == "bs":
            a, b = rng.choice(len(labels), 2, replace=False)
            comp = BeamSplitter50(labels[a], labels[b])
        elif kind == "ps":
            comp = PhaseShifter(labels[int(rng.integers(len(labels)))], float(rng.uniform(0, 2 * math.pi)))
        elif kind == "hwp":
            comp = HalfWavePlate(fibers[int(rng.integers(len(fibers)))], float(rng.uniform(0, 180)))
        elif kind == "rot":
            comp = PolarizationRotator(fibers[int(rng.integers(len(fibers)))], unitary2())
        elif kind == "map":
            top, bot = ("W1", "W2") if rng.random() < 0.5 else ("W2", "W1")
            comp = GratingMapper2D(top, bot, "P5")
        else:
            comp = FiberCoupler50(*(("P5", "P6") if rng.random() < 0.5 else ("P6", "P5")))
        stages.append([comp])
    return CircuitGraph(reg, stages)


def random_state_matrix(rng, m: int = 4):
    import numpy as np

    a = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    a = (a + a.T) / 2
    return a / np.sqrt(2 * np.sum(np.abs(a) ** 2))
