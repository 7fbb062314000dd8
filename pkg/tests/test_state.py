import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bellchip.circuit import bell_state
from bellchip.state import (
    FIBER,
    Mode,
    ModeRegistry,
    MixedTwoPhotonState,
    StateError,
    TwoPhotonState,
    apply_unitary,
    fidelity,
    make_pair_in_mode,
    make_split_pair,
    mean_photon_number,
    prob_bunched,
    prob_coincidence,
    superpose,
)

R2 = 1 / math.sqrt(2)
SYM_BS = R2 * np.array([[1, 1j], [1j, 1]])


@pytest.fixture
def reg4():
    return ModeRegistry.from_labels(["W1", "W2", "W3", "W4"])


@pytest.fixture
def reg2():
    return ModeRegistry.from_labels(["a", "b"])


def haar(m, rng):
    z = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(m, rng):
    a = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    return TwoPhotonState(a, ModeRegistry.from_labels([f"m{i}" for i in range(m)]))


def completeness(s):
    m = len(s.registry)
    total = sum(prob_bunched(s, j) for j in range(m))
    total += sum(prob_coincidence(s, j, k) for j in range(m) for k in range(j + 1, m))
    return total


# -- modes and registries --------------------------------------------------------

def test_mode_invariants():
    with pytest.raises(StateError):
        Mode("P5H", FIBER)  # fiber needs a polarization
    with pytest.raises(StateError):
        Mode("W1", polarization="H")
    with pytest.raises(StateError):
        Mode("W1", center_frequency=0.0)
    with pytest.raises(StateError):
        ModeRegistry.from_labels(["a", "a"])


def test_registry_lookup(reg4):
    assert reg4.index("W3") == 2
    assert "W4" in reg4 and "W5" not in reg4
    with pytest.raises(StateError):
        reg4.index("no-such")


# -- constructors ----------------------------------------------------------------

def test_pair_in_mode(reg4):
    s = make_pair_in_mode(reg4, "W1")
    assert s.amplitudes[0, 0] == pytest.approx(R2)
    assert s.norm == pytest.approx(1.0, abs=1e-15)
    assert make_pair_in_mode(reg4, "W3").amplitudes[2, 2] == pytest.approx(R2)
    with pytest.raises(StateError):
        make_pair_in_mode(reg4, "no-such")


def test_superpose_two_pairs(reg4):
    s = superpose([(R2, make_pair_in_mode(reg4, "W1")), (R2, make_pair_in_mode(reg4, "W2"))])
    np.testing.assert_allclose(s.amplitudes, np.diag([0.5, 0.5, 0, 0]), atol=1e-15)


def test_superpose_identity_and_cancellation(reg4):
    w1, w2 = make_pair_in_mode(reg4, "W1"), make_pair_in_mode(reg4, "W2")
    np.testing.assert_allclose(superpose([(1, w1), (0, w2)]).amplitudes, w1.amplitudes, atol=1e-15)
    with pytest.raises(StateError):
        superpose([(1, w1), (-1, w1)])


def test_superpose_registry_mismatch(reg4, reg2):
    with pytest.raises(StateError):
        superpose([(1, make_pair_in_mode(reg4, "W1")), (1, make_pair_in_mode(reg2, "a"))])


def test_constructor_symmetrizes():
    reg = ModeRegistry.from_labels(["a", "b"])
    s = TwoPhotonState([[0, 1], [0, 0]], reg)
    assert np.max(np.abs(s.amplitudes - s.amplitudes.T)) == 0
    assert s.norm == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(StateError):
        TwoPhotonState(np.zeros((2, 2)), reg)


def test_amplitudes_read_only(reg4):
    s = make_pair_in_mode(reg4, "W1")
    with pytest.raises(ValueError):
        s.amplitudes[0, 0] = 1


# -- transformations ---------------------------------------------------------------

def test_identity_unitary(reg4):
    s = make_pair_in_mode(reg4, "W2")
    np.testing.assert_array_equal(apply_unitary(s, np.eye(4)).amplitudes, s.amplitudes)


def test_beam_splitter_split_and_bunch(reg2):
    # (|2,0> + |0,2>)/sqrt(2) leaves split; (|2,0> - |0,2>)/sqrt(2) stays bunched
    plus = apply_unitary(TwoPhotonState(np.diag([0.5, 0.5]), reg2), SYM_BS)
    np.testing.assert_allclose(plus.amplitudes, [[0, 0.5j], [0.5j, 0]], atol=1e-15)
    assert prob_coincidence(plus, 0, 1) == pytest.approx(1.0, abs=1e-15)
    minus = apply_unitary(TwoPhotonState(np.diag([0.5, -0.5]), reg2), SYM_BS)
    np.testing.assert_allclose(minus.amplitudes, np.diag([0.5, -0.5]), atol=1e-15)
    assert prob_coincidence(minus, 0, 1) == pytest.approx(0.0, abs=1e-15)
    assert prob_bunched(minus, 0) == pytest.approx(0.5, abs=1e-15)


def test_non_unitary_and_dimension_mismatch(reg2):
    s = make_pair_in_mode(reg2, "a")
    with pytest.raises(StateError):
        apply_unitary(s, [[1, 0], [0, 1.001]])
    with pytest.raises(StateError):
        apply_unitary(s, np.eye(3))


def test_haar_norm_preservation():
    rng = np.random.default_rng(7)
    for _ in range(200):
        m = int(rng.integers(2, 9))
        s = random_state(m, rng)
        out = apply_unitary(s, haar(m, rng))
        assert abs(out.norm - 1) <= 1e-12
        assert np.max(np.abs(out.amplitudes - out.amplitudes.T)) == 0


# -- probabilities -----------------------------------------------------------------

def test_coincidence_examples(reg2):
    split = TwoPhotonState([[0, 0.5j], [0.5j, 0]], reg2)
    assert prob_coincidence(split, 0, 1) == pytest.approx(1.0)
    assert prob_bunched(split, 0) == 0.0
    assert prob_coincidence(make_pair_in_mode(reg2, "a"), 0, 1) == 0.0
    assert prob_bunched(make_pair_in_mode(reg2, "a"), 0) == pytest.approx(1.0)
    with pytest.raises(StateError):
        prob_coincidence(split, 1, 1)


def test_bell_state_hv_coincidence():
    s = bell_state(0.0)
    assert prob_coincidence(s, "P5H", "P6V") == pytest.approx(0.5, abs=1e-15)
    assert prob_coincidence(s, "P5V", "P6H") == pytest.approx(0.5, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2 ** 32 - 1))
def test_completeness(m, seed):
    s = random_state(m, np.random.default_rng(seed))
    assert completeness(s) == pytest.approx(1.0, abs=1e-12)
    assert sum(mean_photon_number(s, j) for j in range(m)) == pytest.approx(2.0, abs=1e-12)


# -- fidelity ------------------------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0, 2 * math.pi))
def test_fidelity_self_and_global_phase(seed, gamma):
    s = random_state(4, np.random.default_rng(seed))
    t = TwoPhotonState(np.exp(1j * gamma) * s.amplitudes, s.registry)
    assert fidelity(s, s) == pytest.approx(1.0, abs=1e-12)
    assert fidelity(s, t) == pytest.approx(1.0, abs=1e-12)


def test_bell_states_orthogonal():
    assert fidelity(bell_state(0.0), bell_state(math.pi)) == pytest.approx(0.0, abs=1e-15)


def test_fidelity_registry_mismatch(reg4, reg2):
    with pytest.raises(StateError):
        fidelity(make_pair_in_mode(reg4, "W1"), make_pair_in_mode(reg2, "a"))


# -- mixtures ----------------------------------------------------------------------

def test_mixed_state_weights(reg2):
    a, b = make_pair_in_mode(reg2, "a"), make_pair_in_mode(reg2, "b")
    mix = MixedTwoPhotonState(((0.25, a), (0.75, b)))
    assert mix.expectation(lambda s: prob_bunched(s, 0)) == pytest.approx(0.25)
    with pytest.raises(StateError):
        MixedTwoPhotonState(((0.5, a), (0.6, b)))
    with pytest.raises(StateError):
        MixedTwoPhotonState(((-0.1, a), (1.1, b)))
