import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import born, random_density

from vnlab.errors import PreconditionError
from vnlab.groups import FiniteAbelianGroup
from vnlab.kt import coupling_EstarV, spectral_measure
from vnlab.measure import (
    instrument,
    instrument_via_invariant_mean,
    outcome_distribution,
    perfect_correlation_check,
    post_state,
    repeatability_check,
    sample_outcomes,
)
from vnlab.vna import OperatorAlgebra, StateOnAlgebra

Z1, Z2, Z3 = (FiniteAbelianGroup((n,)) for n in (1, 2, 3))
W3 = np.exp(2j * np.pi / 3)
SZ = np.diag([1.0, -1.0])


def qubit():
    e = spectral_measure(OperatorAlgebra.diagonal(2), [np.eye(2), SZ], Z2)
    return e, coupling_EstarV(e)


def qutrit():
    u = np.diag([1, W3, W3 * W3])
    e = spectral_measure(OperatorAlgebra.diagonal(3), [np.linalg.matrix_power(u, k) for k in range(3)], Z3)
    return e, coupling_EstarV(e)


def vector_density(xi):
    xi = np.asarray(xi, dtype=complex)
    return np.outer(xi, xi.conj())


def test_instrument_born_rule_qubit():
    e, c = qubit()
    a, b = 0.6, 0.8j
    rho = vector_density([a, b])
    assert instrument([0], rho, np.eye(2), c, 2) == pytest.approx(abs(a) ** 2, abs=1e-12)
    assert instrument([1], rho, np.eye(2), c, 2) == pytest.approx(abs(b) ** 2, abs=1e-12)
    assert instrument([0, 1], rho, np.eye(2), c, 2) == pytest.approx(1.0, abs=1e-12)
    assert instrument([], rho, np.eye(2), c, 2) == 0


def test_instrument_accepts_vector_states():
    _, c = qubit()
    state = StateOnAlgebra.from_vector(np.array([0.6, 0.8j]))
    assert instrument([0], state, np.eye(2), c, 2) == pytest.approx(0.36, abs=1e-12)


def test_instrument_errors():
    _, c = qubit()
    rho = vector_density([1, 0])
    with pytest.raises(PreconditionError):
        instrument([2], rho, np.eye(2), c, 2)
    with pytest.raises(PreconditionError):
        instrument([0], 2 * rho, np.eye(2), c, 2)


def test_post_state_qubit_sgn_atom():
    _, c = qubit()
    res = post_state([1], vector_density([0.6, 0.8j]), c, 2)
    assert res.probability == pytest.approx(0.64, abs=1e-12)
    np.testing.assert_allclose(res.normalized, np.diag([0, 1.0]), atol=1e-12)


def test_post_state_eigenstate_is_unchanged():
    _, c = qubit()
    rho = vector_density([1, 0])
    res = post_state([0], rho, c, 2)
    assert res.probability == pytest.approx(1.0)
    np.testing.assert_allclose(res.normalized, rho, atol=1e-12)


def test_post_state_zero_probability_is_flagged():
    _, c = qubit()
    res = post_state([1], vector_density([1, 0]), c, 2)
    assert res.probability == 0
    assert not res.defined
    np.testing.assert_allclose(res.unnormalized, 0, atol=1e-14)


def test_qutrit_uniform_superposition():
    e, c = qutrit()
    rho = vector_density(np.ones(3) / np.sqrt(3))
    np.testing.assert_allclose(outcome_distribution(rho, e, c), [1 / 3] * 3, atol=1e-12)


def test_perfect_correlation_qubit_and_trivial():
    e, c = qubit()
    assert all(r["passed"] for r in perfect_correlation_check(c, e))
    t = spectral_measure(OperatorAlgebra.scalars(2), [np.eye(2)], Z1)
    assert all(r["passed"] for r in perfect_correlation_check(coupling_EstarV(t), t))


def test_perfect_correlation_negative_control():
    # coupling built from the measure with the two characters swapped
    e, _ = qubit()
    swapped = spectral_measure(OperatorAlgebra.diagonal(2), [np.eye(2), -SZ], Z2)
    report = perfect_correlation_check(coupling_EstarV(swapped), e)
    assert not any(r["passed"] for r in report)
    assert all(r["residual"] == pytest.approx(np.sqrt(2)) for r in report)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_post_state_matches_born_oracle(seed):
    e, c = qutrit()
    rho = random_density(3, np.random.default_rng(seed))
    for atom in e.atoms:
        p = atom.projection
        res = post_state([atom.character], rho, c, 3)
        expect = born(rho, p)
        assert res.probability == pytest.approx(expect, abs=1e-10)
        np.testing.assert_allclose(res.normalized, p @ rho @ p / expect, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.integers(0, 2), max_size=3), st.lists(st.integers(0, 2), max_size=3))
def test_instrument_additivity(seed, d1, d2):
    rng = np.random.default_rng(seed)
    d1 = set(d1)
    d2 = set(d2) - d1
    _, c = qutrit()
    rho = random_density(3, rng)
    b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    whole = instrument(d1 | d2, rho, b, c, 3)
    parts = instrument(d1, rho, b, c, 3) + instrument(d2, rho, b, c, 3)
    assert whole == pytest.approx(parts, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 2))
def test_neutral_position_matches_invariant_mean(seed, g):
    rng = np.random.default_rng(seed)
    e, c = qutrit()
    rho = random_density(3, rng)
    b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    direct = instrument([g], rho, b, c, 3)
    mean = instrument_via_invariant_mean([g], rho, b, c, e.group)
    assert direct == pytest.approx(mean, abs=1e-10)


def test_repeatability():
    e, c = qutrit()
    rho = random_density(3, np.random.default_rng(3))
    rep = repeatability_check(rho, e, c)
    assert rep["passed"] and rep["residual"] < 1e-12


def test_sampling_is_seeded_and_consistent():
    e, c = qubit()
    rho = vector_density([0.6, 0.8])
    a = sample_outcomes(rho, e, 2000, seed=1, coupling=c)
    b = sample_outcomes(rho, e, 2000, seed=1, coupling=c)
    np.testing.assert_array_equal(a, b)
    assert a.sum() == 2000
    assert abs(a[0] / 2000 - 0.36) < 0.05
