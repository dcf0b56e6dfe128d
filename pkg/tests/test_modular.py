import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import random_density, random_unitary

from vnlab.crossed import GroupAction
from vnlab.dynsys import CovariantSystem, is_free, load_action_corpus
from vnlab.errors import PreconditionError
from vnlab.groups import FiniteAbelianGroup
from vnlab.modular import (
    cocycle_chain_residual,
    connes_cocycle,
    connes_cocycle_operator_residual,
    dual_weight_check,
    kms_check,
    left_hilbert_algebra_check,
    relative_modular,
    standard_form,
)
from vnlab.vna import OperatorAlgebra, direct_sum_blocks

Z1, Z2 = FiniteAbelianGroup((1,)), FiniteAbelianGroup((2,))
SX = np.array([[0, 1], [1, 0]], dtype=complex)
RHO = np.diag([1 / 3, 2 / 3])
TIMES = (0.3, 1.0, np.sqrt(2))

ALGEBRAS = {
    "M2": lambda: OperatorAlgebra.full(2),
    "M3": lambda: OperatorAlgebra.full(3),
    "M2+M1": lambda: direct_sum_blocks([(2, 1), (1, 1)]),
}


def unit(d, i, j):
    m = np.zeros((d, d), dtype=complex)
    m[i, j] = 1
    return m


def faithful_state(M, rng):
    """A random density lying in M with full rank on every block."""
    rho = M.project(random_density(M.d, rng))
    return (rho + rho.conj().T) / 2


def matrix_power(rho, z):
    w, v = np.linalg.eigh(rho)
    return (v * w.astype(complex) ** z) @ v.conj().T


# standard form


def test_delta_spectrum_m2():
    sf = standard_form(OperatorAlgebra.full(2), RHO)
    # eigenvalues rho_i / rho_j of x -> rho x rho^{-1}
    np.testing.assert_allclose(sf.spectrum(), [0.5, 1, 1, 2], atol=1e-12)


def test_tracial_delta_is_identity():
    sf = standard_form(OperatorAlgebra.full(2), np.eye(2) / 2)
    np.testing.assert_allclose(sf.delta, np.eye(4), atol=1e-12)


def test_abelian_delta_is_identity(rng):
    M = OperatorAlgebra.diagonal(3)
    sf = standard_form(M, faithful_state(M, rng))
    np.testing.assert_allclose(sf.delta, np.eye(3), atol=1e-12)


def test_standard_form_rejects_non_faithful():
    with pytest.raises(PreconditionError, match="sector"):
        standard_form(OperatorAlgebra.full(2), np.diag([1.0, 0.0]))


@pytest.mark.parametrize("name", sorted(ALGEBRAS))
def test_standard_form_invariants_random_states(name):
    rng = np.random.default_rng(sorted(ALGEBRAS).index(name))
    M = ALGEBRAS[name]()
    for _ in range(5):
        sf = standard_form(M, faithful_state(M, rng))
        for key, val in sf.invariants().items():
            assert val < 1e-9, key


def test_modular_automorphism_is_a_group(rng):
    M = direct_sum_blocks([(2, 1), (1, 1)])
    sf = standard_form(M, faithful_state(M, rng))
    x = M.random_element(rng)
    for t, s in [(0.3, 1.1), (-0.7, np.sqrt(2))]:
        lhs = sf.modular_automorphism(x, t + s)
        rhs = sf.modular_automorphism(sf.modular_automorphism(x, s), t)
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)
    # on a factor sigma_t(x) = rho^{it} x rho^{-it}
    F = OperatorAlgebra.full(2)
    sf = standard_form(F, RHO)
    x = F.random_element(rng)
    np.testing.assert_allclose(
        sf.modular_automorphism(x, 0.3), matrix_power(RHO, 0.3j) @ x @ matrix_power(RHO, -0.3j), atol=1e-12
    )


# KMS


def test_kms_example():
    sf = standard_form(OperatorAlgebra.full(2), RHO)
    x, y = unit(2, 0, 1), unit(2, 1, 0)
    assert sf.phi(x @ y) == pytest.approx(1 / 3)
    assert sf.phi(y @ sf.sigma_minus_i(x)) == pytest.approx(1 / 3)
    assert kms_check(sf, x, y) < 1e-12
    assert kms_check(sf, np.eye(2), y) < 1e-12


@pytest.mark.parametrize("name", sorted(ALGEBRAS))
def test_kms_random(name):
    rng = np.random.default_rng(7)
    M = ALGEBRAS[name]()
    for _ in range(5):
        sf = standard_form(M, faithful_state(M, rng))
        assert kms_check(sf, M.random_element(rng), M.random_element(rng)) < 1e-9


# relative modular operators and cocycles


def test_relative_modular_spectrum():
    rel, _ = relative_modular(np.eye(2) / 2, RHO, OperatorAlgebra.full(2))
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(rel)), [0.75, 0.75, 1.5, 1.5], atol=1e-12)


def test_relative_modular_reduces_to_delta():
    M = OperatorAlgebra.full(2)
    rel, _ = relative_modular(RHO, RHO, M)
    np.testing.assert_allclose(rel, standard_form(M, RHO).delta, atol=1e-12)


def test_relative_modular_abelian():
    M = OperatorAlgebra.diagonal(2)
    rel, _ = relative_modular(np.diag([0.5, 0.5]), RHO, M)
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(rel)), [0.75, 1.5], atol=1e-12)


def test_cocycle_examples():
    M = OperatorAlgebra.full(2)
    psi = np.diag([0.25, 0.75])
    np.testing.assert_allclose(connes_cocycle(RHO, RHO, M, 0.7), np.eye(2), atol=1e-12)
    np.testing.assert_allclose(connes_cocycle(psi, RHO, M, 0.0), np.eye(2), atol=1e-12)
    expect = matrix_power(psi, 0.7j) @ matrix_power(RHO, -0.7j)
    np.testing.assert_allclose(connes_cocycle(psi, RHO, M, 0.7), expect, atol=1e-12)
    assert connes_cocycle_operator_residual(psi, RHO, M, 0.7) < 1e-10


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(["M2", "M2+M1"]), st.integers(0, 10_000), st.floats(-3, 3))
def test_cocycle_chain_rule(name, seed, t):
    rng = np.random.default_rng(seed)
    M = ALGEBRAS[name]()
    psi, phi, chi = (faithful_state(M, rng) for _ in range(3))
    assert cocycle_chain_residual(psi, phi, chi, M, t) < 1e-9
    u = connes_cocycle(psi, phi, M, t)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(M.d), atol=1e-9)
    assert M.residual(u) < 1e-9


# dual weight


def m2_sigma_x():
    return GroupAction.from_generators(Z2, OperatorAlgebra.full(2), [SX])


def test_dual_weight_m2_sigma_x():
    rep = dual_weight_check(m2_sigma_x(), RHO, times=TIMES)
    for key in ("sigma_pi", "sigma_lambda", "tomita_delta", "conjugation"):
        assert rep[key] < 1e-9, key
    assert not rep["invariant_state"]
    for t in TIMES:
        expect = matrix_power(SX @ RHO @ SX, 1j * t) @ matrix_power(RHO, -1j * t)
        np.testing.assert_allclose(rep["cocycles"][(float(t), 1)], expect, atol=1e-10)
        np.testing.assert_allclose(rep["cocycles"][(float(t), 0)], np.eye(2), atol=1e-10)


def test_dual_weight_invariant_state_has_trivial_cocycle():
    rep = dual_weight_check(m2_sigma_x(), np.eye(2) / 2)
    assert rep["invariant_state"]
    for c in rep["cocycles"].values():
        np.testing.assert_allclose(c, np.eye(2), atol=1e-10)


def test_dual_weight_trivial_group():
    M = OperatorAlgebra.full(2)
    rep = dual_weight_check(GroupAction.trivial(Z1, M), RHO)
    assert rep["sigma_pi"] < 1e-10 and rep["tomita_delta"] < 1e-10


def random_representation_generators(group, h, rng):
    """Commuting unitaries on C^h with u_j^{n_j} = 1: a common eigenbasis and root-of-unity eigenvalues."""
    v = random_unitary(h, rng)
    gens = []
    for n in group.orders:
        if n > 1:
            phases = np.exp(2j * np.pi * rng.integers(0, n, h) / n)
            gens.append((v * phases) @ v.conj().T)
    return gens


def test_dual_weight_on_free_corpus_covariant_systems():
    rng = np.random.default_rng(11)
    free = [s for s in load_action_corpus() if is_free(s)]
    for s in free:
        for h in (1, 2):
            cov = CovariantSystem.from_generators(s, random_representation_generators(s.group, h, rng))
            assert cov.restriction_residual() < 1e-12
            rep = dual_weight_check(cov.action, faithful_state(cov.algebra, rng))
            for key in ("sigma_pi", "sigma_lambda", "tomita_delta", "conjugation"):
                assert rep[key] < 1e-9, (s.to_dict(), h, key)


def test_dual_weight_rejects_non_action():
    u = np.array([[1, 0], [0, 1j]])
    bad = GroupAction.from_generators(Z2, OperatorAlgebra.full(2), [u])
    with pytest.raises(PreconditionError):
        dual_weight_check(bad, RHO)


def test_dual_weight_rejects_non_faithful():
    with pytest.raises(PreconditionError):
        dual_weight_check(m2_sigma_x(), np.diag([1.0, 0.0]))


# left Hilbert algebra


def test_left_hilbert_algebra_qubit():
    act = GroupAction.from_generators(Z2, OperatorAlgebra.full(2), [np.diag([1.0, -1.0])])
    rep = left_hilbert_algebra_check(act, RHO)
    for key, val in rep.items():
        assert val < 1e-10, key


def test_left_hilbert_algebra_non_invariant_state():
    rep = left_hilbert_algebra_check(m2_sigma_x(), RHO, samples=5, seed=3)
    for key, val in rep.items():
        assert val < 1e-10, key
