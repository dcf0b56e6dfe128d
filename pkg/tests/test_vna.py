import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st
from oracles import block_invariant, random_density, span_equal, sylvester_commutant, word_closure

from vnlab.errors import DimensionMismatchError, PreconditionError
from vnlab.groups import FiniteAbelianGroup, regular_representation
from vnlab.vna import (
    BlockInvariant,
    OperatorAlgebra,
    StateOnAlgebra,
    center,
    central_support,
    commutant,
    direct_sum_blocks,
    generate,
    intersect,
    is_masa,
    qc_channel,
    relative_commutant,
    sector_decompose,
    tensor,
    wedderburn,
)


def unit(d, i, j):
    m = np.zeros((d, d), dtype=complex)
    m[i, j] = 1
    return m


def block_diag(*mats):
    d = sum(len(m) for m in mats)
    out = np.zeros((d, d), dtype=complex)
    off = 0
    for m in mats:
        out[off:off + len(m), off:off + len(m)] = m
        off += len(m)
    return out


# commutant


def test_commutant_of_identity_is_full():
    c = commutant([np.eye(3)], d=3)
    assert c.dim == 9
    assert c.invariant.as_list() == [[3, 1]]


def test_commutant_of_full_is_scalars():
    c = commutant(OperatorAlgebra.full(2))
    assert c.dim == 1
    assert c.invariant.as_list() == [[1, 2]]


def test_commutant_of_sigma_z_is_diagonal():
    c = commutant([np.diag([1.0, -1.0])], d=2)
    assert c.dim == 2
    assert span_equal(c.basis, sylvester_commutant([np.diag([1.0, -1.0])], 2))


def test_commutant_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        commutant([np.eye(2), np.eye(3)])


def test_double_commutant_of_full():
    m = OperatorAlgebra.full(3)
    assert commutant(commutant(m)).equals(m)


# generate


def test_generate_identity_is_scalars():
    assert generate([np.eye(3)], d=3).dim == 1


def test_generate_e01_is_full_m2():
    a = generate([unit(2, 0, 1)], d=2)
    assert a.dim == 4
    assert a.is_factor


def test_generate_regular_z3_is_abelian_c3():
    lam = regular_representation(FiniteAbelianGroup((3,)))
    a = generate(list(lam), d=3)
    assert a.dim == 3
    assert a.is_abelian()
    assert a.invariant.as_list() == [[1, 1]] * 3


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(1, 3), st.integers(0, 10_000))
def test_generate_matches_word_closure(d, k, seed):
    rng = np.random.default_rng(seed)
    gens = []
    for _ in range(k):
        g = np.zeros((d, d), dtype=complex)
        # sparse generators so that proper subalgebras show up
        for _ in range(rng.integers(1, 3)):
            i, j = rng.integers(0, d, 2)
            g[i, j] += rng.standard_normal() + 1j * rng.standard_normal()
        gens.append(g)
    a = generate(gens, d=d)
    assert span_equal(a.basis, word_closure(gens, d))


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10_000))
@example(d=5, seed=1067)  # near-Hermitian basis elements with rounding-noise skew parts
def test_generate_is_idempotent(d, seed):
    rng = np.random.default_rng(seed)
    p = np.diag(rng.integers(0, 2, d)).astype(complex)
    a = generate([p, unit(d, 0, d - 1)], d=d)
    again = generate(list(a.basis), d=d)
    assert again.equals(a)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 3), st.integers(1, 2)), min_size=1, max_size=3))
def test_block_invariant_matches_oracle(blocks):
    if sum(n * m for n, m in blocks) > 8:
        return
    a = direct_sum_blocks(blocks)
    inv = a.invariant
    assert sorted(map(tuple, inv.as_list())) == block_invariant(a.basis, a.d)
    assert inv.ambient_dim == a.d
    assert inv.algebra_dim == a.dim == sum(n * n for n, _ in blocks)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 3), st.integers(1, 2)), min_size=1, max_size=3), st.integers(0, 999))
def test_block_invariant_is_unitarily_invariant(blocks, seed):
    if sum(n * m for n, m in blocks) > 7:
        return
    from oracles import random_unitary

    a = direct_sum_blocks(blocks)
    u = random_unitary(a.d, np.random.default_rng(seed))
    b = OperatorAlgebra.span([u @ x @ u.conj().T for x in a.basis], d=a.d)
    assert b.invariant == a.invariant


# center / sectors


def test_center_of_full_is_scalars():
    assert center(OperatorAlgebra.full(3)).dim == 1


def test_center_of_abelian_is_itself():
    a = OperatorAlgebra.diagonal(3)
    assert center(a).equals(a)


def test_center_m2_plus_m3():
    a = OperatorAlgebra.from_blocks([(2, 1), (3, 1)])
    z = center(a)
    assert z.dim == 2
    expect = [block_diag(np.eye(2), np.zeros((3, 3))), block_diag(np.zeros((2, 2)), np.eye(3))]
    assert span_equal(z.basis, expect)


def test_center_equals_intersection_with_commutant():
    a = OperatorAlgebra.from_blocks([(2, 1), (1, 2)])
    assert center(a).equals(intersect(a, commutant(a)))


def test_sectors_full_and_diagonal():
    assert [(s.block_size, s.multiplicity) for s in sector_decompose(OperatorAlgebra.full(4))] == [(4, 1)]
    assert [(s.block_size, s.multiplicity) for s in sector_decompose(OperatorAlgebra.diagonal(3))] == [(1, 1)] * 3


def test_sectors_m2_plus_m2():
    a = OperatorAlgebra.from_blocks([(2, 1), (2, 1)])
    secs = sector_decompose(a)
    assert [(s.block_size, s.multiplicity) for s in secs] == [(2, 1), (2, 1)]
    total = sum(s.projection for s in secs)
    np.testing.assert_allclose(total, np.eye(4), atol=1e-10)
    np.testing.assert_allclose(secs[0].projection @ secs[1].projection, 0, atol=1e-10)


def test_sector_order_is_deterministic():
    a = OperatorAlgebra.from_blocks([(1, 1), (2, 1), (1, 2)])
    first = [s.projection for s in sector_decompose(a, seed=0)]
    second = [s.projection for s in sector_decompose(a, seed=5)]
    for p, q in zip(first, second):
        np.testing.assert_allclose(p, q, atol=1e-9)
    assert [s.block_size for s in sector_decompose(a)] == [2, 1, 1]


def test_block_invariant_str_and_isomorphism():
    a = BlockInvariant([(4, 2)])
    b = BlockInvariant([(4, 1)])
    assert str(a) == "{(4,2)}"
    assert a.isomorphic(b)
    assert a != b


# MASA


def test_is_masa_examples():
    m2 = OperatorAlgebra.full(2)
    assert is_masa(OperatorAlgebra.diagonal(2), m2)
    assert not is_masa(OperatorAlgebra.scalars(2), m2)
    a = OperatorAlgebra.diagonal(3)
    assert is_masa(a, a)


def test_is_masa_requires_containment():
    a = OperatorAlgebra.diagonal(2)
    m = OperatorAlgebra.span([np.eye(2), np.array([[0, 1], [1, 0]])], d=2)
    with pytest.raises(PreconditionError):
        is_masa(a, m)


def test_relative_commutant_of_diagonal_in_m3():
    rc = relative_commutant(OperatorAlgebra.diagonal(3), OperatorAlgebra.full(3))
    assert rc.equals(OperatorAlgebra.diagonal(3))


# q -> c channel


def test_qc_channel_factor():
    mu = qc_channel(StateOnAlgebra.tracial(3), OperatorAlgebra.full(3))
    np.testing.assert_allclose(mu, [1.0])


def test_qc_channel_tracial_on_m2_plus_m2():
    mu = qc_channel(StateOnAlgebra.tracial(4), OperatorAlgebra.from_blocks([(2, 1), (2, 1)]))
    np.testing.assert_allclose(mu, [0.5, 0.5], atol=1e-12)


def test_qc_channel_supported_state():
    a = OperatorAlgebra.from_blocks([(2, 1), (2, 1)])
    z = a.sectors[0].projection
    rho = z @ random_density(4, np.random.default_rng(1)) @ z
    rho /= np.trace(rho)
    np.testing.assert_allclose(qc_channel(rho, a), [1.0, 0.0], atol=1e-12)


def test_qc_channel_rejects_unnormalized():
    with pytest.raises(PreconditionError):
        qc_channel(np.eye(2), OperatorAlgebra.full(2))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_qc_channel_is_a_distribution_matching_direct_evaluation(seed):
    rng = np.random.default_rng(seed)
    a = OperatorAlgebra.from_blocks([(1, 1), (2, 1), (1, 2)])
    rho = random_density(a.d, rng)
    mu = qc_channel(rho, a)
    assert np.all(mu >= 0)
    assert mu.sum() == pytest.approx(1.0, abs=1e-10)
    direct = [np.trace(rho @ s.projection).real for s in a.sectors]
    np.testing.assert_allclose(mu, direct, atol=1e-12)


# central support


def test_central_support_identity():
    a = OperatorAlgebra.from_blocks([(2, 1), (1, 1)])
    np.testing.assert_allclose(central_support(np.eye(3), a), np.eye(3), atol=1e-10)


def test_central_support_rank_one_in_block():
    a = OperatorAlgebra.from_blocks([(2, 1), (2, 1)])
    p = unit(4, 0, 0)
    z = central_support(p, a)
    np.testing.assert_allclose(z, block_diag(np.eye(2), np.zeros((2, 2))), atol=1e-10)


def test_central_support_scalars():
    a = OperatorAlgebra.scalars(2)
    xi = np.array([0.6, 0.8])
    np.testing.assert_allclose(central_support(np.outer(xi, xi), a), np.eye(2), atol=1e-10)


def test_central_support_projection_in_commutant():
    # A = M_2 (x) 1_2: the commutant is 1 (x) M_2, P = 1 (x) e00 has full central support
    a = tensor(OperatorAlgebra.full(2), OperatorAlgebra.scalars(2))
    p = np.kron(np.eye(2), unit(2, 0, 0))
    np.testing.assert_allclose(central_support(p, a), np.eye(4), atol=1e-10)


def test_central_support_rejects_non_projection():
    with pytest.raises(PreconditionError):
        central_support(2 * np.eye(2), OperatorAlgebra.full(2))


# Wedderburn


@settings(max_examples=15, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 3), st.integers(1, 2)), min_size=1, max_size=3), st.integers(0, 999))
def test_wedderburn_round_trip(blocks, seed):
    if sum(n * m for n, m in blocks) > 7:
        return
    from oracles import random_unitary

    rng = np.random.default_rng(seed)
    base = direct_sum_blocks(blocks)
    u = random_unitary(base.d, rng)
    a = OperatorAlgebra.span([u @ x @ u.conj().T for x in base.basis], d=base.d)
    w = wedderburn(a)
    x, y = a.random_element(rng), a.random_element(rng)
    np.testing.assert_allclose(w.lift(w.reduce(x)), x, atol=1e-8)
    rx, ry, rxy = w.reduce(x), w.reduce(y), w.reduce(x @ y)
    for p, q, r in zip(rx, ry, rxy):
        np.testing.assert_allclose(p @ q, r, atol=1e-8)


def test_state_normalization():
    s = StateOnAlgebra.from_vector(np.array([0.6, 0.8j]))
    assert s.is_normalized
    assert s(np.diag([1.0, 0.0])) == pytest.approx(0.36)
