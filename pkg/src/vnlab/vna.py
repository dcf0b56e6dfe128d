"""Finite-dimensional von Neumann algebras as subspaces of M_d(C).

An algebra is stored as a trace-orthonormal basis. Commutants come from the
nullspace of the commutation constraints, the generated algebra is the
double commutant, and the centre is decomposed into minimal central
projections (sectors) with block size and spatial multiplicity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from vnlab import _linalg as la
from vnlab.config import DEFAULT_SEED, resolve
from vnlab.errors import DimensionMismatchError, NumericalAmbiguityError, PreconditionError

__all__ = [
    "OperatorAlgebra",
    "BlockInvariant",
    "Sector",
    "StateOnAlgebra",
    "Wedderburn",
    "commutant",
    "generate",
    "center",
    "relative_commutant",
    "intersect",
    "sector_decompose",
    "is_masa",
    "qc_channel",
    "central_support",
    "wedderburn",
    "tensor",
    "direct_sum_blocks",
]

_SEED_RETRIES = 4


class OperatorAlgebra:
    """A subspace of d x d matrices given by a trace-orthonormal basis.

    ``generators`` is an optional short list of matrices known to generate the
    algebra; commutants against this algebra use it instead of the full basis.
    """

    def __init__(self, basis, generators=None, name=None, tol=None):
        basis = np.asarray(basis, dtype=complex)
        if basis.ndim != 3 or basis.shape[1] != basis.shape[2]:
            raise DimensionMismatchError(f"basis must have shape (k, d, d), got {basis.shape}")
        self.basis = basis
        self.d = basis.shape[1]
        self.name = name
        self.tol = resolve(tol)
        if generators is not None:
            generators = la.as_matrices(generators, self.d)
        self._generators = generators

    # constructors
    @classmethod
    def span(cls, mats, d=None, tol=None, name=None):
        tol = resolve(tol)
        basis = la.orthonormal_span(mats, tol, d)
        return cls(basis, generators=basis if len(basis) <= 4 else None, name=name, tol=tol)

    @classmethod
    def full(cls, d, name=None):
        basis = np.zeros((d * d, d, d), dtype=complex)
        for i in range(d):
            for j in range(d):
                basis[i * d + j, i, j] = 1.0
        gens = [np.diag(np.arange(d, dtype=complex))] + [_unit(d, i, i + 1) for i in range(d - 1)]
        return cls(basis, generators=gens or [np.eye(d)], name=name or f"M_{d}")

    @classmethod
    def scalars(cls, d, name=None):
        return cls(np.eye(d, dtype=complex)[None] / np.sqrt(d), generators=[np.eye(d)], name=name or "C1")

    @classmethod
    def diagonal(cls, d, name=None):
        basis = np.array([_unit(d, i, i) for i in range(d)])
        return cls(basis, generators=[np.diag(np.arange(d, dtype=complex))], name=name or f"D_{d}")

    @classmethod
    def from_blocks(cls, blocks, name=None):
        return direct_sum_blocks(blocks, name=name)

    # basic queries
    @property
    def dim(self):
        return len(self.basis)

    @property
    def generators(self):
        return self._generators if self._generators is not None else self.basis

    def __repr__(self):
        label = f"{self.name}, " if self.name else ""
        return f"OperatorAlgebra({label}d={self.d}, dim={self.dim})"

    def residual(self, x):
        return la.membership_residual(self.basis, x)

    def contains(self, x, tol=None):
        x = np.asarray(x, dtype=complex)
        if x.shape != (self.d, self.d):
            raise DimensionMismatchError(f"matrix of shape {x.shape} in ambient dimension {self.d}")
        return self.residual(x) < resolve(tol) * 10

    def project(self, x):
        return la.project(self.basis, x)

    def coordinates(self, x):
        return la.coordinates(self.basis, x)

    def element(self, coeffs):
        return np.tensordot(np.asarray(coeffs, dtype=complex), self.basis, axes=1)

    def random_element(self, rng, hermitian=False):
        c = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
        x = self.element(c)
        if hermitian:
            x = self.project((x + x.conj().T) / 2)
        return x

    def subspace_residual(self, other):
        """Largest residual of this algebra's basis projected into ``other``."""
        _check_same_ambient(self, other)
        if self.dim == 0:
            return 0.0
        return max(la.membership_residual(other.basis, b) for b in self.basis)

    def is_subalgebra_of(self, other, tol=None):
        return self.subspace_residual(other) < resolve(tol) * 10

    def equals(self, other, tol=None):
        _check_same_ambient(self, other)
        return self.dim == other.dim and la.subspace_distance(self.basis, other.basis) < resolve(tol) * 10

    def distance(self, other):
        _check_same_ambient(self, other)
        return la.subspace_distance(self.basis, other.basis)

    # algebraic structure
    def closure_residuals(self, samples=6, seed=DEFAULT_SEED):
        """Residuals for unit, adjoint and product closure.

        Adjoints are checked on every basis element; products on the given
        generators and on seeded random elements.
        """
        rng = np.random.default_rng(seed)
        unit = self.residual(np.eye(self.d))
        adj = max((self.residual(b.conj().T) for b in self.basis), default=0.0)
        elems = list(self.generators[:6]) + [self.random_element(rng) for _ in range(samples)]
        prod = max((self.residual(x @ y) for x in elems for y in elems), default=0.0)
        return {"unit": unit, "adjoint": adj, "product": prod}

    @cached_property
    def flags(self):
        res = self.closure_residuals()
        tol = self.tol * 10
        return {
            "is_unital": res["unit"] < tol,
            "is_selfadjoint_closed": res["adjoint"] < tol,
            "is_multiplicatively_closed": res["product"] < tol,
        }

    def is_valid(self):
        return all(self.flags.values())

    def is_abelian(self, tol=None):
        tol = resolve(tol)
        g = self.generators
        scale = max(1.0, max(np.linalg.norm(x, 2) for x in g) ** 2)
        return all(np.linalg.norm(x @ y - y @ x) < tol * 10 * scale for x in g for y in g)

    def is_factor(self):
        return center(self).dim == 1

    @cached_property
    def sectors(self):
        return sector_decompose(self)

    @cached_property
    def invariant(self):
        return BlockInvariant.from_sectors(self.sectors)


@dataclass(frozen=True)
class BlockInvariant:
    """Multiset of (block size n_k, spatial multiplicity m_k) pairs.

    ``abstract`` forgets multiplicities and determines the algebra up to
    *-isomorphism; the full pairs determine it up to spatial equivalence.
    """

    pairs: tuple

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(sorted((int(n), int(m)) for n, m in self.pairs)))

    @classmethod
    def from_sectors(cls, sectors):
        return cls(tuple((s.block_size, s.multiplicity) for s in sectors))

    @property
    def abstract(self):
        return tuple(sorted(n for n, _ in self.pairs))

    @property
    def ambient_dim(self):
        return sum(n * m for n, m in self.pairs)

    @property
    def algebra_dim(self):
        return sum(n * n for n, _ in self.pairs)

    def isomorphic(self, other):
        return self.abstract == other.abstract

    def as_list(self):
        return [list(p) for p in self.pairs]

    def __str__(self):
        return "{" + ", ".join(f"({n},{m})" for n, m in self.pairs) + "}"


@dataclass
class Sector:
    projection: np.ndarray
    block_size: int
    multiplicity: int

    @property
    def rank(self):
        return self.block_size * self.multiplicity


@dataclass
class StateOnAlgebra:
    """A normal state given by its density matrix on the ambient space."""

    rho: np.ndarray
    tol: float = field(default=None)

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.ndim == 1:
            rho = np.outer(rho, rho.conj())
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise DimensionMismatchError(f"density matrix must be square, got {rho.shape}")
        self.rho = rho
        self.tol = resolve(self.tol)

    @classmethod
    def from_vector(cls, xi, tol=None):
        return cls(np.asarray(xi, dtype=complex), tol=tol)

    @classmethod
    def tracial(cls, d):
        return cls(np.eye(d) / d)

    @property
    def d(self):
        return self.rho.shape[0]

    def __call__(self, x):
        return complex(np.trace(self.rho @ x))

    def normalization_residual(self):
        herm = np.linalg.norm(self.rho - self.rho.conj().T)
        w = np.linalg.eigvalsh((self.rho + self.rho.conj().T) / 2)
        neg = max(0.0, -float(w.min()))
        return max(herm, neg, abs(np.trace(self.rho) - 1))

    def is_normalized(self):
        return self.normalization_residual() < max(self.tol * 10, 1e-10)

    def require_normalized(self):
        if not self.is_normalized():
            raise PreconditionError(
                f"state is not normalized (residual {self.normalization_residual():.3e})"
            )


def _unit(d, i, j):
    e = np.zeros((d, d), dtype=complex)
    e[i, j] = 1.0
    return e


def _check_same_ambient(a, b):
    if a.d != b.d:
        raise DimensionMismatchError(f"ambient dimensions differ: {a.d} vs {b.d}")


def _generator_list(gens, d=None):
    if isinstance(gens, OperatorAlgebra):
        return gens.generators, gens.d
    mats = la.as_matrices(list(gens), d)
    if len(mats) == 0:
        if d is None:
            raise PreconditionError("empty generator set needs an explicit ambient dimension")
        mats = np.eye(d, dtype=complex)[None]
    return mats, mats.shape[-1]


def _generic_hermitian(mats, rng):
    herm = la.hermitian_parts(mats, with_norms=True)
    d = mats[0].shape[0]
    if not herm:
        return np.zeros((d, d), dtype=complex)
    coeffs = rng.standard_normal(len(herm))
    # scale by the parent's norm so that a small piece is never blown up to O(1)
    return sum(c * h / nx for c, (h, nx) in zip(coeffs, herm))


def commutant(generators, d=None, tol=None, seed=DEFAULT_SEED):
    """{X : X a = a X and X a^dag = a^dag X for every generator a}.

    The identity is added to the generators implicitly (it changes nothing).
    The search starts from the commutant of a seeded generic Hermitian
    combination, which contains the answer, and then imposes each constraint
    through the SVD nullspace of the commutator map.
    """
    tol = resolve(tol)
    gens, d = _generator_list(generators, d)
    rng = np.random.default_rng(seed)
    h = _generic_hermitian(gens, rng)
    if np.linalg.norm(h) == 0:
        start = OperatorAlgebra.full(d).basis
    else:
        start = la.commutant_of_hermitian(h, tol)
    extra = [_generic_hermitian(gens, rng) for _ in range(2)] if len(gens) > 2 else []
    basis = la.commuting_subspace(start, extra + list(gens), tol)
    basis = la.orthonormal_span(basis, tol, d) if len(basis) else basis
    return OperatorAlgebra(basis, generators=basis if len(basis) <= 8 else None, tol=tol)


def relative_commutant(generators, M, tol=None):
    """S' & M: elements of M commuting with every element of S (and adjoints)."""
    tol = resolve(tol)
    gens, d = _generator_list(generators, M.d)
    if d != M.d:
        raise DimensionMismatchError(f"generators act on dimension {d}, algebra on {M.d}")
    basis = la.commuting_subspace(M.basis, list(gens), tol)
    if len(basis):
        basis = la.orthonormal_span(basis, tol, d)
    return OperatorAlgebra(basis, generators=basis if len(basis) <= 8 else None, tol=tol)


def generate(generators, d=None, tol=None, seed=DEFAULT_SEED, name=None):
    """The von Neumann algebra generated by ``generators``: the double commutant."""
    tol = resolve(tol)
    gens, d = _generator_list(generators, d)
    first = commutant(gens, d, tol=tol, seed=seed)
    second = commutant(first, d, tol=tol, seed=seed)
    return OperatorAlgebra(second.basis, generators=gens, name=name, tol=tol)


def center(A, tol=None):
    """Z(A) = A & A', computed as the relative commutant of A inside itself."""
    z = relative_commutant(A, A, tol=tol)
    z.name = f"Z({A.name})" if A.name else None
    return z


def intersect(A, B, tol=None):
    """A & B as subspaces."""
    _check_same_ambient(A, B)
    tol = resolve(tol)
    basis = la.intersect(A.basis, B.basis, tol)
    return OperatorAlgebra(basis, generators=basis if len(basis) <= 8 else None, tol=tol)


def tensor(A, B, name=None):
    """Spatial tensor product A (x) B acting on C^{dA} (x) C^{dB}."""
    basis = np.einsum("iab,jcd->ijacbd", A.basis, B.basis).reshape(A.dim * B.dim, A.d * B.d, A.d * B.d)
    gens = [np.kron(g, np.eye(B.d)) for g in A.generators] + [np.kron(np.eye(A.d), g) for g in B.generators]
    return OperatorAlgebra(basis, generators=gens, name=name)


def direct_sum_blocks(blocks, name=None):
    """Block-diagonal algebra (+)_k M_{n_k} (x) 1_{m_k}, blocks in the given order."""
    blocks = [(int(n), int(m)) for n, m in blocks]
    if not blocks or any(n < 1 or m < 1 for n, m in blocks):
        raise PreconditionError(f"invalid block list {blocks}")
    d = sum(n * m for n, m in blocks)
    basis, gens = [], []
    offset = 0
    for n, m in blocks:
        for i in range(n):
            for j in range(n):
                x = np.zeros((d, d), dtype=complex)
                x[offset:offset + n * m, offset:offset + n * m] = np.kron(_unit(n, i, j), np.eye(m)) / np.sqrt(m)
                basis.append(x)
        offset += n * m
    offset = 0
    h = np.zeros((d, d), dtype=complex)
    for k, (n, m) in enumerate(blocks):
        sl = slice(offset, offset + n * m)
        h[sl, sl] = np.kron(np.diag(np.arange(n) + 10.0 * (k + 1)), np.eye(m))
        for i in range(n - 1):
            x = np.zeros((d, d), dtype=complex)
            x[sl, sl] = np.kron(_unit(n, i, i + 1), np.eye(m))
            gens.append(x)
        offset += n * m
    gens.insert(0, h)
    return OperatorAlgebra(np.array(basis), generators=gens, name=name)


def _central_projections(Z, tol, seed):
    """Minimal projections of the abelian algebra Z from a generic element."""
    d = Z.d
    last = None
    for attempt in range(_SEED_RETRIES):
        rng = np.random.default_rng(seed + attempt)
        herm = la.hermitian_parts(Z.basis)
        coeffs = rng.standard_normal(len(herm))
        h = sum(c * x for c, x in zip(coeffs, herm)) if herm else np.eye(d, dtype=complex)
        w, v = np.linalg.eigh((h + h.conj().T) / 2)
        scale = max(float(np.abs(w).max()), 1e-300)
        labels, ambiguous = la.split_clusters(w, tol, scale)
        if ambiguous:
            last = w
            continue
        projs = []
        for k in range(labels.max() + 1):
            q = v[:, labels == k]
            projs.append(q @ q.conj().T)
        if len(projs) == Z.dim and all(Z.residual(p) < np.sqrt(tol) for p in projs):
            return projs
        last = w
    raise NumericalAmbiguityError(
        f"could not separate the centre into {Z.dim} minimal projections; eigenvalues {np.round(last, 12)}"
    )


def sector_decompose(A, tol=None, seed=DEFAULT_SEED):
    """Minimal central projections of A with block size and multiplicity.

    Ordered by descending block size, then by Tr(z_k R) with
    R = diag(0, 1, ..., d - 1) normalised by rank, so the ordering only
    depends on where each sector sits in the ambient space.
    """
    tol = resolve(tol if tol is not None else A.tol)
    Z = center(A, tol=tol)
    if Z.dim == 0:
        raise PreconditionError("algebra has trivial centre subspace; is it unital?")
    projs = _central_projections(Z, tol, seed)
    ref = np.arange(A.d, dtype=float)
    sectors = []
    for z in projs:
        rank = int(round(np.real(np.trace(z))))
        compressed = la.orthonormal_span(z[None] @ A.basis @ z[None], tol, A.d)
        n = int(round(np.sqrt(len(compressed))))
        if n * n != len(compressed) or n == 0 or rank % n:
            raise NumericalAmbiguityError(
                f"sector of rank {rank} has compressed dimension {len(compressed)}, not a block square"
            )
        sectors.append(Sector(z, n, rank // n))
    sectors.sort(key=lambda s: (-s.block_size, round(float(np.real(np.diag(s.projection)) @ ref) / s.rank, 9), s.multiplicity))
    total = sum(s.projection for s in sectors)
    if np.linalg.norm(total - np.eye(A.d)) > np.sqrt(tol):
        raise PreconditionError("central projections do not sum to the identity; algebra is not unital")
    return sectors


def is_masa(A, M, tol=None):
    """True iff A' & M = A. Requires A to be contained in M."""
    tol = resolve(tol)
    _check_same_ambient(A, M)
    res = A.subspace_residual(M)
    if res >= tol * 10:
        raise PreconditionError(f"A is not contained in M (residual {res:.3e})")
    rc = relative_commutant(A, M, tol=tol)
    return rc.dim == A.dim and la.subspace_distance(rc.basis, A.basis) < tol * 10


def qc_channel(state, M, tol=None, sectors=None):
    """Sector distribution mu(k) = phi(z_k) of a normalized state."""
    if not isinstance(state, StateOnAlgebra):
        state = StateOnAlgebra(state)
    if state.d != M.d:
        raise DimensionMismatchError(f"state on dimension {state.d}, algebra on {M.d}")
    state.require_normalized()
    sectors = sectors if sectors is not None else M.sectors
    mu = np.array([state(s.projection).real for s in sectors])
    return np.clip(mu, 0.0, None)


def _is_projection(p, tol):
    return np.linalg.norm(p @ p - p) < tol * 10 * max(1, len(p)) and np.linalg.norm(p - p.conj().T) < tol * 10


def central_support(P, A, tol=None):
    """Smallest central projection z of A with z P = P.

    For P in A' this is the projection onto [A' P H]; for P in A it is the
    projection onto [A P H]. Both are the closed span of the orbit of range(P)
    under the von Neumann algebra containing P.
    """
    tol = resolve(tol)
    P = np.asarray(P, dtype=complex)
    if P.shape != (A.d, A.d):
        raise DimensionMismatchError(f"projection of shape {P.shape} in ambient dimension {A.d}")
    if not _is_projection(P, tol):
        raise PreconditionError("P is not an orthogonal projection")
    scale = max(np.linalg.norm(P, 2), 1.0)
    in_commutant = all(np.linalg.norm(P @ g - g @ P) < tol * 10 * scale * max(np.linalg.norm(g, 2), 1) for g in A.generators)
    if in_commutant:
        algebra = commutant(A, tol=tol)
    elif A.contains(P, tol):
        algebra = A
    else:
        raise PreconditionError("P lies neither in A' nor in A")
    cols = la.range_basis(P, tol)
    if cols.shape[1] == 0:
        return np.zeros_like(P)
    vecs = np.concatenate([b @ cols for b in algebra.basis], axis=1)
    u, s, _ = np.linalg.svd(vecs, full_matrices=False)
    rank = int(np.sum(s > tol * s[0]))
    q = u[:, :rank]
    return q @ q.conj().T


@dataclass
class Wedderburn:
    """Unitary Q with Q^dag A Q = (+)_k M_{n_k} (x) 1_{m_k}.

    Inside each sector the new basis is ordered with the matrix index i major
    and the multiplicity index s minor.
    """

    unitary: np.ndarray
    sectors: list

    @property
    def blocks(self):
        return [(s.block_size, s.multiplicity) for s in self.sectors]

    @property
    def offsets(self):
        out, off = [], 0
        for n, m in self.blocks:
            out.append(off)
            off += n * m
        return out

    def reduce(self, x):
        """The n_k x n_k block matrices representing x in each sector."""
        y = self.unitary.conj().T @ x @ self.unitary
        out = []
        for (n, m), off in zip(self.blocks, self.offsets):
            idx = off + m * np.arange(n)
            out.append(y[np.ix_(idx, idx)])
        return out

    def lift(self, blocks):
        d = self.unitary.shape[0]
        y = np.zeros((d, d), dtype=complex)
        for (n, m), off, b in zip(self.blocks, self.offsets, blocks):
            y[off:off + n * m, off:off + n * m] = np.kron(b, np.eye(m))
        return self.unitary @ y @ self.unitary.conj().T

    def matrix_unit(self, k, i, j):
        n, _ = self.blocks[k]
        blocks = [np.zeros((b, b), dtype=complex) for b, _ in self.blocks]
        blocks[k] = _unit(n, i, j)
        return self.lift(blocks)


def wedderburn(A, tol=None, seed=DEFAULT_SEED):
    """Matrix units and a block-diagonalizing unitary for the algebra A."""
    tol = resolve(tol if tol is not None else A.tol)
    sectors = sector_decompose(A, tol=tol, seed=seed)
    cols = []
    for k, sec in enumerate(sectors):
        cols.append(_sector_columns(A, sec, tol, seed + 101 * (k + 1)))
    Q = np.concatenate(cols, axis=1)
    if not la.is_unitary(Q, 1e-8):
        raise NumericalAmbiguityError("matrix-unit construction did not produce a unitary")
    return Wedderburn(Q, sectors)


def _sector_columns(A, sec, tol, seed):
    z = sec.projection
    n, m = sec.block_size, sec.multiplicity
    qz = la.range_basis(z, tol)
    block = la.orthonormal_span(z[None] @ A.basis @ z[None], tol, A.d)
    if n == 1:
        return qz
    for attempt in range(_SEED_RETRIES):
        rng = np.random.default_rng(seed + attempt)
        c = rng.standard_normal(len(block))
        h = np.tensordot(c, block, axes=1)
        h = qz.conj().T @ ((h + h.conj().T) / 2) @ qz
        w, v = np.linalg.eigh(h)
        labels, ambiguous = la.split_clusters(w, tol, max(np.abs(w).max(), 1e-300))
        sizes = np.bincount(labels)
        if ambiguous or len(sizes) != n or np.any(sizes != m):
            continue
        groups = [qz @ v[:, labels == i] for i in range(n)]
        projs = [g @ g.conj().T for g in groups]
        x = np.tensordot(rng.standard_normal(len(block)) + 1j * rng.standard_normal(len(block)), block, axes=1)
        units = [projs[0]]
        ok = True
        for i in range(1, n):
            vi = projs[i] @ x @ projs[0]
            c_i = np.linalg.norm(vi) ** 2 / m
            if c_i < np.sqrt(tol):
                ok = False
                break
            units.append(vi / np.sqrt(c_i))
        if not ok:
            continue
        f = groups[0]
        return np.concatenate([e @ f for e in units], axis=1)
    raise NumericalAmbiguityError(f"could not build matrix units for a sector with blocks ({n},{m})")
