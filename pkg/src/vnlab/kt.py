"""Kac-Takesaki operators of finite abelian groups and their represented forms.

V lives on l2(Û) (x) l2(Û) with V|s, t> = |s, st>; W on l2(U) (x) l2(U) with
W|a, b> = |b^{-1} a, b>, so that (W xi)(u1, u2) = xi(u2 u1, u2). A MASA A
containing a represented copy of U gives a spectral measure over Û, and with
it the couplings E_*(V) and EW.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from vnlab import _linalg as la
from vnlab.config import resolve
from vnlab.errors import DimensionMismatchError, PreconditionError
from vnlab.groups import DualGroup, FiniteAbelianGroup, fourier_transform, regular_representation
from vnlab.vna import OperatorAlgebra, sector_decompose

__all__ = [
    "KTOperator",
    "Atom",
    "SpectralMeasure",
    "build_V",
    "build_W",
    "build_V_prime",
    "embed_legs",
    "pentagon_residual",
    "fourier_conjugacy_residual",
    "intertwining_residuals",
    "representation_from_generators",
    "spectral_measure",
    "coupling_EstarV",
    "coupling_EW",
    "modified_pentagon_residual",
    "EW_checks",
]


@dataclass
class KTOperator:
    group: FiniteAbelianGroup
    matrix: np.ndarray
    variant: str

    @property
    def n(self):
        return self.group.order

    def leg(self, i, j):
        """The operator acting on legs i, j of a threefold tensor product."""
        return embed_legs(self.matrix, (i, j), (self.n,) * 3)

    def pentagon_residual(self):
        return pentagon_residual(self.matrix, self.n)

    def unitarity_residual(self):
        m = self.matrix
        return float(np.linalg.norm(m.conj().T @ m - np.eye(len(m))))


def embed_legs(op, legs, dims):
    """Embed ``op`` acting on the tensor factors ``legs`` (in that order) of
    a product space with factor dimensions ``dims``."""
    legs = tuple(legs)
    dims = tuple(int(x) for x in dims)
    rest = [k for k in range(len(dims)) if k not in legs]
    order = list(legs) + rest
    rest_dim = int(np.prod([dims[k] for k in rest])) if rest else 1
    full = np.kron(op, np.eye(rest_dim))
    n = len(dims)
    shape = [dims[k] for k in order]
    full = full.reshape(shape + shape)
    inv = np.argsort(order)
    full = full.transpose(list(inv) + [n + k for k in inv])
    total = int(np.prod(dims))
    return full.reshape(total, total)


def pentagon_residual(matrix, n):
    """|| V12 V13 V23 - V23 V12 || for V acting on C^n (x) C^n."""
    dims = (n, n, n)
    v12 = embed_legs(matrix, (0, 1), dims)
    v13 = embed_legs(matrix, (0, 2), dims)
    v23 = embed_legs(matrix, (1, 2), dims)
    return float(np.linalg.norm(v12 @ v13 @ v23 - v23 @ v12))


def _perm_matrix(n, images):
    """Permutation unitary sending basis vector k to images[k]."""
    p = np.zeros((n, n))
    p[np.asarray(images), np.arange(n)] = 1.0
    return p


def build_V(dual):
    """K-T operator of Û: V|s, t> = |s, s t>, i.e. (V xi)(s, t) = xi(s, s^{-1} t)."""
    if isinstance(dual, FiniteAbelianGroup):
        dual = DualGroup(dual)
    g = dual.as_group
    n = g.order
    add = g.add_table
    images = [s * n + add[s, t] for s in range(n) for t in range(n)]
    return KTOperator(g, _perm_matrix(n * n, images), "V")


def build_W(group):
    """Fourier-conjugate K-T operator on U: W|a, b> = |b^{-1} a, b>."""
    n = group.order
    add, neg = group.add_table, group.neg_table
    images = [add[a, neg[b]] * n + b for a in range(n) for b in range(n)]
    return KTOperator(group, _perm_matrix(n * n, images), "W")


def build_V_prime(group):
    """(V' xi)(u1, u2) = xi(u1 u2, u2). For abelian U this coincides with W."""
    w = build_W(group)
    return KTOperator(group, w.matrix, "V'")


def fourier_conjugacy_residual(group):
    """|| W - (F (x) F)^{-1} V (F (x) F) ||."""
    f = fourier_transform(group)
    ff = np.kron(f, f)
    v = build_V(DualGroup(group)).matrix
    w = build_W(group).matrix
    return float(np.linalg.norm(w - ff.conj().T @ v @ ff))


def intertwining_residuals(group):
    """Residuals of V(lam_g (x) I) = (lam_g (x) lam_g)V and W(lam_u (x) lam_u) = (I (x) lam_u)W."""
    dual = DualGroup(group)
    v = build_V(dual).matrix
    w = build_W(group).matrix
    lam_hat = regular_representation(dual.as_group)
    lam = regular_representation(group)
    eye = np.eye(group.order)
    rv = max(np.linalg.norm(v @ np.kron(l, eye) - np.kron(l, l) @ v) for l in lam_hat)
    rw = max(np.linalg.norm(w @ np.kron(l, l) - np.kron(eye, l) @ w) for l in lam)
    return float(rv), float(rw)


def representation_from_generators(group, generator_unitaries, tol=None):
    """Unitaries for every group element from the images of the factor generators.

    ``generator_unitaries[j]`` represents the unit vector of the j-th cyclic
    factor; trivial factors may be omitted only if they are omitted from
    ``group.generators`` as well. Returns an array indexed like ``group.elements``.
    """
    tol = resolve(tol)
    gens = la.as_matrices(generator_unitaries)
    nontrivial = [j for j, n in enumerate(group.orders) if n > 1]
    if len(gens) == len(group.orders):
        gens = gens[nontrivial] if len(nontrivial) else gens[:0]
    if len(gens) != len(nontrivial):
        raise PreconditionError(f"expected {len(nontrivial)} generator unitaries, got {len(gens)}")
    d = gens.shape[-1] if len(gens) else 1
    for k, g in enumerate(gens):
        if not la.is_unitary(g, 1e-8):
            raise PreconditionError(f"generator {k} is not unitary")
        order = group.orders[nontrivial[k]]
        if np.linalg.norm(np.linalg.matrix_power(g, order) - np.eye(d)) > 1e-8 * d:
            raise PreconditionError(f"generator {k} does not have order dividing {order}")
        for h in gens[:k]:
            if np.linalg.norm(g @ h - h @ g) > 1e-8 * d:
                raise PreconditionError("generator unitaries do not commute")
    out = []
    for u in group.elements:
        x = np.eye(d, dtype=complex)
        for k, j in enumerate(nontrivial):
            x = x @ np.linalg.matrix_power(gens[k], u[j])
        out.append(x)
    return np.array(out)


@dataclass
class Atom:
    projection: np.ndarray
    character: int
    values: np.ndarray


@dataclass
class SpectralMeasure:
    """Atoms of a MASA labelled by the characters they induce on U.

    ``unitaries[u]`` is the represented group element E(u); each atom
    carries the character u -> eigenvalue of E(u) on that atom.
    """

    algebra: OperatorAlgebra
    group: FiniteAbelianGroup
    unitaries: np.ndarray
    atoms: list
    residuals: dict

    @property
    def dual(self):
        return DualGroup(self.group)

    @property
    def d(self):
        return self.algebra.d

    @property
    def characters(self):
        return [a.character for a in self.atoms]

    @property
    def spectrum(self):
        return sorted(set(self.characters))

    @property
    def injective(self):
        return len(set(self.characters)) == len(self.atoms)

    def projection(self, chi):
        """E(chi): sum of the atoms carrying character index ``chi`` (zero if none)."""
        d = self.d
        return sum((a.projection for a in self.atoms if a.character == chi), np.zeros((d, d), dtype=complex))

    def reconstruction_residual(self):
        """max_u || E(u) - sum_chi chi(u) E(chi) ||."""
        table = self.dual.table
        worst = 0.0
        for i, u in enumerate(self.unitaries):
            rec = sum(table[a.character, i] * a.projection for a in self.atoms)
            worst = max(worst, float(np.linalg.norm(u - rec)))
        return worst

    def with_swapped_characters(self, i, j):
        """Copy with the character labels of atoms i and j exchanged (negative control)."""
        atoms = [replace(a) for a in self.atoms]
        atoms[i].character, atoms[j].character = atoms[j].character, atoms[i].character
        atoms[i].values, atoms[j].values = atoms[j].values, atoms[i].values
        return replace(self, atoms=atoms)


def spectral_measure(A, U_embed, group, tol=None, seed=0):
    """Simultaneous diagonalization of the MASA A with characters read off U.

    ``U_embed`` holds one unitary per group element in canonical order.
    """
    tol = resolve(tol)
    U = la.as_matrices(list(U_embed), A.d)
    if len(U) != group.order:
        raise DimensionMismatchError(f"expected {group.order} embedded unitaries, got {len(U)}")
    if not A.is_abelian(tol):
        raise PreconditionError("the algebra carrying the spectral measure must be abelian")
    d = A.d
    scale = 1e-8 * max(d, 1)
    for k, u in enumerate(U):
        if not la.is_unitary(u, 1e-8):
            raise PreconditionError(f"embedded element {group.elements[k]} is not unitary")
        if not A.contains(u, max(tol, 1e-11)):
            raise PreconditionError(f"embedded element {group.elements[k]} does not lie in A")
    comm = max(float(np.linalg.norm(x @ y - y @ x)) for x in U for y in U)
    if comm > scale:
        raise PreconditionError(f"embedded unitaries do not commute (residual {comm:.3e})")
    add = group.add_table
    hom = max(float(np.linalg.norm(U[add[i, j]] - U[i] @ U[j])) for i in range(len(U)) for j in range(len(U)))
    hom = max(hom, float(np.linalg.norm(U[0] - np.eye(d))))
    if hom > scale:
        raise PreconditionError(f"embedded unitaries do not form a representation (residual {hom:.3e})")
    dual = DualGroup(group)
    atoms = []
    eig_res = 0.0
    for sec in sector_decompose(A, tol=tol, seed=seed):
        z = sec.projection
        rank = sec.rank
        vals = np.array([np.trace(z @ u) / rank for u in U])
        eig_res = max(eig_res, max(float(np.linalg.norm(u @ z - c * z)) for u, c in zip(U, vals)))
        off = float(np.max(np.abs(np.abs(vals) - 1)))
        if off > np.sqrt(tol):
            raise PreconditionError(f"eigenvalue off the unit circle by {off:.3e}")
        idx = dual.match(vals, atol=np.sqrt(tol))
        if idx is None:
            raise PreconditionError(f"atom eigenvalues {np.round(vals, 6)} are not a character of {group}")
        atoms.append(Atom(z, idx, vals))
    residuals = {"commutation": comm, "homomorphism": hom, "eigenvector": eig_res}
    return SpectralMeasure(A, group, U, atoms, residuals)


def coupling_EstarV(E, dual=None):
    """E_*(V) = sum_chi E(chi) (x) l_chi with l_chi|gamma> = |chi gamma>, on H (x) l2(Û)."""
    dual = dual or E.dual
    if dual.host != E.group:
        raise PreconditionError("dual group does not match the spectral measure's group")
    n = len(dual)
    lam = regular_representation(dual.as_group)
    out = np.zeros((E.d * n, E.d * n), dtype=complex)
    for a in E.atoms:
        if not 0 <= a.character < n:
            raise PreconditionError(f"atom character {a.character} is not in the dual group")
        out += np.kron(a.projection, lam[a.character])
    return out


def coupling_EW(E_or_unitaries, group=None):
    """EW = sum_u E(u)^dag (x) e_uu on H (x) l2(U), i.e. (EW xi)(u) = E(u)^dag xi(u)."""
    if isinstance(E_or_unitaries, SpectralMeasure):
        U, group = E_or_unitaries.unitaries, E_or_unitaries.group
    else:
        U = la.as_matrices(list(E_or_unitaries))
    n = group.order
    d = U.shape[-1]
    out = np.zeros((d * n, d * n), dtype=complex)
    for k in range(n):
        e = np.zeros((n, n))
        e[k, k] = 1.0
        out += np.kron(U[k].conj().T, e)
    return out


def modified_pentagon_residual(coupling, kt_matrix, d, n):
    """|| C12 C13 K23 - K23 C12 || on H (x) C^n (x) C^n."""
    dims = (d, n, n)
    c12 = embed_legs(coupling, (0, 1), dims)
    c13 = embed_legs(coupling, (0, 2), dims)
    k23 = embed_legs(kt_matrix, (1, 2), dims)
    return float(np.linalg.norm(c12 @ c13 @ k23 - k23 @ c12))


def EW_checks(E, rng=None, samples=3):
    """Residuals of the defining properties of EW for the spectral measure E."""
    rng = rng or np.random.default_rng(0)
    group, U, d = E.group, E.unitaries, E.d
    n = group.order
    ew = coupling_EW(E)
    lam = regular_representation(group)
    w = build_W(group).matrix
    ad = 0.0
    for _ in range(samples):
        blocks = rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))
        xhat = sum(np.kron(blocks[k], _diag_unit(n, k)) for k in range(n))
        lhs = ew @ xhat @ ew.conj().T
        for k in range(n):
            sl = _block(lhs, k, d, n)
            ad = max(ad, float(np.linalg.norm(sl - U[k].conj().T @ blocks[k] @ U[k])))
    inter = max(
        float(np.linalg.norm(ew @ np.kron(U[k], lam[k]) - np.kron(np.eye(d), lam[k]) @ ew)) for k in range(n)
    )
    return {
        "adjoint_action": ad,
        "modified_pentagon": modified_pentagon_residual(ew, w, d, n),
        "intertwining": inter,
        "unitarity": float(np.linalg.norm(ew.conj().T @ ew - np.eye(d * n))),
    }


def _diag_unit(n, k):
    e = np.zeros((n, n))
    e[k, k] = 1.0
    return e


def _block(x, k, d, n):
    """The (k, k) pointer block of an operator on H (x) C^n."""
    return x.reshape(d, n, d, n)[:, k, :, k]
