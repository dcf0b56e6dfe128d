"""Abelian dynamical systems on finite atom sets and covariant systems A (x) B(H).

An automorphism of C^X is a permutation of atoms, so an action of G is a
permutation table ``perms[g][x] = beta_g(x)``. On the diagonal algebra it is
implemented by P_g|x> = |beta_g(x)>.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import cached_property
from importlib import resources

import numpy as np
from scipy.optimize import linprog

from vnlab import _linalg as la
from vnlab.config import DEFAULT_SEED, resolve
from vnlab.crossed import GroupAction, crossed_product, pi_alpha
from vnlab.errors import PreconditionError
from vnlab.groups import FiniteAbelianGroup, regular_representation
from vnlab.modular import relative_modular
from vnlab.vna import OperatorAlgebra, center, generate, is_masa, relative_commutant, tensor

__all__ = [
    "AbelianDynamicalSystem",
    "CovariantSystem",
    "is_free",
    "is_ergodic",
    "proposition2_check",
    "proposition3_check",
    "classify_type",
    "modular_spectrum",
    "enumerate_actions",
    "load_action_corpus",
    "MAX_AMBIENT",
]

MAX_AMBIENT = 64


class AbelianDynamicalSystem:
    def __init__(self, group, perms):
        self.group = group
        perms = np.asarray(perms, dtype=np.int64)
        if perms.ndim != 2 or perms.shape[0] != group.order:
            raise PreconditionError(f"need one permutation per group element, got shape {perms.shape}")
        self.n_atoms = perms.shape[1]
        for p in perms:
            if sorted(p.tolist()) != list(range(self.n_atoms)):
                raise PreconditionError(f"{p.tolist()} is not a permutation")
        if np.any(perms[0] != np.arange(self.n_atoms)):
            raise PreconditionError("the identity element must act trivially")
        add = group.add_table
        for g in range(group.order):
            for h in range(group.order):
                if np.any(perms[add[g, h]] != perms[g][perms[h]]):
                    raise PreconditionError("permutations do not compose like the group")
        self.perms = perms

    @classmethod
    def from_generators(cls, group, generator_perms, n_atoms=None):
        nontrivial = [j for j, n in enumerate(group.orders) if n > 1]
        gens = [np.asarray(p, dtype=np.int64) for p in generator_perms]
        if len(gens) == len(group.orders) and len(gens) != len(nontrivial):
            gens = [gens[j] for j in nontrivial]
        if len(gens) != len(nontrivial):
            raise PreconditionError(f"expected {len(nontrivial)} generator permutations, got {len(gens)}")
        if n_atoms is None:
            n_atoms = len(gens[0]) if gens else 1
        perms = []
        for u in group.elements:
            p = np.arange(n_atoms)
            for k, j in enumerate(nontrivial):
                for _ in range(u[j]):
                    p = gens[k][p]
            perms.append(p)
        return cls(group, perms)

    @classmethod
    def regular(cls, group):
        return cls(group, group.add_table)

    def __repr__(self):
        return f"AbelianDynamicalSystem({self.group}, {self.n_atoms} atoms, generators={self.generator_perms})"

    @property
    def generator_perms(self):
        return [self.perms[self.group.index(g)].tolist() for g in self.group.generators]

    @cached_property
    def unitaries(self):
        n = self.n_atoms
        out = np.zeros((self.group.order, n, n))
        for g, p in enumerate(self.perms):
            out[g, p, np.arange(n)] = 1.0
        return out

    @cached_property
    def algebra(self):
        return OperatorAlgebra.diagonal(self.n_atoms)

    def action(self):
        return GroupAction(self.group, self.algebra, self.unitaries, kind="general")

    def orbits(self):
        seen, out = set(), []
        for x in range(self.n_atoms):
            if x in seen:
                continue
            orb = sorted(set(self.perms[:, x].tolist()))
            seen.update(orb)
            out.append(orb)
        return out

    @property
    def is_faithful(self):
        return all(np.any(p != np.arange(self.n_atoms)) for p in self.perms[1:])

    def relabel(self, sigma):
        """Conjugate by the atom bijection x -> sigma[x]."""
        sigma = np.asarray(sigma)
        inv = np.argsort(sigma)
        return AbelianDynamicalSystem(self.group, [sigma[p[inv]] for p in self.perms])

    def to_dict(self):
        return {"group": list(self.group.orders), "n_atoms": self.n_atoms, "generators": self.generator_perms}

    @classmethod
    def from_dict(cls, data):
        group = FiniteAbelianGroup(data["group"])
        return cls.from_generators(group, data["generators"], n_atoms=data["n_atoms"])


def is_free(sys):
    """No element other than the identity fixes an atom."""
    return not any(np.any(p == np.arange(sys.n_atoms)) for p in sys.perms[1:])


def is_ergodic(sys):
    """The action is transitive on atoms."""
    return len(sys.orbits()) == 1


def _check_size(d):
    if d > MAX_AMBIENT:
        raise PreconditionError(f"ambient dimension {d} exceeds the dense limit {MAX_AMBIENT}")


def _verdict(ok):
    return "pass" if ok else "fail"


def proposition2_check(sys, tol=None, seed=DEFAULT_SEED):
    """free <=> A maximal abelian in Q = A x G; if free, factor <=> ergodic and Z(Q) = A^beta."""
    tol = resolve(tol)
    _check_size(sys.n_atoms * sys.group.order)
    action = sys.action()
    A = sys.algebra
    Q = crossed_product(A, action, tol=tol, seed=seed)
    piA = OperatorAlgebra.span([pi_alpha(action, b) for b in A.basis], d=Q.d, tol=tol)
    free = is_free(sys)
    ergodic = is_ergodic(sys)
    masa = is_masa(piA, Q.algebra, tol=tol)
    ZQ = center(Q.algebra, tol=tol)
    factor = ZQ.dim == 1
    fixed = action.fixed_point_algebra()
    pi_fixed = OperatorAlgebra.span([pi_alpha(action, b) for b in fixed.basis], d=Q.d, tol=tol)
    report = {
        "free": free,
        "ergodic": ergodic,
        "masa": masa,
        "factor": factor,
        "center_dim": ZQ.dim,
        "fixed_point_dim": fixed.dim,
        "invariant": Q.invariant,
        "clause_i": _verdict(free == masa),
    }
    if free:
        report["clause_ii_factor"] = _verdict(factor == ergodic)
        same = ZQ.equals(pi_fixed, tol)
        report["clause_ii_center"] = _verdict(same)
    else:
        report["clause_ii_factor"] = "not-applicable"
        report["clause_ii_center"] = "not-applicable"
    return report


class CovariantSystem:
    """N = C^X (x) B(C^h) with theta_g = Ad(P_g (x) U_g)."""

    def __init__(self, system, unitaries=None, hilbert_dim=None):
        self.system = system
        G = system.group
        if unitaries is None:
            h = hilbert_dim or 1
            unitaries = np.array([np.eye(h)] * G.order)
        unitaries = la.as_matrices(list(unitaries))
        if len(unitaries) != G.order:
            raise PreconditionError(f"need {G.order} unitaries on H, got {len(unitaries)}")
        self.U = unitaries
        self.h = unitaries.shape[-1]

    @classmethod
    def from_generators(cls, system, generator_unitaries):
        from vnlab.crossed import _element_products

        h = np.asarray(generator_unitaries[0]).shape[0] if len(generator_unitaries) else 1
        return cls(system, _element_products(system.group, generator_unitaries, h))

    @property
    def group(self):
        return self.system.group

    @cached_property
    def algebra(self):
        return tensor(self.system.algebra, OperatorAlgebra.full(self.h))

    @cached_property
    def action(self):
        units = np.array([np.kron(p, u) for p, u in zip(self.system.unitaries, self.U)])
        return GroupAction(self.group, self.algebra, units, kind="general")

    @property
    def d(self):
        return self.system.n_atoms * self.h

    def center_generators(self):
        eye = np.eye(self.h)
        return [np.kron(b, eye) for b in self.system.algebra.basis]

    @property
    def centrally_free(self):
        return is_free(self.system)

    @property
    def centrally_ergodic(self):
        return is_ergodic(self.system)

    def restriction_residual(self):
        """theta restricted to Z(N) = A (x) 1 agrees with beta (x) id."""
        beta = self.system.action()
        worst = 0.0
        eye = np.eye(self.h)
        for g in range(self.group.order):
            for b in self.system.algebra.basis:
                worst = max(worst, float(np.linalg.norm(self.action.apply(g, np.kron(b, eye)) - np.kron(beta.apply(g, b), eye))))
        return worst


def proposition3_check(cov, tol=None, seed=DEFAULT_SEED):
    """The three relative-commutant relations inside M = N x_theta G, plus the chain Z(M) = Z(Q) = pi(Z(N)^theta)."""
    tol = resolve(tol)
    G = cov.group
    d = cov.d * G.order
    _check_size(d)
    action = cov.action
    Mx = crossed_product(cov.algebra, action, tol=tol, seed=seed)
    M = Mx.algebra
    lam = regular_representation(G)
    lam_ops = [np.kron(np.eye(cov.d), lam[G.index(g)]) for g in G.generators]
    z_gens = cov.center_generators()
    pi_z = OperatorAlgebra.span([pi_alpha(action, z) for z in z_gens], d=d, tol=tol)
    pi_n = OperatorAlgebra.span([pi_alpha(action, b) for b in cov.algebra.basis], d=d, tol=tol)
    pi_n_gens = [pi_alpha(action, x) for x in cov.algebra.generators]
    Q = generate([pi_alpha(action, z) for z in z_gens] + lam_ops, d=d, tol=tol, seed=seed)
    fixed = action.fixed_point_algebra()
    pi_fixed = OperatorAlgebra.span([pi_alpha(action, b) for b in fixed.basis], d=d, tol=tol)

    rel1 = relative_commutant(pi_n_gens, M, tol=tol)
    rel2 = relative_commutant(list(pi_z.basis), M, tol=tol)
    rel3 = relative_commutant(list(Q.generators), M, tol=tol)
    relations = {
        "center_is_relative_commutant_of_N": _compare(pi_z, rel1),
        "N_is_relative_commutant_of_center": _compare(pi_n, rel2),
        "fixed_points_are_relative_commutant_of_Q": _compare(pi_fixed, rel3),
    }
    z_fixed = cov.system.action().fixed_point_algebra()
    pi_zfixed = OperatorAlgebra.span(
        [pi_alpha(action, np.kron(b, np.eye(cov.h))) for b in z_fixed.basis], d=d, tol=tol
    )
    ZM, ZQ = center(M, tol=tol), center(Q, tol=tol)
    chain = {
        "ZM_equals_ZQ": _compare(ZM, ZQ),
        "ZQ_equals_fixed_center": _compare(ZQ, pi_zfixed),
        "factor_equivalence": _verdict((ZM.dim == 1) == (ZQ.dim == 1) == cov.centrally_ergodic),
    }
    covered = cov.centrally_free
    return {
        "centrally_free": covered,
        "covered_by_hypothesis": covered,
        "relations": relations,
        "center_chain": chain,
        "invariant": Mx.invariant,
        "all_pass": all(r["verdict"] == "pass" for r in relations.values()),
        "center_chain_pass": all(
            (r["verdict"] if isinstance(r, dict) else r) == "pass" for r in chain.values()
        ),
    }


def _compare(a, b):
    dist = a.distance(b) if a.dim == b.dim else 1.0
    return {"verdict": _verdict(a.dim == b.dim and dist < 1e-7), "dims": [a.dim, b.dim], "residual": dist}


def invariant_measure(sys, tol=None):
    """A strictly positive w with w o beta_g = w, via a feasibility LP (w >= 1)."""
    tol = resolve(tol)
    n = sys.n_atoms
    rows = [sys.unitaries[sys.group.index(g)] - np.eye(n) for g in sys.group.generators]
    a_eq = np.vstack(rows) if rows else np.zeros((0, n))
    res = linprog(
        np.ones(n),
        A_eq=a_eq if len(a_eq) else None,
        b_eq=np.zeros(len(a_eq)) if len(a_eq) else None,
        bounds=[(1, None)] * n,
        method="highs",
    )
    if not res.success:
        return None
    w = np.asarray(res.x)
    if len(a_eq) and np.linalg.norm(a_eq @ w) > tol * 10 * max(1.0, np.linalg.norm(w)):
        return None
    return w / w.sum()


def flow_isomorphism(sys):
    """Equivariant bijection G -> X (g -> beta_g(x0)) when the action is free and transitive."""
    if not (is_free(sys) and is_ergodic(sys) and sys.n_atoms == sys.group.order):
        return None
    bij = sys.perms[:, 0].tolist()
    add = sys.group.add_table
    for g in range(sys.group.order):
        for h in range(sys.group.order):
            if sys.perms[g][bij[h]] != bij[add[g, h]]:
                return None
    return bij


def classify_type(cov, tol=None, seed=DEFAULT_SEED):
    """Type classification through the central system."""
    tol = resolve(tol)
    if isinstance(cov, AbelianDynamicalSystem):
        cov = CovariantSystem(cov)
    sys = cov.system
    _check_size(cov.d * cov.group.order)
    Mx = crossed_product(cov.algebra, cov.action, tol=tol, seed=seed)
    factor = center(Mx.algebra, tol=tol).dim == 1
    bij = flow_isomorphism(sys)
    measure = invariant_measure(sys, tol)
    report = {
        "centrally_ergodic": is_ergodic(sys),
        "centrally_free": is_free(sys),
        "factor": factor,
        "invariant": Mx.invariant,
        "flow_isomorphic": bij is not None,
        "flow_isomorphism": bij,
        "invariant_measure": None if measure is None else measure.tolist(),
        "note": "every finite-dimensional factor is of type I; criteria (ii) and (iii) are only exercised as contrapositives",
    }
    if not is_ergodic(sys) or not factor:
        report["type"] = "not a factor"
    elif bij is not None:
        report["type"] = "I"
    elif measure is not None:
        report["type"] = "II by criterion (ii)"
    else:
        report["type"] = "III by criterion (iii)"
    report["consistent"] = (not factor) or report["type"] == "I"
    return report


def modular_spectrum(sys, weights=(), tol=None):
    """Intersection over weights phi of the union over gamma of Spec(Delta_{phi o theta_gamma, phi}).

    The uniform weight is always included. Weights are positive vectors on atoms.
    """
    tol = resolve(tol)
    n = sys.n_atoms
    family = [np.ones(n)] + [np.asarray(w, dtype=float) for w in weights]
    A = sys.algebra
    result = None
    per_weight = []
    for w in family:
        if w.shape != (n,):
            raise PreconditionError(f"weight {w} does not live on {n} atoms")
        if np.any(w <= 0):
            raise PreconditionError(f"weight {w.tolist()} is not faithful")
        rho = np.diag(w / w.sum())
        values = []
        for p in sys.unitaries:
            rel, _ = relative_modular(p.T @ rho @ p, rho, A)
            values.extend(np.linalg.eigvalsh(rel).tolist())
        spec = _unique(values, tol)
        per_weight.append(spec)
        result = spec if result is None else [x for x in result if any(abs(x - y) <= 1e3 * tol * max(1, x) for y in spec)]
    return {"spectrum": result, "per_weight": per_weight, "note": "Connes type-III values are unreachable at finite dimension"}


def _unique(values, tol):
    out = []
    for v in sorted(values):
        if not out or abs(v - out[-1]) > 1e3 * tol * max(1, abs(v)):
            out.append(v)
    return out


def enumerate_actions(group, max_atoms=4):
    """All actions of ``group`` on atom sets of size 1..max_atoms, as systems.

    Generator images run over all permutations with p^{n_j} = id that
    commute pairwise; every homomorphism into S_n arises exactly once.
    """
    nontrivial = [n for n in group.orders if n > 1]
    out = []
    for n in range(1, max_atoms + 1):
        perms = [np.array(p) for p in itertools.permutations(range(n))]
        ident = np.arange(n)
        candidates = []
        for order in nontrivial:
            c = []
            for p in perms:
                q = ident
                for _ in range(order):
                    q = p[q]
                if np.all(q == ident):
                    c.append(p)
            candidates.append(c)
        for choice in itertools.product(*candidates):
            if all(np.all(a[b] == b[a]) for a, b in itertools.combinations(choice, 2)):
                out.append(AbelianDynamicalSystem.from_generators(group, [c.tolist() for c in choice], n_atoms=n))
    return out


CORPUS_GROUPS = [(2,), (3,), (4,), (2, 2)]


def build_action_corpus(max_atoms=4):
    return [s.to_dict() for orders in CORPUS_GROUPS for s in enumerate_actions(FiniteAbelianGroup(orders), max_atoms)]


def load_action_corpus():
    text = resources.files("vnlab").joinpath("data/actions.json").read_text()
    return [AbelianDynamicalSystem.from_dict(d) for d in json.loads(text)["actions"]]
