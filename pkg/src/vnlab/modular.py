"""Tomita-Takesaki theory for a faithful state on a matrix algebra.

The GNS space of phi on M is M itself with <x, y> = phi(x^dag y) and cyclic
vector Omega = 1. Vectors are written in coordinates with respect to a
phi-orthonormal basis C_j of M. Antilinear maps are stored as K with
S a = K conj(a).

Densities: phi(x) = Tr(rho x) with rho the trace-orthogonal projection of
the given ambient density onto M, so rho lies in M. Then
Delta(x) = rho x rho^{-1}, J(x) = rho^{1/2} x^dag rho^{-1/2}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from vnlab import _linalg as la
from vnlab.config import resolve
from vnlab.errors import DimensionMismatchError, PreconditionError
from vnlab.groups import regular_representation
from vnlab.vna import OperatorAlgebra, StateOnAlgebra, commutant

__all__ = [
    "FAITHFUL_THRESHOLD",
    "StandardForm",
    "standard_form",
    "kms_check",
    "relative_modular",
    "connes_cocycle",
    "connes_cocycle_operator_residual",
    "cocycle_chain_residual",
    "dual_weight_check",
    "left_hilbert_algebra_check",
    "canonical_implementation",
]

FAITHFUL_THRESHOLD = 1e-8


def _density(M, state):
    rho = state.rho if isinstance(state, StateOnAlgebra) else np.asarray(state, dtype=complex)
    if rho.ndim == 1:
        rho = np.diag(rho) if rho.shape[0] == M.d else rho
    if rho.shape != (M.d, M.d):
        raise DimensionMismatchError(f"density of shape {rho.shape} on a {M.d}-dimensional space")
    rho_m = M.project(rho)
    return (rho_m + rho_m.conj().T) / 2


def _check_faithful(M, rho_m, label="state"):
    for k, sec in enumerate(M.sectors):
        q = la.range_basis(sec.projection, 1e-12)
        w = np.linalg.eigvalsh(q.conj().T @ rho_m @ q)
        if w.min() <= FAITHFUL_THRESHOLD:
            raise PreconditionError(
                f"{label} is not faithful: sector {k} (block {sec.block_size}) has eigenvalue {w.min():.3e}"
            )


class GNS:
    """phi-orthonormal coordinates on M."""

    def __init__(self, M, rho_m):
        self.M = M
        self.rho = rho_m
        B = M.basis
        gram = np.array([[np.trace(rho_m @ bi.conj().T @ bj) for bj in B] for bi in B])
        gram = (gram + gram.conj().T) / 2
        self.gram_half = la.hermitian_power(gram, 0.5)
        self.gram_mhalf = la.hermitian_power(gram, -0.5)
        self.C = np.tensordot(self.gram_mhalf.T, B, axes=1)  # C_j = sum_i B_i G^{-1/2}_{ij}

    @property
    def dim(self):
        return self.M.dim

    def coords(self, x):
        return self.gram_half @ self.M.coordinates(x)

    def element(self, a):
        return np.tensordot(np.asarray(a, dtype=complex), self.C, axes=1)

    def left(self, x):
        """Matrix of left multiplication by x on the GNS space."""
        return np.array([self.coords(x @ c) for c in self.C]).T

    def omega(self):
        return self.coords(np.eye(self.M.d))


@dataclass
class StandardForm:
    M: OperatorAlgebra
    rho: np.ndarray
    gns: GNS
    K: np.ndarray  # S = K conj
    delta: np.ndarray
    KJ: np.ndarray  # J = KJ conj

    @property
    def dim(self):
        return self.gns.dim

    def phi(self, x):
        return complex(np.trace(self.rho @ x))

    def delta_power(self, z):
        return la.hermitian_power(self.delta, z)

    def spectrum(self):
        return np.sort(np.linalg.eigvalsh(self.delta))

    def modular_automorphism(self, x, t):
        """sigma_t(x) = Delta^{it} x Delta^{-it}, read back as an element of M."""
        return self.gns.element(self.delta_power(1j * t) @ self.gns.coords(x))

    def sigma_minus_i(self, x):
        return self.gns.element(self.delta @ self.gns.coords(x))

    def apply_J(self, a):
        return self.KJ @ np.conj(a)

    def invariants(self, times=(0.3, 1.0, np.sqrt(2)), tol=None):
        """Residuals of the defining properties of the standard form."""
        tol = resolve(tol)
        g = self.gns
        n = self.dim
        L = [g.left(b) for b in self.M.basis]
        res = {}
        # S(x Omega) = x^dag Omega on the basis
        res["S"] = max(
            float(np.linalg.norm(self.K @ np.conj(g.coords(b)) - g.coords(b.conj().T))) for b in self.M.basis
        )
        res["J_involution"] = float(np.linalg.norm(self.KJ @ np.conj(self.KJ) - np.eye(n)))
        res["J_unitary"] = float(np.linalg.norm(self.KJ.conj().T @ self.KJ - np.eye(n)))
        res["S_polar"] = float(np.linalg.norm(self.KJ @ np.conj(self.delta_power(0.5)) - self.K))
        jmj = [self.KJ @ np.conj(l) @ np.conj(self.KJ) for l in L]
        comm = commutant(L, d=n, tol=tol)
        jmj_alg = OperatorAlgebra.span(jmj, d=n, tol=tol)
        res["JMJ_commutant"] = comm.distance(jmj_alg) if comm.dim == jmj_alg.dim else 1.0
        Lalg = OperatorAlgebra.span(L, d=n, tol=tol)
        worst = 0.0
        for t in times:
            u = self.delta_power(1j * t)
            worst = max(worst, max(Lalg.residual(u @ l @ u.conj().T) for l in L))
        res["modular_invariance"] = worst
        w = self.spectrum()
        res["spectrum_symmetry"] = float(np.max(np.abs(np.sort(1 / w) - w)))
        return res


def standard_form(M, state):
    """GNS data, S, Delta and J for a faithful state on M."""
    rho = _density(M, state)
    _check_faithful(M, rho)
    g = GNS(M, rho)
    K = np.array([g.coords(c.conj().T) for c in g.C]).T
    delta = K.T @ np.conj(K)
    delta = (delta + delta.conj().T) / 2
    KJ = K @ np.conj(la.hermitian_power(delta, -0.5))
    return StandardForm(M, rho, g, K, delta, KJ)


def kms_check(sf, x, y):
    """|phi(xy) - phi(y sigma_{-i}(x))| with sigma_{-i}(x) taken from Delta."""
    return abs(sf.phi(x @ y) - sf.phi(y @ sf.sigma_minus_i(x)))


def relative_modular(psi, phi, M):
    """Delta_{psi,phi} on the GNS space of phi (phi-orthonormal coordinates)."""
    rho_phi = _density(M, phi)
    rho_psi = _density(M, psi)
    _check_faithful(M, rho_phi, "phi")
    _check_faithful(M, rho_psi, "psi")
    gp, gq = GNS(M, rho_phi), GNS(M, rho_psi)
    K = np.array([gq.coords(c.conj().T) for c in gp.C]).T
    delta = K.T @ np.conj(K)
    return (delta + delta.conj().T) / 2, gp


def connes_cocycle(psi, phi, M, t):
    """(D psi : D phi)_t = Delta_{psi,phi}^{it} Delta_phi^{-it}, returned as an element of M.

    Since Delta_phi^{-it} fixes Omega, the element is Delta_{psi,phi}^{it} Omega.
    """
    rel, g = relative_modular(psi, phi, M)
    return g.element(la.hermitian_power(rel, 1j * t) @ g.omega())


def connes_cocycle_operator_residual(psi, phi, M, t):
    """|| Delta_{psi,phi}^{it} Delta_phi^{-it} - L(u_t) || on the GNS space of phi."""
    rel, g = relative_modular(psi, phi, M)
    sf = standard_form(M, phi)
    op = la.hermitian_power(rel, 1j * t) @ sf.delta_power(-1j * t)
    u = g.element(la.hermitian_power(rel, 1j * t) @ g.omega())
    return float(np.linalg.norm(op - g.left(u)))


def cocycle_chain_residual(psi, phi, chi, M, t):
    """|| (Dpsi:Dphi)_t (Dphi:Dchi)_t - (Dpsi:Dchi)_t ||."""
    a = connes_cocycle(psi, phi, M, t)
    b = connes_cocycle(phi, chi, M, t)
    c = connes_cocycle(psi, chi, M, t)
    return float(np.linalg.norm(a @ b - c))


def canonical_implementation(sf, action, s):
    """U(s) on the GNS space: x -> theta_s(x) theta_s(rho)^{1/2} rho^{-1/2}.

    This is the transport of xi -> theta_s(xi) on the L2 picture
    xi = x rho^{1/2}, hence unitary and implementing theta_s.
    """
    g = sf.gns
    rho_mh = la.hermitian_power(sf.rho, -0.5)
    tr = la.hermitian_power(action.apply(s, sf.rho), 0.5)
    return np.array([g.coords(action.apply(s, c) @ tr @ rho_mh) for c in g.C]).T


def _pullback_density(action, rho, s):
    """Density of phi o theta_s: W_s^dag rho W_s."""
    w = action.unitaries[s]
    return w.conj().T @ rho @ w


def dual_weight_check(action, state, times=(0.3, 1.0, np.sqrt(2)), tol=None):
    """Verify the modular data of the dual weight on N x_theta G.

    Space: H_phi (x) l2(G). pi_theta(x) = sum_g L(theta_g^{-1}(x)) (x) e_gg,
    lambda(s) = 1 (x) lam_s, Delta~^{it} = (+)_s Delta_{phi o theta_s, phi}^{it}.
    Checks sigma_t(pi_theta(x)) = pi_theta(sigma_t^phi(x)),
    sigma_t(lambda(s)) = lambda(s) pi_theta((D phi o theta_s : D phi)_t),
    agreement of Delta~ with the Tomita operator of the vector Omega (x) delta_e,
    and the conjugation formula (J~ xi)(s) = U(s) J xi(s^{-1}) transported
    to this picture.
    """
    tol = resolve(tol)
    action.validate()
    N = action.algebra
    G = action.group
    n = G.order
    sf = standard_form(N, state)
    g = sf.gns
    k = g.dim
    neg = G.neg_table
    lam = regular_representation(G)
    rho = sf.rho

    def e(i):
        m = np.zeros((n, n))
        m[i, i] = 1.0
        return m

    def pi(x):
        return sum(np.kron(g.left(action.apply(int(neg[i]), x)), e(i)) for i in range(n))

    def lam_op(s):
        return np.kron(np.eye(k), lam[s])

    rels = [relative_modular(_pullback_density(action, rho, s), rho, N)[0] for s in range(n)]

    def delta_it(t):
        return sum(np.kron(la.hermitian_power(rels[s], 1j * t), e(s)) for s in range(n))

    rng = np.random.default_rng(0)
    res_pi, res_lam = 0.0, 0.0
    cocycles = {}
    for t in times:
        u = delta_it(t)
        for _ in range(3):
            x = N.random_element(rng)
            lhs = u @ pi(x) @ u.conj().T
            res_pi = max(res_pi, float(np.linalg.norm(lhs - pi(sf.modular_automorphism(x, t)))))
        for s in range(n):
            c = connes_cocycle(_pullback_density(action, rho, s), rho, N, t)
            cocycles[(float(t), s)] = c
            lhs = u @ lam_op(s) @ u.conj().T
            res_lam = max(res_lam, float(np.linalg.norm(lhs - lam_op(s) @ pi(c))))

    # Tomita operator of Omega (x) delta_e for the algebra generated by pi(N) and lambda(G)
    basis = [pi(b) @ lam_op(s) for s in range(n) for b in N.basis]
    omega = np.kron(g.omega(), np.eye(n)[0])
    V = np.array([b @ omega for b in basis]).T
    Wd = np.array([b.conj().T @ omega for b in basis]).T
    if np.linalg.matrix_rank(V) < V.shape[0]:
        raise PreconditionError("Omega (x) delta_e is not cyclic for the crossed product")
    K = Wd @ np.conj(np.linalg.inv(V))
    tomita = K.T @ np.conj(K)
    tomita = (tomita + tomita.conj().T) / 2
    delta_tilde = sum(np.kron(rels[s], e(s)) for s in range(n))
    res_tomita = float(np.linalg.norm(tomita - delta_tilde))
    KJ = K @ np.conj(la.hermitian_power(tomita, -0.5))

    # (J~ xi)(s) = U(s) J xi(s^{-1}) in the picture where N acts by L(x) (x) 1 and
    # lambda by U (x) lam; conjugate into the present picture with
    # T = sum_g U(g^{-1}) (x) e_gg.
    U = [canonical_implementation(sf, action, s) for s in range(n)]
    covariant_form = sum(np.kron(U[s] @ sf.KJ, np.outer(np.eye(n)[s], np.eye(n)[neg[s]])) for s in range(n))
    T = sum(np.kron(U[int(neg[i])], e(i)) for i in range(n))
    # J~ = T J~' T^dag with J~' = K' conj, so K = T K' conj(T^dag)
    formula = T @ covariant_form @ np.conj(T.conj().T)
    res_j = float(np.linalg.norm(KJ - formula))
    return {
        "sigma_pi": res_pi,
        "sigma_lambda": res_lam,
        "tomita_delta": res_tomita,
        "conjugation": res_j,
        "invariant_state": all(
            np.linalg.norm(_pullback_density(action, rho, s) - rho) < 1e-10 for s in range(n)
        ),
        "cocycles": cocycles,
    }


def left_hilbert_algebra_check(action, state, samples=3, seed=0):
    """Residuals for the twisted convolution algebra and its representation pi~.

    pi~(X) = sum_s L(X(s)) U(s) (x) lam_s on H_phi (x) l2(G) with U the
    canonical implementation of theta.
    """
    from vnlab.crossed import convolution_product, involution

    N = action.algebra
    G = action.group
    n = G.order
    sf = standard_form(N, state)
    g = sf.gns
    lam = regular_representation(G)
    U = [canonical_implementation(sf, action, s) for s in range(n)]

    def pit(X):
        return sum(np.kron(g.left(X[s]) @ U[s], lam[s]) for s in range(n))

    rng = np.random.default_rng(seed)

    def rand():
        return np.array([N.random_element(rng) for _ in range(n)])

    res = {"homomorphism": 0.0, "adjoint": 0.0, "double_involution": 0.0, "bimodule": 0.0, "implementation": 0.0}
    for s in range(n):
        for b in N.basis[:4]:
            res["implementation"] = max(
                res["implementation"],
                float(np.linalg.norm(U[s] @ g.left(b) @ U[s].conj().T - g.left(action.apply(s, b)))),
            )
    for _ in range(samples):
        X, Y, a = rand(), rand(), N.random_element(rng)
        XY = convolution_product(X, Y, action)
        res["homomorphism"] = max(res["homomorphism"], float(np.linalg.norm(pit(XY) - pit(X) @ pit(Y))))
        res["adjoint"] = max(res["adjoint"], float(np.linalg.norm(pit(involution(X, action)) - pit(X).conj().T)))
        res["double_involution"] = max(
            res["double_involution"], float(np.linalg.norm(involution(involution(X, action), action) - X))
        )
        aX = np.array([a @ x for x in X])
        Xa = np.array([X[s] @ action.apply(s, a) for s in range(n)])
        aY = np.array([a @ y for y in Y])
        Ya = np.array([Y[s] @ action.apply(s, a) for s in range(n)])
        rels = [
            np.linalg.norm(np.array([a @ z for z in XY]) - convolution_product(aX, Y, action)),
            np.linalg.norm(np.array([XY[s] @ action.apply(s, a) for s in range(n)]) - convolution_product(X, Ya, action)),
            np.linalg.norm(convolution_product(Xa, Y, action) - convolution_product(X, aY, action)),
            np.linalg.norm(pit(aX) - np.kron(g.left(a), np.eye(n)) @ pit(X)),
        ]
        res["bimodule"] = max(res["bimodule"], float(max(rels)))
    return res
