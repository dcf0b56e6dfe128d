"""Measurement instruments driven by the coupling E_*(V).

The pointer lives in l2(Û) and starts in the neutral position |iota>, the
identity character. An outcome set Delta is a set of character indices;
its pointer projection is chi_Delta = sum_{gamma in Delta} |gamma><gamma|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from vnlab import _linalg as la
from vnlab.config import DEFAULT_SEED, resolve
from vnlab.errors import DimensionMismatchError, PreconditionError
from vnlab.groups import Character, fourier_transform, invariant_mean, regular_representation
from vnlab.kt import coupling_EstarV
from vnlab.vna import StateOnAlgebra

__all__ = [
    "InstrumentResult",
    "instrument",
    "instrument_via_invariant_mean",
    "post_state",
    "outcome_distribution",
    "perfect_correlation_check",
    "repeatability_check",
    "sample_outcomes",
]

NEUTRAL = 0


@dataclass
class InstrumentResult:
    outcomes: tuple
    probability: float
    unnormalized: np.ndarray
    normalized: np.ndarray | None

    @property
    def defined(self):
        return self.normalized is not None


def _as_state(omega, d):
    state = omega if isinstance(omega, StateOnAlgebra) else StateOnAlgebra(omega)
    if state.d != d:
        raise DimensionMismatchError(f"state on dimension {state.d}, system on {d}")
    state.require_normalized()
    return state


def _outcome_indices(delta, n):
    out = []
    for g in delta:
        if isinstance(g, Character):
            g = g.group.index(g.exponents)
        g = int(g)
        if not 0 <= g < n:
            raise PreconditionError(f"outcome {g} is not a character of the measured group")
        out.append(g)
    return tuple(sorted(set(out)))


def _pointer_projection(indices, n):
    chi = np.zeros((n, n))
    chi[list(indices), list(indices)] = 1.0
    return chi


def _neutral(n, iota):
    ket = np.zeros((n, n))
    ket[iota, iota] = 1.0
    return ket


def instrument(delta, omega, B, coupling, n, iota=NEUTRAL):
    """(omega (x) <iota|.|iota>)(C^dag (B (x) chi_Delta) C) for the coupling C on H (x) l2(Û)."""
    d = coupling.shape[0] // n
    state = _as_state(omega, d)
    idx = _outcome_indices(delta, n)
    B = np.asarray(B, dtype=complex)
    if B.shape != (d, d):
        raise DimensionMismatchError(f"observable of shape {B.shape} on a {d}-dimensional system")
    obs = coupling.conj().T @ np.kron(B, _pointer_projection(idx, n)) @ coupling
    return complex(np.trace(np.kron(state.rho, _neutral(n, iota)) @ obs))


def instrument_via_invariant_mean(delta, omega, B, coupling, group):
    """The same pairing with |iota><iota| replaced by the invariant mean of the
    pointer translates F lam_u F^dag (multiplication by conj(gamma(u)))."""
    n = group.order
    d = coupling.shape[0] // n
    state = _as_state(omega, d)
    idx = _outcome_indices(delta, n)
    f = fourier_transform(group)
    lam = regular_representation(group)
    obs = coupling.conj().T @ np.kron(np.asarray(B, dtype=complex), _pointer_projection(idx, n)) @ coupling
    values = np.array([np.trace(np.kron(state.rho, f @ l @ f.conj().T) @ obs) for l in lam])
    return complex(invariant_mean(values, group))


def post_state(delta, omega, coupling, n, iota=NEUTRAL, tol=None):
    """Probability of Delta and the conditional state on the system.

    The unnormalized functional is Tr_pointer[chi_Delta C (rho (x) |iota><iota|) C^dag chi_Delta].
    """
    tol = resolve(tol)
    d = coupling.shape[0] // n
    state = _as_state(omega, d)
    idx = _outcome_indices(delta, n)
    chi = np.kron(np.eye(d), _pointer_projection(idx, n))
    joint = chi @ coupling @ np.kron(state.rho, _neutral(n, iota)) @ coupling.conj().T @ chi
    sigma = np.einsum("aibi->ab", joint.reshape(d, n, d, n))
    p = float(np.real(np.trace(sigma)))
    p = min(max(p, 0.0), 1.0)
    normalized = sigma / p if p > tol else None
    return InstrumentResult(idx, p, sigma, normalized)


def outcome_distribution(omega, E, coupling=None, iota=NEUTRAL):
    """Probability of every character of Û (zero off the spectrum)."""
    coupling = coupling_EstarV(E) if coupling is None else coupling
    n = E.group.order
    return np.array([post_state([g], omega, coupling, n, iota).probability for g in range(n)])


def perfect_correlation_check(coupling, E, iota=NEUTRAL, tol=1e-10):
    """Per atom: max over a basis xi of range E(gamma) of ||C(xi (x) |iota>) - xi (x) |gamma>||."""
    n = E.group.order
    report = []
    for k, atom in enumerate(E.atoms):
        cols = la.range_basis(atom.projection, 1e-12)
        worst = 0.0
        for j in range(cols.shape[1]):
            xi = cols[:, j]
            src = np.kron(xi, np.eye(n)[iota])
            dst = np.kron(xi, np.eye(n)[atom.character])
            worst = max(worst, float(np.linalg.norm(coupling @ src - dst)))
        report.append({"atom": k, "character": atom.character, "residual": worst, "passed": worst < tol})
    return report


def repeatability_check(omega, E, coupling=None, iota=NEUTRAL, tol=1e-10):
    """Measuring twice: the second outcome equals the first with probability one."""
    coupling = coupling_EstarV(E) if coupling is None else coupling
    n = E.group.order
    worst = 0.0
    for g in E.spectrum:
        first = post_state([g], omega, coupling, n, iota)
        if not first.defined:
            continue
        again = post_state([g], StateOnAlgebra(first.normalized), coupling, n, iota)
        worst = max(worst, abs(1 - again.probability))
    return {"residual": worst, "passed": worst < tol}


def sample_outcomes(omega, E, shots, seed=DEFAULT_SEED, coupling=None):
    """Seeded outcome counts per character; the exact probabilities remain authoritative."""
    p = outcome_distribution(omega, E, coupling)
    p = np.clip(p, 0, None)
    p = p / p.sum()
    rng = np.random.default_rng(seed)
    draws = rng.choice(len(p), size=int(shots), p=p)
    return np.bincount(draws, minlength=len(p))
