"""Finite abelian groups Z_{n1} x ... x Z_{nk}, their duals and Fourier analysis.

Elements are exponent tuples and are enumerated lexicographically, so the
identity always sits at index 0. Characters are addressed the same way:
the character with exponents ``a`` evaluates as
``exp(2 pi i sum_j a_j u_j / n_j)``. Haar measure is counting measure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "FiniteAbelianGroup",
    "Character",
    "DualGroup",
    "fourier_transform",
    "invariant_mean",
    "regular_representation",
]


@dataclass(frozen=True)
class FiniteAbelianGroup:
    orders: tuple[int, ...]

    def __post_init__(self):
        orders = tuple(int(n) for n in self.orders)
        if any(n < 1 for n in orders):
            raise ValueError(f"cyclic factor orders must be >= 1, got {orders}")
        object.__setattr__(self, "orders", orders)

    @classmethod
    def cyclic(cls, n: int) -> "FiniteAbelianGroup":
        return cls((n,))

    @classmethod
    def trivial(cls) -> "FiniteAbelianGroup":
        return cls(())

    @property
    def order(self) -> int:
        return int(np.prod(self.orders, dtype=np.int64))

    def __len__(self):
        return self.order

    @cached_property
    def elements(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(n) for n in self.orders)))

    @cached_property
    def _strides(self) -> np.ndarray:
        strides = np.ones(len(self.orders), dtype=np.int64)
        for j in range(len(self.orders) - 2, -1, -1):
            strides[j] = strides[j + 1] * self.orders[j + 1]
        return strides

    def index(self, u: Sequence[int]) -> int:
        u = self.reduce(u)
        return int(np.dot(u, self._strides)) if u else 0

    def reduce(self, u: Sequence[int]) -> tuple[int, ...]:
        if len(u) != len(self.orders):
            raise ValueError(f"element {tuple(u)} does not match group orders {self.orders}")
        return tuple(int(x) % n for x, n in zip(u, self.orders))

    @property
    def identity(self) -> tuple[int, ...]:
        return tuple(0 for _ in self.orders)

    def add(self, u, v) -> tuple[int, ...]:
        return tuple((a + b) % n for a, b, n in zip(u, v, self.orders))

    def neg(self, u) -> tuple[int, ...]:
        return tuple((-a) % n for a, n in zip(u, self.orders))

    def sub(self, u, v) -> tuple[int, ...]:
        return self.add(u, self.neg(v))

    @cached_property
    def add_table(self) -> np.ndarray:
        """``add_table[i, j]`` is the index of ``elements[i] + elements[j]``."""
        els = self.elements
        return np.array([[self.index(self.add(u, v)) for v in els] for u in els], dtype=np.int64)

    @cached_property
    def neg_table(self) -> np.ndarray:
        return np.array([self.index(self.neg(u)) for u in self.elements], dtype=np.int64)

    @property
    def generators(self) -> list[tuple[int, ...]]:
        """Unit vectors of the cyclic factors (trivial factors are skipped)."""
        k = len(self.orders)
        return [tuple(int(i == j) for i in range(k)) for j in range(k) if self.orders[j] > 1]

    def dual(self) -> "DualGroup":
        return DualGroup(self)

    def __str__(self):
        if not self.orders or self.order == 1:
            return "1"
        return " x ".join(f"Z_{n}" for n in self.orders)


@dataclass(frozen=True)
class Character:
    group: FiniteAbelianGroup
    exponents: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "exponents", self.group.reduce(self.exponents))

    def __call__(self, u: Sequence[int]) -> complex:
        phase = sum(a * x / n for a, x, n in zip(self.exponents, u, self.group.orders))
        return complex(np.exp(2j * np.pi * phase))

    def values(self) -> np.ndarray:
        """Values on all group elements in canonical order."""
        return np.array([self(u) for u in self.group.elements])

    def __mul__(self, other: "Character") -> "Character":
        return Character(self.group, self.group.add(self.exponents, other.exponents))

    def inverse(self) -> "Character":
        return Character(self.group, self.group.neg(self.exponents))

    @property
    def is_identity(self) -> bool:
        return not any(self.exponents)


class DualGroup:
    """The character group of a finite abelian group, canonically enumerated.

    Index ``i`` of the dual corresponds to the exponent tuple
    ``host.elements[i]``; in particular the neutral character sits at 0.
    """

    def __init__(self, host: FiniteAbelianGroup):
        self.host = host
        self.characters = [Character(host, a) for a in host.elements]
        # Û is again Z_{n1} x ... x Z_{nk}, addressed by the same exponent tuples.
        self.as_group = FiniteAbelianGroup(host.orders)

    def __len__(self):
        return len(self.characters)

    def __iter__(self):
        return iter(self.characters)

    def __getitem__(self, i) -> Character:
        return self.characters[i]

    @property
    def neutral(self) -> Character:
        return self.characters[0]

    def index(self, chi: Character | Sequence[int]) -> int:
        if isinstance(chi, Character):
            if chi.group != self.host:
                raise ValueError("character belongs to a different group")
            chi = chi.exponents
        return self.host.index(chi)

    @cached_property
    def table(self) -> np.ndarray:
        """``table[i, j] = characters[i](elements[j])``."""
        return np.array([chi.values() for chi in self.characters])

    def match(self, values: np.ndarray, atol: float = 1e-8) -> int | None:
        """Index of the character whose value vector equals ``values``, if any."""
        dist = np.max(np.abs(self.table - np.asarray(values)[None, :]), axis=1)
        i = int(np.argmin(dist))
        return i if dist[i] <= atol else None

    def double_dual_map(self) -> list[int]:
        """u -> (gamma -> gamma(u)), as indices into the dual of the dual.

        The values gamma(u) over the canonical character list are matched
        against the characters of Û viewed as a group in its own right.
        """
        bidual = DualGroup(self.as_group)
        images = []
        for j in range(len(self.host.elements)):
            idx = bidual.match(self.table[:, j])
            if idx is None:
                raise ArithmeticError("evaluation map does not land in the bidual")
            images.append(idx)
        return images


def fourier_transform(group: FiniteAbelianGroup) -> np.ndarray:
    """Unitary F: l2(U) -> l2(Û) with ``F[gamma, u] = conj(gamma(u)) / sqrt(|U|)``."""
    return DualGroup(group).table.conj() / np.sqrt(group.order)


def invariant_mean(f: Callable[[tuple[int, ...]], complex] | np.ndarray, group: FiniteAbelianGroup):
    """Average of ``f`` over the group (normalized counting measure).

    ``f`` may be a callable on exponent tuples or an array of values in
    canonical element order. Array values may themselves be arrays; the
    mean is taken over the leading axis.
    """
    if callable(f):
        values = [f(u) for u in group.elements]
        return np.mean(np.asarray(values), axis=0) if values else 0
    values = np.asarray(f)
    if values.shape[0] != group.order:
        raise ValueError(f"expected {group.order} values, got {values.shape[0]}")
    return values.mean(axis=0)


def regular_representation(group: FiniteAbelianGroup) -> np.ndarray:
    """Left-regular permutation unitaries ``lam[u] |v> = |u + v>``, shape (|U|, |U|, |U|)."""
    n = group.order
    lam = np.zeros((n, n, n))
    table = group.add_table
    for u in range(n):
        lam[u, table[u], np.arange(n)] = 1.0
    return lam


def multiplication_operators(group: FiniteAbelianGroup) -> np.ndarray:
    """Diagonal unitaries ``m[gamma] = diag(gamma(u))`` on l2(U), indexed by Û."""
    table = DualGroup(group).table
    return np.array([np.diag(row) for row in table])
