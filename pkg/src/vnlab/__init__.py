"""Finite-dimensional operator-algebra workbench.

Matrix von Neumann algebras, Kac-Takesaki operators on finite abelian groups,
measurement instruments, crossed products and their duality, abelian
dynamical systems and Tomita-Takesaki modular data, all at desk scale.
"""

from vnlab.config import get_tolerance, set_tolerance, tolerance
from vnlab.errors import (
    DimensionMismatchError,
    NumericalAmbiguityError,
    PreconditionError,
    VNLabError,
)
from vnlab.groups import Character, DualGroup, FiniteAbelianGroup, fourier_transform, invariant_mean

__version__ = "0.1.0"

__all__ = [
    "Character",
    "DimensionMismatchError",
    "DualGroup",
    "FiniteAbelianGroup",
    "NumericalAmbiguityError",
    "PreconditionError",
    "VNLabError",
    "fourier_transform",
    "get_tolerance",
    "invariant_mean",
    "set_tolerance",
    "tolerance",
]
