from typing import Literal

import numpy as np
from pydantic import BaseModel


ComplexPair = tuple[float, float]
ComplexMatrix = list[list[ComplexPair]]


def matrix_to_pairs(array) -> ComplexMatrix:
    """Write a complex matrix as rows of [re, im] pairs."""
    array = np.atleast_2d(np.asarray(array, dtype=complex))
    return [[(float(z.real), float(z.imag)) for z in row] for row in array]


def pairs_to_matrix(rows) -> np.ndarray:
    """Read rows of [re, im] pairs back into a complex matrix."""
    return np.atleast_2d(
        np.array([[complex(pair[0], pair[1]) for pair in row] for row in rows], dtype=complex)
    )


class InputNumber(BaseModel):
    type: Literal["number"]
    value: float
    description: str


MassConvention = Literal["metric", "explicit"]


class IBCError(Exception):
    """Base class for errors raised by ibcsim."""


class StructuralError(IBCError):
    """Shapes or dimensions do not fit together."""


class ConditionError(IBCError):
    """Coefficients cannot satisfy the IBC self-adjointness conditions."""


class GeometryError(IBCError):
    """Grid, face or boundary map cannot be constructed."""


class AssemblyError(IBCError):
    """The discrete Hamiltonian cannot be assembled."""


class NonHermitianError(IBCError):
    """Evolution was asked to run on a flagged (non-Hermitian) operator."""


class SolverError(IBCError):
    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class ConfigError(IBCError):
    def __init__(self, message: str, diagnostics: list[str] = None):
        super().__init__(message)
        self.diagnostics = diagnostics if diagnostics is not None else []
