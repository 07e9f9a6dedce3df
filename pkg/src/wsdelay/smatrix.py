"""Scattering-matrix container shared by the closed-form and BEM solvers."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContractError
from .modal import ModeSet


class BoundaryCondition(Enum):
    SOUND_SOFT = "soft"   # Dirichlet: potential vanishes on the boundary
    SOUND_HARD = "hard"   # Neumann: normal derivative vanishes


@dataclass
class SMatrix:
    """Dense M x M map from incoming to outgoing modal amplitudes at fixed k.

    Lossless reciprocal scatterers give unitary, symmetric matrices; the
    residual methods quantify how far a computed matrix is from that.
    """

    modes: ModeSet
    k: float
    matrix: np.ndarray

    def __post_init__(self):
        m = len(self.modes)
        if self.matrix.shape != (m, m):
            raise ContractError(
                f"matrix shape {self.matrix.shape} does not match mode count {m}"
            )

    def unitarity_residual(self) -> float:
        m = self.matrix.shape[0]
        gram = self.matrix.conj().T @ self.matrix
        return float(np.linalg.norm(gram - np.eye(m)) / np.sqrt(m))

    def symmetry_residual(self) -> float:
        denom = np.linalg.norm(self.matrix)
        if denom == 0.0:
            return 0.0
        return float(np.linalg.norm(self.matrix - self.matrix.T) / denom)
