from dataclasses import dataclass
from typing import List

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from .errors import ShapeError


def _square(values, dtype) -> np.ndarray:
    m = np.asarray(values, dtype=dtype)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"kernel must be a square matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class KernelMatrix:
    """Real symmetric x-space kernel."""
    values: np.ndarray

    def __post_init__(self):
        m = _square(self.values, np.float64)
        scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
        if m.size and np.max(np.abs(m - m.T)) > 1e-10 * scale:
            raise ValueError("kernel matrix is not symmetric")
        object.__setattr__(self, "values", m)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.values)[0])

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, columns=[f"c{j}" for j in range(self.size)])


class FidelityKernel(KernelMatrix):
    """K_ij = |<psi(x_i)|psi(x_j)>|^2; unit diagonal, entries in [0, 1]."""


@dataclass(frozen=True)
class ComplexKernel:
    """k-space image of a KernelMatrix, indexed (k', k)."""
    k_values: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        m = _square(self.values, np.complex128)
        k = np.asarray(self.k_values, dtype=np.float64).reshape(-1)
        if k.shape[0] != m.shape[0]:
            raise ShapeError(f"{k.shape[0]} frequencies for a {m.shape[0]}x{m.shape[0]} kernel")
        object.__setattr__(self, "values", m)
        object.__setattr__(self, "k_values", k)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def hermiticity_gap(self) -> float:
        return float(np.max(np.abs(self.values - self.values.conj().T))) if self.size else 0.0


class SvmModel(BaseModel):
    """Dual soft-margin SVM over a precomputed kernel."""
    alphas: List[float] = Field(..., description="Dual coefficients, each in [0, C]")
    bias: float
    C: float = Field(..., gt=0, description="Box constraint")
    support_indices: List[int] = Field(..., description="Training rows with alpha > 0")
    labels: List[int] = Field(..., description="Training labels in {-1, +1}")
    iterations: int = Field(default=0, description="Accepted pair updates")
    dual_objective_history: List[float] = Field(default_factory=list, exclude=True)

    def coefficient_vector(self) -> np.ndarray:
        """alpha_i * y_i, the weights applied to a kernel row."""
        return np.asarray(self.alphas) * np.asarray(self.labels, dtype=np.float64)
