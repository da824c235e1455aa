from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from .errors import NumericError, ShapeError


def as_feature_matrix(inputs, feature_dim: Optional[int] = None) -> np.ndarray:
    """Coerce a sequence of feature vectors (or scalars) into an (N, d) float array."""
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if feature_dim in (None, 1) else x.reshape(1, -1)
    if x.ndim != 2:
        raise ShapeError(f"inputs must be a sequence of feature vectors, got shape {x.shape}")
    if feature_dim is not None and x.shape[1] != feature_dim:
        raise ShapeError(f"expected feature dimension {feature_dim}, got {x.shape[1]}")
    return x


@dataclass(frozen=True)
class Dataset:
    """Labelled points with an optional held-out split of the same feature dimension."""
    inputs: np.ndarray
    labels: np.ndarray
    test_inputs: Optional[np.ndarray] = None
    test_labels: Optional[np.ndarray] = None
    name: str = field(default="dataset")

    def __post_init__(self):
        x = as_feature_matrix(self.inputs)
        y = np.asarray(self.labels, dtype=np.float64).reshape(-1)
        if x.shape[0] != y.shape[0]:
            raise ShapeError(f"{x.shape[0]} inputs but {y.shape[0]} labels")
        if not np.all(np.isfinite(y)):
            raise NumericError("labels must be finite")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "labels", y)

        if (self.test_inputs is None) != (self.test_labels is None):
            raise ShapeError("test_inputs and test_labels must be given together")
        if self.test_inputs is not None:
            tx = as_feature_matrix(self.test_inputs, feature_dim=x.shape[1])
            ty = np.asarray(self.test_labels, dtype=np.float64).reshape(-1)
            if tx.shape[0] != ty.shape[0]:
                raise ShapeError(f"{tx.shape[0]} test inputs but {ty.shape[0]} test labels")
            object.__setattr__(self, "test_inputs", tx)
            object.__setattr__(self, "test_labels", ty)

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def has_test(self) -> bool:
        return self.test_inputs is not None and self.test_inputs.shape[0] > 0

    def to_frame(self) -> pd.DataFrame:
        """Feature columns x0..x{d-1}, label, split."""
        parts = [self._frame(self.inputs, self.labels, "train")]
        if self.has_test:
            parts.append(self._frame(self.test_inputs, self.test_labels, "test"))
        return pd.concat(parts, ignore_index=True)

    @staticmethod
    def _frame(x: np.ndarray, y: np.ndarray, split: str) -> pd.DataFrame:
        frame = pd.DataFrame(x, columns=[f"x{j}" for j in range(x.shape[1])])
        frame["label"] = y
        frame["split"] = split
        return frame
