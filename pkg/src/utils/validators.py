import numpy as np

from ..models.errors import DomainError, NumericError, ShapeError


def ensure_finite(name: str, values) -> np.ndarray:
    arr = np.asarray(values)
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite values")
    return arr


def ensure_length(name: str, values, expected: int) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1 or arr.shape[0] != expected:
        raise ShapeError(f"{name} must have length {expected}, got shape {arr.shape}")
    return arr


def ensure_pm1_labels(labels) -> np.ndarray:
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if y.size == 0 or not np.all(np.isin(y, (-1.0, 1.0))):
        raise DomainError("labels must all be -1 or +1")
    return y


def ensure_psd(name: str, matrix: np.ndarray, tol: float = 1e-9) -> None:
    min_eig = float(np.linalg.eigvalsh(matrix)[0])
    if min_eig < -tol:
        raise NumericError(f"{name} is not positive semidefinite (min eigenvalue {min_eig:.3e})")
