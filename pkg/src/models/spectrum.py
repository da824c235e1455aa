from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import ShapeError

# k values closer than this are treated as the same grid point
_K_MATCH_TOL = 1e-9


def k_label(k: float) -> str:
    """Column-safe label for a frequency: integers print bare, others with 6 significant digits."""
    k = float(k)
    return str(int(round(k))) if abs(k - round(k)) < _K_MATCH_TOL else f"{k:.6g}"


@dataclass(frozen=True)
class SpectrumSeries:
    """Complex amplitudes on a strictly increasing frequency grid; amplitude = A(k) e^{iφ(k)}."""
    k_values: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.k_values, dtype=np.float64).reshape(-1)
        a = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if k.shape != a.shape:
            raise ShapeError(f"{k.shape[0]} frequencies but {a.shape[0]} amplitudes")
        if k.size > 1 and not np.all(np.diff(k) > 0):
            raise ValueError("k_values must be strictly increasing")
        object.__setattr__(self, "k_values", k)
        object.__setattr__(self, "amplitudes", a)

    def __len__(self) -> int:
        return self.k_values.shape[0]

    @property
    def amplitude(self) -> np.ndarray:
        return np.abs(self.amplitudes)

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.amplitudes)

    def index_of(self, k: float) -> int:
        """Grid index of k; IndexError when k is not on the grid."""
        if len(self) == 0:
            raise IndexError(f"k={k} not on an empty grid")
        idx = int(np.argmin(np.abs(self.k_values - k)))
        if abs(self.k_values[idx] - k) > _K_MATCH_TOL:
            raise IndexError(f"k={k} is not on the frequency grid")
        return idx

    def at(self, k: float) -> complex:
        return complex(self.amplitudes[self.index_of(k)])

    def half(self) -> "SpectrumSeries":
        mask = self.k_values >= -_K_MATCH_TOL
        return SpectrumSeries(self.k_values[mask], self.amplitudes[mask])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "k": self.k_values,
            "re": self.amplitudes.real,
            "im": self.amplitudes.imag,
            "abs": self.amplitude,
        })


@dataclass(frozen=True)
class ProjectionDirection:
    """Unit vector p used to project multi-dimensional inputs before a 1-D transform."""
    components: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.components, dtype=np.float64).reshape(-1)
        norm = np.linalg.norm(p)
        if p.size == 0 or abs(norm - 1.0) > 1e-12:
            raise ValueError(f"projection direction must be unit norm, got {norm}")
        object.__setattr__(self, "components", p)

    def project(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.shape[1] != self.components.shape[0]:
            raise ShapeError(f"points have dimension {points.shape[1]}, direction has {self.components.shape[0]}")
        return points @ self.components
