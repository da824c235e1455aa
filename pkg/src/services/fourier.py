"""
Frequency-domain machinery.

All transforms use the unitary convention ŷ(k) = (1/√N) Σ_i y_i e^{-i k x_i}.
Uniform data on x_i = 2πi/N uses the integer grid {-⌊N/2⌋, ..., ⌈N/2⌉-1};
multi-dimensional or irregular data is projected onto its first principal
direction and transformed on a real k grid.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..models.circuit import AnsatzSpec
from ..models.dataset import as_feature_matrix
from ..models.errors import DegenerateDataError, ShapeError, SpectralDivisionError
from ..models.spectrum import ProjectionDirection, SpectrumSeries
from .ansatz import evaluate_batch, spectrum

logger = logging.getLogger(__name__)

POWER_ITERATIONS = 1000
POWER_TOL = 1e-12
DIVISION_TOL = 1e-12
PROJECTED_GRID_SIZE = 128


def uniform_grid(n: int) -> np.ndarray:
    """x_i = 2πi/N on [0, 2π)."""
    return 2 * np.pi * np.arange(n) / n


def integer_k_grid(n: int) -> np.ndarray:
    return np.fft.fftshift(np.fft.fftfreq(n, d=1.0 / n))


def dft_matrix(n: int) -> np.ndarray:
    """F[k, i] = e^{-i k x_i} / √N with rows in increasing-k order; unitary."""
    k = integer_k_grid(n)
    return np.exp(-1j * np.outer(k, uniform_grid(n))) / math.sqrt(n)


def dft_uniform(values) -> SpectrumSeries:
    y = np.asarray(values).reshape(-1)
    n = y.shape[0]
    if n == 0:
        raise ShapeError("cannot transform an empty sequence")
    amps = np.fft.fftshift(np.fft.fft(y)) / math.sqrt(n)
    return SpectrumSeries(integer_k_grid(n), amps)


def nudft_projected(points, values, p: ProjectionDirection, k_grid) -> SpectrumSeries:
    """Direct sum ŷ_p(k) = (1/√N) Σ_i y_i e^{-i (p·x_i) k}."""
    x = as_feature_matrix(points, feature_dim=p.components.shape[0])
    y = np.asarray(values).reshape(-1)
    k = np.asarray(k_grid, dtype=np.float64).reshape(-1)
    if x.shape[0] != y.shape[0]:
        raise ShapeError(f"{x.shape[0]} points but {y.shape[0]} values")
    if k.size == 0:
        raise ShapeError("k_grid must not be empty")
    return SpectrumSeries(k, projected_matrix(p.project(x), k) @ y)


def projected_matrix(projections: np.ndarray, k_grid: np.ndarray) -> np.ndarray:
    n = projections.shape[0]
    return np.exp(-1j * np.outer(k_grid, projections)) / math.sqrt(max(n, 1))


def principal_direction(points) -> ProjectionDirection:
    """
    Top eigenvector of the sample covariance by power iteration.
    Sign fixed so the largest-magnitude component is positive.
    """
    x = as_feature_matrix(points)
    n, d = x.shape
    if n < 2:
        raise DegenerateDataError("principal direction needs at least two points")
    centred = x - x.mean(axis=0)
    cov = centred.T @ centred / (n - 1)
    if np.trace(cov) <= 1e-300:
        raise DegenerateDataError("points have zero covariance")

    v = 1.0 + np.arange(d) * 1e-3
    v /= np.linalg.norm(v)
    for _ in range(POWER_ITERATIONS):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            raise DegenerateDataError("power iteration collapsed to zero")
        w /= norm
        if np.dot(w, v) < 0:
            w = -w
        change = np.linalg.norm(w - v)
        v = w
        if change < POWER_TOL:
            break

    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return ProjectionDirection(v / np.linalg.norm(v))


def projected_k_grid(projections, size: int = PROJECTED_GRID_SIZE) -> np.ndarray:
    """`size` uniform frequencies on [0, π / median nearest-neighbour spacing]."""
    s = np.sort(np.asarray(projections, dtype=np.float64).reshape(-1))
    if s.size < 2:
        raise DegenerateDataError("need at least two projected points for a k grid")
    gaps = np.diff(s)
    left = np.concatenate(([np.inf], gaps))
    right = np.concatenate((gaps, [np.inf]))
    nearest = np.minimum(left, right)
    positive = nearest[nearest > 0]
    if positive.size == 0:
        raise DegenerateDataError("all projected points coincide")
    k_max = math.pi / float(np.median(positive))
    return np.linspace(0.0, k_max, size)


def relative_error(f_hat: SpectrumSeries, y_hat: SpectrumSeries, k: float) -> float:
    """Δ_F(k) = |f̂(k) - ŷ(k)| / |ŷ(k)|."""
    y = y_hat.at(k)
    if abs(y) <= DIVISION_TOL:
        raise SpectralDivisionError(f"|ŷ({k})| = {abs(y):.3e} is too small for a relative error")
    return abs(f_hat.at(k) - y) / abs(y)


def _peak_indices(amps: np.ndarray, tol: float) -> List[int]:
    # A run of equal values strictly above both outer neighbours counts once, at its first index
    peaks = []
    n = amps.shape[0]
    i = 0
    while i < n:
        j = i
        while j + 1 < n and abs(amps[j + 1] - amps[i]) <= tol:
            j += 1
        left_ok = i == 0 or amps[i] > amps[i - 1] + tol
        right_ok = j == n - 1 or amps[j] > amps[j + 1] + tol
        if left_ok and right_ok:
            peaks.append(i)
        i = j + 1
    return peaks


def top_peaks(series: SpectrumSeries, m: int) -> List[float]:
    """
    Strict local maxima of |amplitude| on the k >= 0 half, largest first,
    ties broken by smaller k. A flat-topped peak is reported once at its
    smallest k. Returns fewer than m when fewer peaks exist.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    half = series.half()
    amps = half.amplitude
    if amps.shape[0] == 0:
        return []
    tol = 1e-12 * max(1.0, float(amps.max()))
    peaks = _peak_indices(amps, tol)

    scale = max(float(amps.max()), 1e-300)
    peaks.sort(key=lambda i: (-round(amps[i] / scale, 9), half.k_values[i]))
    return [float(half.k_values[i]) for i in peaks[:m]]


def descending_peaks(series: SpectrumSeries, m: int) -> List[float]:
    """
    The highest peak followed by the next peaks above it in k whose heights
    keep decreasing, in increasing k. Sidelobes of a step-like label profile
    are picked up this way while isolated high-k noise spikes are not.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    half = series.half()
    amps = half.amplitude
    if amps.shape[0] == 0:
        return []
    tol = 1e-12 * max(1.0, float(amps.max()))
    peaks = _peak_indices(amps, tol)
    if not peaks:
        return []

    start = max(peaks, key=lambda i: (amps[i], -i))
    chosen = [start]
    for i in peaks:
        if len(chosen) == m:
            break
        if i > chosen[-1] and amps[i] < amps[chosen[-1]] - tol:
            chosen.append(i)
    return [float(half.k_values[i]) for i in chosen]


def pqc_fourier_coefficients(spec: AnsatzSpec, params, num_points: Optional[int] = None) -> SpectrumSeries:
    """
    C(ω, θ) with f(x, θ) = Σ_ω C(ω, θ) e^{iωx}, from 2E+1 uniform samples
    (or `num_points` when oversampling). Frequencies run -M//2 ... (M-1)//2.
    """
    e = spectrum(spec).max_frequency
    n = num_points if num_points is not None else 2 * e + 1
    if n < 1:
        raise ShapeError("num_points must be >= 1")
    f = evaluate_batch(spec, params, uniform_grid(n).reshape(-1, 1))
    coeffs = np.fft.fftshift(np.fft.fft(f)) / n
    return SpectrumSeries(integer_k_grid(n), coeffs)


def reconstruct(coefficients: SpectrumSeries, x) -> np.ndarray:
    """Real part of Σ_ω C(ω) e^{iωx} at each x."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    return (np.exp(1j * np.outer(x, coefficients.k_values)) @ coefficients.amplitudes).real


def parseval_gap(x_residuals, k_residuals: SpectrumSeries) -> float:
    eps = np.asarray(x_residuals).reshape(-1)
    return abs(float(np.sum(np.abs(eps) ** 2)) - float(np.sum(np.abs(k_residuals.amplitudes) ** 2)))


def is_uniform_grid(inputs) -> bool:
    x = as_feature_matrix(inputs)
    return x.shape[1] == 1 and x.shape[0] > 0 and np.allclose(x[:, 0], uniform_grid(x.shape[0]), rtol=0, atol=1e-12)


@dataclass(frozen=True)
class SpectralProbe:
    """
    Linear map from values on a fixed set of inputs to a SpectrumSeries.

    Uniform 1-D grids use the unitary DFT; anything else is projected on the
    principal direction and sampled on the projected k grid. `matrix` pushes
    pointwise gradients into k-space: ∂f̂/∂θ = matrix @ J.
    """
    k_values: np.ndarray
    matrix: np.ndarray
    uniform: bool
    direction: Optional[ProjectionDirection] = None

    @classmethod
    def for_inputs(cls, inputs) -> "SpectralProbe":
        x = as_feature_matrix(inputs)
        if is_uniform_grid(x):
            n = x.shape[0]
            return cls(integer_k_grid(n), dft_matrix(n), uniform=True)
        direction = ProjectionDirection(np.ones(1)) if x.shape[1] == 1 else principal_direction(x)
        projections = direction.project(x)
        k = projected_k_grid(projections)
        logger.debug(f"Projected probe: {x.shape[0]} points, k_max={k[-1]:.4g}")
        return cls(k, projected_matrix(projections, k), uniform=False, direction=direction)

    def transform(self, values) -> SpectrumSeries:
        v = np.asarray(values).reshape(-1)
        if v.shape[0] != self.matrix.shape[1]:
            raise ShapeError(f"probe expects {self.matrix.shape[1]} values, got {v.shape[0]}")
        return SpectrumSeries(self.k_values, self.matrix @ v)

    def indices(self, ks: Sequence[float]) -> np.ndarray:
        grid = SpectrumSeries(self.k_values, np.zeros_like(self.k_values))
        return np.array([grid.index_of(k) for k in ks], dtype=np.int64)
