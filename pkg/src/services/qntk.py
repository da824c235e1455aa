"""
Quantum neural tangent kernel analytics.

Under gradient descent with a constant kernel K the residuals obey
ε(t+1) = (I - ηK) ε(t). With F the unitary DFT, the k-space kernel
K̂ = conj(F) K Fᵀ carries e^{+ik'x'} e^{-ikx} while ε̂ = F ε carries e^{-ikx},
so the residual spectrum evolves under conj(K̂):
    ε̂(t) = exp(-η conj(K̂) t) ε̂(0)          (continuous)
    ε̂(t) = (I - η conj(K̂))^t ε̂(0)          (discrete)
Magnitudes are the same under either sign convention.
"""
import logging
from typing import Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..models.circuit import AnsatzSpec
from ..models.errors import ConvergenceError, ShapeError, UnsupportedError
from ..models.kernel import ComplexKernel, KernelMatrix
from ..models.recorder import TrainLog
from ..models.spectrum import SpectrumSeries, k_label
from .ansatz import Method, jacobian, prepare_states
from .fourier import dft_matrix, dft_uniform, integer_k_grid, is_uniform_grid

logger = logging.getLogger(__name__)

JACOBI_MAX_SWEEPS = 100
JACOBI_TOL = 1e-12
# |ε̂| below this is treated as exactly zero when forming ratios
RATIO_ZERO_TOL = 1e-12

Mode = Literal["continuous", "discrete"]


def _symmetric(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def empirical_qntk(spec: AnsatzSpec, params, inputs, method: Method = "parameter_shift") -> KernelMatrix:
    """K(x_i', x_i) = ∇f(x_i') · ∇f(x_i)."""
    jac = jacobian(spec, params, inputs, method)
    return KernelMatrix(_symmetric(jac @ jac.T))


def frozen_qntk(spec: AnsatzSpec, params_ref, inputs) -> KernelMatrix:
    """
    Constant-kernel approximation
        K̄(x', x) = 2L (D|χ|² - 1) / (D² - 1)² · (D Tr M² - (Tr M)²) · s²
    with χ the overlap of the states prepared at `params_ref`, L the trainable
    parameter count, D = 2^n and s the output scale.
    """
    states = prepare_states(spec, params_ref, inputs)
    chi2 = np.abs(states.conj() @ states.T) ** 2
    d = float(spec.dimension)
    n = spec.num_qubits
    trace_term = d * spec.observable.trace_m2(n) - spec.observable.trace_m(n) ** 2
    coeff = 2.0 * spec.parameter_count * trace_term / (d * d - 1.0) ** 2
    return KernelMatrix(_symmetric(coeff * (d * chi2 - 1.0) * spec.output_scale ** 2))


def kernel_drift(k0: KernelMatrix, k1: KernelMatrix) -> float:
    """‖K1 - K0‖_F / ‖K0‖_F."""
    if k0.size != k1.size:
        raise ShapeError(f"cannot compare kernels of size {k0.size} and {k1.size}")
    base = k0.frobenius_norm()
    return float(np.linalg.norm(k1.values - k0.values) / base) if base > 0 else float("inf")


def kernel_to_kspace(kernel: KernelMatrix, grid_size: Optional[int] = None, inputs=None) -> ComplexKernel:
    """K̂(k', k) = (1/N) Σ_{i'i} K(x_i', x_i) e^{ik'x_i'} e^{-ikx_i} on the uniform grid."""
    n = kernel.size if grid_size is None else grid_size
    if n != kernel.size:
        raise ShapeError(f"grid size {n} does not match a {kernel.size}x{kernel.size} kernel")
    if inputs is not None and not is_uniform_grid(inputs):
        raise UnsupportedError("k-space kernels need inputs on the uniform grid 2πi/N")
    f = dft_matrix(n)
    return ComplexKernel(integer_k_grid(n), f.conj() @ kernel.values @ f.T)


def kspace_to_kernel(kernel_k: ComplexKernel) -> np.ndarray:
    """Inverse of kernel_to_kspace: Fᵀ K̂ conj(F). Real for images of real symmetric kernels."""
    f = dft_matrix(kernel_k.size)
    return f.T @ kernel_k.values @ f.conj()


# ---------------------------------------------------------------------------
# eigensolver

def jacobi_eigh(matrix) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cyclic Jacobi for a real symmetric matrix.

    Returns ascending eigenvalues and the orthogonal matrix of eigenvectors
    (columns). Stops once the off-diagonal Frobenius norm falls below
    JACOBI_TOL * max(1, ‖A‖_F).
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"jacobi_eigh needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    v = np.eye(n)
    threshold = JACOBI_TOL * max(1.0, float(np.linalg.norm(a)))

    def _off_norm() -> float:
        return float(np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0)))

    off = _off_norm()
    sweeps = 0
    while off >= threshold:
        if sweeps >= JACOBI_MAX_SWEEPS:
            raise ConvergenceError(
                f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps",
                diagnostics={"sweeps": sweeps, "off_diagonal_norm": off, "threshold": threshold},
            )
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
        sweeps += 1
        off = _off_norm()

    logger.debug(f"Jacobi converged in {sweeps} sweeps (n={n})")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def _embed(h: np.ndarray) -> np.ndarray:
    """A + iB -> [[A, -B], [B, A]]; Hermitian maps to real symmetric."""
    a, b = h.real, h.imag
    return np.block([[a, -b], [b, a]])


class HermitianPropagator:
    """Eigendecomposition of a Hermitian H, reused to apply g(H) for many g."""

    def __init__(self, h: np.ndarray):
        h = np.asarray(h, dtype=np.complex128)
        self.size = h.shape[0]
        self.eigenvalues, self.eigenvectors = jacobi_eigh(_embed(h))

    def apply(self, fn: Callable[[np.ndarray], np.ndarray], vector: np.ndarray) -> np.ndarray:
        """g(H) v via the real embedding: [Re v; Im v] -> [Re g(H)v; Im g(H)v]."""
        n = self.size
        stacked = np.concatenate([vector.real, vector.imag])
        coeffs = self.eigenvectors.T @ stacked
        out = self.eigenvectors @ (fn(self.eigenvalues) * coeffs)
        return out[:n] + 1j * out[n:]


def hermitian_function(h, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Dense g(H) for Hermitian H."""
    h = np.asarray(h, dtype=np.complex128)
    w, q = jacobi_eigh(_embed(h))
    g = (q * fn(w)) @ q.T
    n = h.shape[0]
    return g[:n, :n] + 1j * g[n:, :n]


# ---------------------------------------------------------------------------
# residual dynamics

def _propagator_fn(eta: float, t: int, mode: Mode) -> Callable[[np.ndarray], np.ndarray]:
    if mode == "continuous":
        return lambda w: np.exp(-eta * t * w)
    if mode == "discrete":
        return lambda w: (1.0 - eta * w) ** t
    raise ValueError(f"unknown mode '{mode}'")


def predict_trajectory(kernel_k: ComplexKernel, eps0: SpectrumSeries, eta: float,
                       times: Sequence[int], mode: Mode = "continuous") -> List[SpectrumSeries]:
    """Predicted residual spectra at each t in `times`, sharing one eigendecomposition."""
    if kernel_k.size != len(eps0):
        raise ShapeError(f"kernel size {kernel_k.size} does not match {len(eps0)} residual frequencies")
    if not np.allclose(kernel_k.k_values, eps0.k_values):
        raise ShapeError("kernel and residual spectra use different frequency grids")
    propagator = HermitianPropagator(kernel_k.values.conj())
    return [
        SpectrumSeries(eps0.k_values, propagator.apply(_propagator_fn(eta, int(t), mode), eps0.amplitudes))
        for t in times
    ]


def predict_residuals(kernel_k: ComplexKernel, eps0: SpectrumSeries, eta: float, t: int,
                      mode: Mode = "continuous") -> SpectrumSeries:
    return predict_trajectory(kernel_k, eps0, eta, [t], mode)[0]


def compare_dynamics(log: TrainLog, predicted: Sequence[SpectrumSeries], tracked_ks) -> pd.DataFrame:
    """
    Per recorded t: actual |ε̂(k, t)| from the log's residual snapshots,
    predicted |ε̂(k, t)| and predicted / actual. Both ~0 gives ratio 1.
    """
    if len(predicted) != len(log):
        raise ShapeError(f"{len(predicted)} predictions for {len(log)} recorded iterations")
    frame = pd.DataFrame({"t": log.iterations})
    actual_spectra = [dft_uniform(row) for row in log.residuals]
    for k in tracked_ks:
        actual = np.array([abs(s.at(k)) for s in actual_spectra])
        pred = np.array([abs(s.at(k)) for s in predicted])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(actual > RATIO_ZERO_TOL, pred / actual, np.inf)
        ratio = np.where((actual <= RATIO_ZERO_TOL) & (pred <= RATIO_ZERO_TOL), 1.0, ratio)
        label = k_label(k)
        frame[f"actual_abs_k{label}"] = actual
        frame[f"predicted_abs_k{label}"] = pred
        frame[f"ratio_k{label}"] = ratio
    return frame
