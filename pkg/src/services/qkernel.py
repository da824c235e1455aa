import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from ..models.circuit import AnsatzSpec, ParamVector
from ..models.dataset import Dataset
from ..models.errors import ConfigurationError, ConvergenceError, NumericError, ShapeError
from ..models.kernel import FidelityKernel, KernelMatrix, SvmModel
from ..utils.parallel import chunk_ranges, map_chunks
from ..utils.validators import ensure_pm1_labels, ensure_psd
from .ansatz import Method, _rows_per_chunk, _shift_table, _theta, _inputs, prepare_states, run_circuit, state_vjp

logger = logging.getLogger(__name__)

SMO_TOL = 1e-5
# K_ii + K_jj - 2K_ij is floored here so duplicated rows still take a bounded step
SMO_MIN_CURVATURE = 1e-12


def _overlaps(states_a: np.ndarray, states_b: np.ndarray) -> np.ndarray:
    """χ_ij = <a_i|b_j>."""
    return states_a.conj() @ states_b.T


def kernel_matrix(spec: AnsatzSpec, params, inputs) -> FidelityKernel:
    """K_ij = |<psi(x_i)|psi(x_j)>|² from exact statevectors."""
    states = prepare_states(spec, params, inputs)
    k = np.abs(_overlaps(states, states)) ** 2
    return FidelityKernel(0.5 * (k + k.T))


def cross_kernel(spec: AnsatzSpec, params, inputs_a, inputs_b) -> np.ndarray:
    """Rows for held-out points: K[a, b] = |<psi(a)|psi(b)>|²."""
    return np.abs(_overlaps(prepare_states(spec, params, inputs_a), prepare_states(spec, params, inputs_b))) ** 2


def alignment(kernel: KernelMatrix, labels) -> float:
    """A = Σ_ij K_ij y_i y_j / (N ‖K‖_F)."""
    y = ensure_pm1_labels(labels)
    if y.shape[0] != kernel.size:
        raise ShapeError(f"{y.shape[0]} labels for a kernel of size {kernel.size}")
    norm = kernel.frobenius_norm()
    if norm == 0:
        return 0.0
    return float(y @ kernel.values @ y) / (y.shape[0] * norm)


def _alignment_weights(k: np.ndarray, y: np.ndarray):
    """A and W = ∂A/∂K for A = yᵀKy / (N‖K‖_F)."""
    n = y.shape[0]
    norm = float(np.linalg.norm(k))
    s = float(y @ k @ y)
    a = s / (n * norm)
    w = np.outer(y, y) / (n * norm) - s * k / (n * norm ** 3)
    return a, w


def _shift_gradient(spec: AnsatzSpec, theta: np.ndarray, x: np.ndarray,
                    states: np.ndarray, w: np.ndarray) -> np.ndarray:
    """
    ∂A/∂θ_l = Σ_ij W_ij (G_l + G_lᵀ)_ij with
    G_l = ½ (|S̄ S_{l+}ᵀ|² - |S̄ S_{l-}ᵀ|²), the shift applied to the ket side only.
    """
    n_points = x.shape[0]
    table = _shift_table(theta)
    rows = table.shape[0]

    def _chunk(start: int, stop: int) -> np.ndarray:
        # work item j -> (shift row j // N, point j % N)
        j = np.arange(start, stop)
        return run_circuit(spec, table[j // n_points], x[j % n_points])

    per_chunk = max(n_points, (_rows_per_chunk(spec) // n_points) * n_points)
    shifted = np.concatenate(map_chunks(_chunk, chunk_ranges(rows * n_points, per_chunk)))
    shifted = shifted.reshape(theta.shape[0], 2, n_points, spec.dimension)

    grad = np.empty(theta.shape[0])
    w_sym = w + w.T
    for l in range(theta.shape[0]):
        plus = np.abs(_overlaps(states, shifted[l, 0])) ** 2
        minus = np.abs(_overlaps(states, shifted[l, 1])) ** 2
        grad[l] = 0.5 * float(np.sum(w_sym * (plus - minus)))
    return grad


def _adjoint_gradient(spec: AnsatzSpec, theta: np.ndarray, x: np.ndarray,
                      states: np.ndarray, w: np.ndarray) -> np.ndarray:
    """∂A/∂θ = 2 Σ_j 2Re<φ_j|∂psi_j> with φ_j = Σ_i W_ij χ_ij psi_i."""
    chi = _overlaps(states, states)
    bras = (w * chi).T @ states
    return 2.0 * state_vjp(spec, theta, x, bras).sum(axis=0)


def alignment_gradient(spec: AnsatzSpec, params, data: Dataset, method: Method = "parameter_shift"):
    """Returns (A(θ), ∂A/∂θ) for the fidelity kernel on the training inputs."""
    theta = _theta(spec, params)
    x = _inputs(spec, data.inputs)
    y = ensure_pm1_labels(data.labels)
    states = prepare_states(spec, theta, x)
    k = np.abs(_overlaps(states, states)) ** 2
    k = 0.5 * (k + k.T)
    a, w = _alignment_weights(k, y)
    if method == "parameter_shift":
        grad = _shift_gradient(spec, theta, x, states, w)
    elif method == "adjoint":
        grad = _adjoint_gradient(spec, theta, x, states, w)
    else:
        raise ConfigurationError(f"unknown differentiation method '{method}'")
    return a, grad


@dataclass
class AlignmentResult:
    """Best iterate of an alignment ascent; `params` is what callers train the SVM with."""
    params: ParamVector
    initial_alignment: float
    best_alignment: float
    best_step: int
    history: List[float] = field(default_factory=list)
    aborted: bool = False


def optimize_alignment(
    spec: AnsatzSpec,
    params0,
    data: Dataset,
    steps: int = 50,
    eta: float = 0.1,
    method: Method = "parameter_shift",
    callback: Optional[Callable[[int, ParamVector, float], None]] = None,
) -> AlignmentResult:
    """
    Gradient ascent on the kernel-target alignment, best iterate returned.

    A numeric failure stops the ascent early and sets `aborted`; the best
    parameters seen so far are still returned.
    """
    if steps < 0:
        raise ConfigurationError("steps must be >= 0")
    theta = _theta(spec, params0).copy()
    a, grad = alignment_gradient(spec, theta, data, method)
    result = AlignmentResult(ParamVector(theta), a, a, 0, history=[a])
    logger.info(f"Alignment ascent: A0={a:.6f}, {steps} steps, eta={eta}, method={method}")
    if callback is not None:
        callback(0, result.params, a)

    for step in range(1, steps + 1):
        try:
            theta = theta + eta * grad
            if not np.all(np.isfinite(theta)):
                raise NumericError("non-finite parameters")
            a, grad = alignment_gradient(spec, theta, data, method)
            if not (math.isfinite(a) and np.all(np.isfinite(grad))):
                raise NumericError("non-finite alignment or gradient")
        except NumericError as e:
            logger.warning(f"Alignment ascent aborted at step {step}: {e}")
            result.aborted = True
            break

        result.history.append(a)
        logger.debug(f"step {step}: A={a:.6f}")
        current = ParamVector(theta)
        if a > result.best_alignment:
            result.best_alignment = a
            result.best_step = step
            result.params = current
        if callback is not None:
            callback(step, current, a)

    logger.info(f"Alignment ascent done: best A={result.best_alignment:.6f} at step {result.best_step}")
    return result


# ---------------------------------------------------------------------------
# SVM

def _dual_objective(alpha: np.ndarray, grad: np.ndarray) -> float:
    # with G = Qα - e: Σα - ½αᵀQα = ½ Σα - ½ αᵀG
    return 0.5 * float(alpha.sum()) - 0.5 * float(alpha @ grad)


def svm_train(kernel: KernelMatrix, labels, C: float = 1000.0, tol: float = SMO_TOL,
              max_passes: Optional[int] = None) -> SvmModel:
    """
    Soft-margin dual by SMO on the maximal violating pair.

    Stops when the KKT gap m - M falls below `tol`; gives up after
    max_passes passes of N pair updates (default 10·N).
    """
    y = ensure_pm1_labels(labels)
    k = kernel.values
    n = y.shape[0]
    if kernel.size != n:
        raise ShapeError(f"{n} labels for a kernel of size {kernel.size}")
    if C <= 0:
        raise ConfigurationError("C must be > 0")
    ensure_psd("SVM kernel", k)

    passes = 10 * n if max_passes is None else max_passes
    max_updates = passes * n
    alpha = np.zeros(n)
    grad = -np.ones(n)
    history = [0.0]

    updates = 0
    gap = np.inf
    m_val = big_m = 0.0
    while True:
        score = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            gap = 0.0
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        j = int(np.flatnonzero(low)[np.argmin(score[low])])
        m_val, big_m = score[i], score[j]
        gap = m_val - big_m
        if gap <= tol:
            break
        if updates >= max_updates:
            raise ConvergenceError(
                f"SMO did not reach KKT gap {tol} within {passes} passes",
                diagnostics={"gap": float(gap), "updates": updates, "n": n},
            )

        curvature = max(k[i, i] + k[j, j] - 2.0 * k[i, j], SMO_MIN_CURVATURE)
        step = gap / curvature
        step = min(step, C - alpha[i] if y[i] > 0 else alpha[i])
        step = min(step, alpha[j] if y[j] > 0 else C - alpha[j])

        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        alpha[i] = min(max(alpha[i], 0.0), C)
        alpha[j] = min(max(alpha[j], 0.0), C)
        grad += step * y * (k[:, i] - k[:, j])
        history.append(_dual_objective(alpha, grad))
        updates += 1

    free = (alpha > 1e-8 * C) & (alpha < C * (1 - 1e-8))
    if free.any():
        bias = float(np.mean(-y[free] * grad[free]))
    else:
        bias = 0.5 * float(m_val + big_m)

    support = np.flatnonzero(alpha > 0)
    logger.info(f"SMO converged: {updates} updates, gap={gap:.2e}, {support.size} support vectors")
    return SvmModel(
        alphas=alpha.tolist(),
        bias=bias,
        C=C,
        support_indices=support.tolist(),
        labels=[int(v) for v in y],
        iterations=updates,
        dual_objective_history=history,
    )


def svm_decision(model: SvmModel, kernel_rows) -> np.ndarray:
    """Σ_i α_i y_i K(x_i, x) + b for each row."""
    rows = np.atleast_2d(np.asarray(kernel_rows, dtype=np.float64))
    if rows.shape[1] != len(model.alphas):
        raise ShapeError(f"kernel rows have length {rows.shape[1]}, model was trained on {len(model.alphas)} points")
    return rows @ model.coefficient_vector() + model.bias


def svm_predict(model: SvmModel, kernel_row):
    """sign of the decision value with sign(0) = +1; a 2-D input returns one label per row."""
    row = np.asarray(kernel_row, dtype=np.float64)
    labels = np.where(svm_decision(model, row) >= 0, 1, -1)
    return int(labels[0]) if row.ndim == 1 else labels
