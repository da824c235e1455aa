import logging
import math
from typing import Optional, Tuple

import numpy as np

from ..models.circuit import AnsatzSpec, ParamVector
from ..models.config import TrainConfig
from ..models.dataset import Dataset
from ..models.errors import ConfigurationError, NumericError, TrainingAborted, UnsupportedError
from ..models.recorder import TrainLog
from ..models.spectrum import SpectrumSeries
from .ansatz import Method, evaluate_batch, value_and_jacobian, with_output_scale
from .fourier import DIVISION_TOL, SpectralProbe, descending_peaks, dft_uniform, top_peaks

logger = logging.getLogger(__name__)

# Δ_F below this counts as "learned"
LEARNED_THRESHOLD = 0.3


def residuals(spec: AnsatzSpec, params, data: Dataset) -> np.ndarray:
    """ε(x_i, θ) = f(x_i, θ) - y_i."""
    return evaluate_batch(spec, params, data.inputs) - data.labels


def mse_loss(spec: AnsatzSpec, params, data: Dataset) -> float:
    """L = ½ Σ ε_i²."""
    eps = residuals(spec, params, data)
    return 0.5 * float(eps @ eps)


def _loss(eps: np.ndarray) -> float:
    return 0.5 * float(eps @ eps)


def _descend(theta: np.ndarray, jac: np.ndarray, eps: np.ndarray, eta: float) -> np.ndarray:
    grad = jac.T @ eps
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite loss gradient")
    return theta - eta * grad


def gd_step(spec: AnsatzSpec, params, data: Dataset, eta: float,
            method: Method = "parameter_shift") -> ParamVector:
    """θ - η Σ_i ε(x_i) ∇f(x_i)."""
    if eta < 0 or not math.isfinite(eta):
        raise ConfigurationError(f"learning rate must be a finite non-negative number, got {eta}")
    theta = params.values if isinstance(params, ParamVector) else np.asarray(params, dtype=np.float64)
    values, jac = value_and_jacobian(spec, theta, data.inputs, method)
    return ParamVector(_descend(theta, jac, values - data.labels, eta))


def _uniform_probe(data: Dataset) -> SpectralProbe:
    probe = SpectralProbe.for_inputs(data.inputs)
    if not probe.uniform:
        raise UnsupportedError("per-frequency gradients need inputs on the uniform grid 2πi/N")
    return probe


def freq_gradients(spec: AnsatzSpec, params, data: Dataset,
                   method: Method = "parameter_shift") -> Tuple[np.ndarray, np.ndarray]:
    """
    Signed per-frequency gradients Re[ε̂(k)* ∂f̂(k)/∂θ] on the uniform grid.

    Returns (k_values, G) with G of shape (K, P); summing G over k gives ∂L/∂θ.
    """
    probe = _uniform_probe(data)
    values, jac = value_and_jacobian(spec, params, data.inputs, method)
    eps_hat = probe.matrix @ (values - data.labels)
    return probe.k_values, np.real(eps_hat.conj()[:, None] * (probe.matrix @ jac))


def freq_gradient_norm(spec: AnsatzSpec, params, data: Dataset, k: float,
                       method: Method = "parameter_shift") -> float:
    """‖Re[ε̂(k)* ∂f̂(k)/∂θ]‖ over the parameter index; IndexError when k is off-grid."""
    probe = _uniform_probe(data)
    idx = probe.indices([k])[0]
    values, jac = value_and_jacobian(spec, params, data.inputs, method)
    eps_hat_k = probe.matrix[idx] @ (values - data.labels)
    dfhat_k = probe.matrix[idx] @ jac
    return float(np.linalg.norm(np.real(np.conj(eps_hat_k) * dfhat_k)))


def frequency_losses(x_residuals) -> SpectrumSeries:
    """L̂(k) = ½|ε̂(k)|² on the uniform grid; Σ_k L̂(k) equals the x-space loss."""
    eps_hat = dft_uniform(x_residuals)
    return SpectrumSeries(eps_hat.k_values, 0.5 * np.abs(eps_hat.amplitudes) ** 2)


def first_crossing(log: TrainLog, threshold: float = LEARNED_THRESHOLD) -> Optional[float]:
    """Tracked k whose Δ_F drops below `threshold` first; ties at one record go to smaller Δ_F, then smaller k."""
    ks = log.tracked_ks
    for row in log.delta_f:
        below = np.flatnonzero(row < threshold)
        if below.size:
            best = min(below, key=lambda j: (row[j], ks[j]))
            return float(ks[best])
    return None


def train(spec: AnsatzSpec, init_params, data: Dataset, config: TrainConfig) -> TrainLog:
    """
    Full-batch gradient descent with frequency diagnostics.

    Records at t = 0, r, 2r, ... < iterations, each for the parameters before
    that step's update. Tracked frequencies are peaks of the label
    spectrum chosen per `config.peak_selection` (uniform DFT on the curve
    grid, projected transform otherwise).
    """
    if config.output_scale is not None:
        spec = with_output_scale(spec, config.output_scale)

    probe = SpectralProbe.for_inputs(data.inputs)
    y_hat = probe.transform(data.labels)
    select = descending_peaks if config.peak_selection == "descending" else top_peaks
    tracked = [k for k in select(y_hat, config.tracked_peaks) if abs(y_hat.at(k)) > DIVISION_TOL]
    track_idx = probe.indices(tracked)
    y_hat_tracked = y_hat.amplitudes[track_idx]
    rows = probe.matrix[track_idx]

    n_records = math.ceil(config.iterations / config.record_every)
    log = TrainLog(n_records, tracked, len(data), config.record_every, has_test=data.has_test)

    logger.info(
        f"Training {spec.name} ({spec.parameter_count} params) on {data.name}: "
        f"{config.iterations} iterations, eta={config.learning_rate}, tracked k={tracked}"
    )
    progress_every = max(config.record_every, config.iterations // 10)

    theta = init_params.values if isinstance(init_params, ParamVector) else np.asarray(init_params, dtype=np.float64)
    t = 0
    try:
        for t in range(config.iterations):
            values, jac = value_and_jacobian(spec, theta, data.inputs, config.differentiation)
            eps = values - data.labels
            if not np.all(np.isfinite(eps)):
                raise NumericError(f"non-finite residuals at iteration {t}")
            loss = _loss(eps)

            if t % config.record_every == 0:
                eps_hat = rows @ eps
                delta_f = np.abs(eps_hat) / np.abs(y_hat_tracked)
                grad_norms = np.linalg.norm(np.real(eps_hat.conj()[:, None] * (rows @ jac)), axis=1)
                test_loss = None
                if data.has_test:
                    test_loss = _loss(evaluate_batch(spec, theta, data.test_inputs) - data.test_labels)
                log.snapshot(t, loss, eps, delta_f, grad_norms, test_loss)
                logger.debug(f"iter {t}: loss={loss:.6g}, delta_f={np.array2string(delta_f, precision=4)}")

            if t % progress_every == 0:
                logger.info(f"iter {t}: loss={loss:.6g}")

            theta = _descend(theta, jac, eps, config.learning_rate)

        final_loss = mse_loss(spec, theta, data)
    except NumericError as e:
        logger.error(f"Training aborted at iteration {t}: {e}")
        last = ParamVector(theta) if np.all(np.isfinite(theta)) else None
        log.mark_incomplete(str(e), last)
        raise TrainingAborted(str(e), log) from e

    log.finalize(ParamVector(theta), final_loss)
    logger.info(f"Training complete: loss {log.losses[0]:.6g} -> {final_loss:.6g}")
    return log
