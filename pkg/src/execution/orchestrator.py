import logging
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from .. import __version__
from ..config.log_handler import RunLogHandler, current_run_id
from ..models.circuit import AnsatzSpec, ParamVector
from ..models.config import RunConfig
from ..models.dataset import Dataset
from ..models.errors import ConvergenceError, NumericError, OutputValidationException, TrainingAborted
from ..models.manifest import RunManifest
from ..models.spectrum import k_label
from ..services import ansatz, datasets, fourier, qkernel, qntk, training
from ..utils.export import describe_files, write_json, write_outputs
from ..utils.metrics import accuracy, log_linear_fit, relative_l2_error
from .output_validator import TRACKED_FLAG, OutputValidator

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


@dataclass
class PipelineResult:
    frames: Dict[str, pd.DataFrame] = field(default_factory=dict)
    documents: Dict[str, Any] = field(default_factory=dict)
    metrics: Dict[str, Any] = field(default_factory=dict)


class ExperimentOrchestrator:
    """
    One run of one experiment.

    Flow:
        RunConfig
        → resolve ansatz + dataset
        → experiment pipeline (training / kernels / SVM)
        → OutputValidator (NaN checks)
        → CSV + JSON writers
        → RunManifest (written last, status complete | incomplete)
    """

    def __init__(self, config: RunConfig, out_dir: Path, log_handler: Optional[RunLogHandler] = None):
        self.config = config
        self.out_dir = Path(out_dir)
        self.log_handler = log_handler
        self.output_validator = OutputValidator()
        self._pipelines: Dict[str, Callable[[], PipelineResult]] = {
            "fit-curve": self._fit_curve,
            "spectrum": self._spectrum,
            "qntk-compare": self._qntk_compare,
            "iris": self._iris,
            "dlp": self._dlp,
        }

    def run(self) -> RunManifest:
        """Run the pipeline and write its outputs. Numeric failures still write a manifest, then re-raise."""
        run_id = uuid.uuid4().hex
        token = current_run_id.set(run_id)
        started_at = datetime.now(timezone.utc)
        t0 = time.perf_counter()
        self.out_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"Run {run_id}: experiment={self.config.experiment}, out={self.out_dir}")
        try:
            try:
                result = self._pipelines[self.config.experiment]()
                self.output_validator.validate(result.frames)
            except (NumericError, OutputValidationException) as e:
                partial = self._partial_result(e)
                written = write_outputs(self.out_dir, partial.frames, partial.documents)
                self._write_manifest(run_id, started_at, t0, written, partial.metrics, "incomplete", str(e))
                raise

            written = write_outputs(self.out_dir, result.frames, result.documents)
            manifest = self._write_manifest(run_id, started_at, t0, written, result.metrics, "complete", None)
            logger.info(f"Run complete in {manifest.duration_seconds:.2f}s, {len(written)} files")
            return manifest
        finally:
            current_run_id.reset(token)

    # -----------------------------------------------------------------------

    def _partial_result(self, error: Exception) -> PipelineResult:
        partial = PipelineResult(metrics={"error_type": type(error).__name__})
        if isinstance(error, TrainingAborted) and len(error.log) > 0:
            partial.frames["train_log.csv"] = error.log.to_frame()
            partial.frames["residuals.csv"] = error.log.residuals_frame()
            partial.metrics["records"] = len(error.log)
        if isinstance(error, ConvergenceError):
            partial.metrics["diagnostics"] = error.diagnostics
        return partial

    def _write_manifest(self, run_id: str, started_at: datetime, t0: float, written: List[Path],
                        metrics: Dict[str, Any], status: str, error: Optional[str]) -> RunManifest:
        logs = self.log_handler.logs_for(run_id) if self.log_handler else []
        manifest = RunManifest(
            experiment=self.config.experiment,
            config=self.config.model_dump(mode="json"),
            seed=self.config.train.seed,
            version=__version__,
            started_at=started_at,
            duration_seconds=time.perf_counter() - t0,
            status=status,
            files=describe_files(self.out_dir, written),
            metrics=metrics,
            logs=logs,
            error=error,
        )
        write_json(manifest, self.out_dir / MANIFEST_NAME)
        if self.log_handler:
            self.log_handler.clear(run_id)
        return manifest

    def _resolve_ansatz(self, default: str, **overrides) -> AnsatzSpec:
        chosen = self.config.ansatz if self.config.ansatz is not None else default
        if isinstance(chosen, AnsatzSpec):
            return chosen
        return ansatz.preset(chosen, **(overrides if chosen == default else {}))

    def _init_params(self, spec: AnsatzSpec) -> ParamVector:
        rng = np.random.default_rng(self.config.train.seed)
        low, high = self.config.train.init_range
        return ansatz.random_params(spec, rng, low, high)

    def _curve_spec(self, spec: AnsatzSpec) -> AnsatzSpec:
        scale = self.config.train.output_scale
        return ansatz.with_output_scale(spec, scale if scale is not None else self.config.curve.output_scale)

    def _training_metrics(self, spec: AnsatzSpec, log, data: Dataset) -> Dict[str, Any]:
        final = log.final_params
        metrics = {
            "ansatz": spec.name,
            "parameter_count": spec.parameter_count,
            "output_scale": spec.output_scale,
            "iterations": self.config.train.iterations,
            "initial_loss": float(log.losses[0]),
            "final_loss": log.final_loss,
            "tracked_ks": [float(k) for k in log.tracked_ks],
            "first_learned_k": training.first_crossing(log),
            "train_relative_l2": relative_l2_error(ansatz.evaluate_batch(spec, final, data.inputs), data.labels),
        }
        if data.has_test:
            metrics["test_relative_l2"] = relative_l2_error(
                ansatz.evaluate_batch(spec, final, data.test_inputs), data.test_labels
            )
        return metrics

    # -----------------------------------------------------------------------
    # pipelines

    def _fit_curve(self) -> PipelineResult:
        curve = self.config.curve
        data = datasets.curve_dataset(curve.kind, curve.num_points, curve.holdout)
        spec = self._curve_spec(self._resolve_ansatz("curve-4x20"))
        log = training.train(spec, self._init_params(spec), data, self.config.train)

        outputs = ansatz.evaluate_batch(spec, log.final_params, data.inputs)
        return PipelineResult(
            frames={
                "train_log.csv": log.to_frame(),
                "residuals.csv": log.residuals_frame(),
                "spectrum.csv": fourier.dft_uniform(data.labels).to_frame(),
                "output_spectrum.csv": fourier.dft_uniform(outputs).to_frame(),
            },
            metrics=self._training_metrics(spec, log, data),
        )

    def _spectrum(self) -> PipelineResult:
        spec = self._resolve_ansatz("curve-4x20")
        if self.config.train.output_scale is not None:
            spec = ansatz.with_output_scale(spec, self.config.train.output_scale)
        params = self._init_params(spec)
        omega = ansatz.spectrum(spec)
        coeffs = fourier.pqc_fourier_coefficients(spec, params)

        rng = np.random.default_rng(self.config.train.seed + 1)
        probe_x = rng.uniform(0.0, 2 * np.pi, size=50)
        direct = ansatz.evaluate_batch(spec, params, probe_x.reshape(-1, 1))
        recon_error = float(np.max(np.abs(fourier.reconstruct(coeffs, probe_x) - direct)))

        over = fourier.pqc_fourier_coefficients(spec, params, num_points=4 * omega.max_frequency + 1)
        outside = np.abs(over.k_values) > omega.max_frequency
        leakage = float(np.max(over.amplitude[outside])) if outside.any() else 0.0

        return PipelineResult(
            frames={"spectrum.csv": coeffs.to_frame()},
            metrics={
                "ansatz": spec.name,
                "max_frequency": omega.max_frequency,
                "reconstruction_max_error": recon_error,
                "max_coefficient_outside_spectrum": leakage,
            },
        )

    def _qntk_compare(self) -> PipelineResult:
        cfg = self.config.qntk
        train_cfg = self.config.train
        curve = self.config.curve
        data = datasets.curve_dataset(curve.kind, curve.num_points, holdout=False)
        base = self.config.ansatz if isinstance(self.config.ansatz, AnsatzSpec) else None
        if base is None and isinstance(self.config.ansatz, str):
            base = ansatz.preset(self.config.ansatz)
        if base is None:
            base = ansatz.curve_layout(cfg.num_qubits, cfg.num_layers, second_axis=cfg.second_axis)
        spec = self._curve_spec(base)
        theta0 = self._init_params(spec)

        if cfg.kernel == "frozen":
            kernel = qntk.frozen_qntk(spec, theta0, data.inputs)
        else:
            kernel = qntk.empirical_qntk(spec, theta0, data.inputs, train_cfg.differentiation)
        kernel_k = qntk.kernel_to_kspace(kernel, inputs=data.inputs)

        log = training.train(spec, theta0, data, train_cfg)
        eps0 = fourier.dft_uniform(log.residuals[0])
        predicted = qntk.predict_trajectory(kernel_k, eps0, train_cfg.learning_rate, log.iterations, cfg.mode)
        table = qntk.compare_dynamics(log, predicted, log.tracked_ks)

        metrics = self._training_metrics(spec, log, data)
        metrics["kernel"] = cfg.kernel
        metrics["mode"] = cfg.mode
        metrics["kernel_min_eigenvalue"] = kernel.min_eigenvalue()
        empirical_0 = kernel if cfg.kernel == "empirical" else qntk.empirical_qntk(
            spec, theta0, data.inputs, train_cfg.differentiation)
        empirical_t = qntk.empirical_qntk(spec, log.final_params, data.inputs, train_cfg.differentiation)
        metrics["empirical_kernel_drift"] = qntk.kernel_drift(empirical_0, empirical_t)

        if len(log.tracked_ks):
            label = k_label(log.tracked_ks[0])
            window = table["t"] < cfg.fit_window
            actual = table.loc[window, f"actual_abs_k{label}"].to_numpy()
            ratio = table.loc[window, f"ratio_k{label}"].to_numpy()
            if window.sum() >= 2 and np.all(actual > 0):
                slope, _, r2 = log_linear_fit(table.loc[window, "t"], actual)
                metrics["dominant_log_residual_slope"] = slope
                metrics["dominant_log_residual_r2"] = r2
            finite = ratio[np.isfinite(ratio) & (ratio > 0)]
            if finite.size:
                metrics["dominant_max_ratio_factor"] = float(np.max(np.maximum(finite, 1.0 / finite)))

        return PipelineResult(
            frames={
                "train_log.csv": log.to_frame(),
                "residuals.csv": log.residuals_frame(),
                "qntk_compare.csv": table,
                "kernel.csv": kernel.to_frame(),
            },
            metrics=metrics,
        )

    def _iris(self) -> PipelineResult:
        iris = self.config.iris
        if iris.path:
            data = datasets.iris_load(iris.path, iris.class_pair, iris.feature_range)
        else:
            data = datasets.iris_bundled(iris.class_pair, iris.feature_range)
        spec = self._resolve_ansatz("iris-2x6")
        train_cfg = self.config.train
        if "peak_selection" not in train_cfg.model_fields_set:
            train_cfg = train_cfg.model_copy(update={"peak_selection": "descending"})
        log = training.train(spec, self._init_params(spec), data, train_cfg)

        probe = fourier.SpectralProbe.for_inputs(data.inputs)
        label_spectrum = probe.transform(data.labels)
        outputs = ansatz.evaluate_batch(spec, log.final_params, data.inputs)
        spectrum_frame = label_spectrum.to_frame()
        spectrum_frame["output_abs"] = probe.transform(outputs).amplitude

        metrics = self._training_metrics(spec, log, data)
        metrics["projection_direction"] = probe.direction.components.tolist() if probe.direction else None
        metrics["train_accuracy"] = accuracy(np.where(outputs >= 0, 1.0, -1.0), data.labels)
        return PipelineResult(
            frames={
                "train_log.csv": log.to_frame(),
                "residuals.csv": log.residuals_frame(),
                "spectrum.csv": spectrum_frame,
            },
            metrics=metrics,
        )

    def _dlp(self) -> PipelineResult:
        dlp_cfg = self.config.dlp
        align_cfg = self.config.alignment
        data = datasets.dlp_dataset(dlp_cfg)
        spec = self._resolve_ansatz("dlp-8x24", prime=dlp_cfg.p)
        theta0 = self._init_params(spec)

        probe = fourier.SpectralProbe.for_inputs(data.inputs)
        y_hat = probe.transform(data.labels)
        tracked = [k for k in fourier.top_peaks(y_hat, self.config.train.tracked_peaks)
                   if abs(y_hat.at(k)) > fourier.DIVISION_TOL]
        idx = probe.indices(tracked)
        rows: List[Dict[str, float]] = []

        def _track(step: int, params: ParamVector, value: float) -> None:
            row = {"step": step, "alignment": value}
            if align_cfg.track_frequencies and tracked:
                k_train = qkernel.kernel_matrix(spec, params, data.inputs)
                try:
                    model = qkernel.svm_train(k_train, data.labels, align_cfg.C)
                except ConvergenceError as e:
                    logger.warning(f"Skipping frequency tracking at step {step}: {e}")
                    model = None
                row[TRACKED_FLAG] = model is not None
                if model is not None:
                    decision = qkernel.svm_decision(model, k_train.values)
                    delta = np.abs(probe.matrix[idx] @ decision - y_hat.amplitudes[idx]) / np.abs(y_hat.amplitudes[idx])
                    for k, d in zip(tracked, delta):
                        row[f"delta_f_k{k_label(k)}"] = float(d)
            rows.append(row)

        result = qkernel.optimize_alignment(
            spec, theta0, data, align_cfg.steps, align_cfg.learning_rate,
            align_cfg.differentiation, callback=_track,
        )

        kernel = qkernel.kernel_matrix(spec, result.params, data.inputs)
        model = qkernel.svm_train(kernel, data.labels, align_cfg.C)
        train_pred = qkernel.svm_predict(model, kernel.values)

        if data.has_test:
            eval_x, eval_y, split = data.test_inputs, data.test_labels, "test"
            eval_pred = qkernel.svm_predict(model, qkernel.cross_kernel(spec, result.params, eval_x, data.inputs))
        else:
            eval_x, eval_y, split, eval_pred = data.inputs, data.labels, "train", train_pred

        predictions = pd.DataFrame({
            "index": np.arange(eval_y.shape[0]),
            "feature": eval_x[:, 0],
            "predicted": np.asarray(eval_pred, dtype=np.int64),
            "true": eval_y.astype(np.int64),
            "split": split,
        })

        metrics = {
            "ansatz": spec.name,
            "parameter_count": spec.parameter_count,
            "features": dlp_cfg.features,
            "alignment_initial": result.initial_alignment,
            "alignment_final": result.best_alignment,
            "alignment_best_step": result.best_step,
            "alignment_aborted": result.aborted,
            "kernel_min_eigenvalue": kernel.min_eigenvalue(),
            "num_support_vectors": len(model.support_indices),
            "train_accuracy": accuracy(train_pred, data.labels),
            "heldout_accuracy": accuracy(eval_pred, eval_y) if data.has_test else None,
            "tracked_ks": tracked,
        }
        return PipelineResult(
            frames={
                "kernel.csv": kernel.to_frame(),
                "predictions.csv": predictions,
                "alignment_log.csv": pd.DataFrame(rows),
            },
            documents={"model.json": model},
            metrics=metrics,
        )
