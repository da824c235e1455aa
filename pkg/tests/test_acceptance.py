"""Full-size experiment properties. Minutes each; run with `pytest -m slow`."""
import numpy as np
import pytest

from src.models.config import DlpConfig, TrainConfig
from src.services import ansatz, datasets, fourier, qkernel, qntk, training
from src.utils.metrics import accuracy, log_linear_fit, relative_l2_error

SEEDS = range(10)
DOMINANT = {"low": 1.0, "mid": 3.0, "high": 8.0}

# RY, CNOT and the Z-string readout are real and conj(RX(x)) = RX(-x), so the
# curve-4x20 output is even about x = π for every θ. On the symmetric grid its
# DFT is real while the sine targets' DFT is imaginary, hence
# |ε̂(k)|² = |f̂(k)|² + |ŷ(k)|² >= |ŷ(k)|²: Δ_F never drops below 1 and the
# relative L2 error never drops below 1.
EVEN_MODEL = (
    "curve-4x20 only outputs functions with f(x) = f(2π - x); odd targets keep "
    "Δ_F >= 1 and relative L2 >= 1 for every θ"
)


def _curve_run(kind, seed, iterations=200, layout="curve-4x20"):
    data = datasets.curve_dataset(kind, 64)
    spec = ansatz.preset(layout, output_scale=1.2)
    theta0 = ansatz.random_params(spec, np.random.default_rng(seed))
    config = TrainConfig(learning_rate=0.01, iterations=iterations, seed=seed, differentiation="adjoint")
    return spec, data, theta0, training.train(spec, theta0, data, config)


class TestFrequencyPrinciple:

    @pytest.mark.slow
    @pytest.mark.xfail(strict=True, reason=EVEN_MODEL)
    @pytest.mark.parametrize("kind", ["low", "mid", "high"])
    def test_dominant_frequency_learned_first(self, kind):
        hits = 0
        for seed in SEEDS:
            _, _, _, log = _curve_run(kind, seed)
            hits += training.first_crossing(log) == DOMINANT[kind]
        assert hits >= 8

    @pytest.mark.slow
    @pytest.mark.parametrize("kind", ["low", "mid", "high"])
    def test_dominant_frequency_has_largest_gradient(self, kind):
        hits = 0
        for seed in SEEDS:
            _, _, _, log = _curve_run(kind, seed, iterations=11)
            norms = log.grad_norms[10]
            hits += float(log.tracked_ks[int(np.argmax(norms))]) == DOMINANT[kind]
        assert hits >= 8

    @pytest.mark.slow
    @pytest.mark.parametrize("kind", ["low", "mid", "high"])
    def test_even_model_never_crosses(self, kind):
        _, _, _, log = _curve_run(kind, 0, iterations=50)
        assert training.first_crossing(log) is None
        assert np.all(log.delta_f >= 1.0 - 1e-9)


class TestFitQuality:

    @pytest.mark.slow
    @pytest.mark.xfail(strict=True, reason=EVEN_MODEL)
    @pytest.mark.parametrize("kind", ["low", "mid", "high"])
    def test_relative_error_reaches_target(self, kind):
        hits = misses = 0
        for seed in SEEDS:
            spec, data, _, log = _curve_run(kind, seed, iterations=1000)
            fit = ansatz.evaluate_batch(spec, log.final_params, data.inputs)
            if relative_l2_error(fit, data.labels) <= 0.15:
                hits += 1
            else:
                misses += 1
            if misses > len(SEEDS) - 8:
                break
        assert hits >= 8

    @pytest.mark.slow
    def test_phase_variant_escapes_even_floor(self):
        errors = []
        for seed in range(3):
            spec, data, _, log = _curve_run("low", seed, iterations=300, layout="curve-4x20-rz")
            errors.append(relative_l2_error(ansatz.evaluate_batch(spec, log.final_params, data.inputs), data.labels))
        assert sum(e <= 0.5 for e in errors) >= 2


class TestKernelDynamics:

    @pytest.mark.slow
    @pytest.mark.xfail(strict=True, reason=EVEN_MODEL)
    def test_dominant_residual_decays_exponentially(self):
        data = datasets.curve_dataset("low", 64, holdout=False)
        spec = ansatz.curve_layout(8, 20, output_scale=1.2)
        theta0 = ansatz.random_params(spec, np.random.default_rng(7))
        kernel_k = qntk.kernel_to_kspace(qntk.frozen_qntk(spec, theta0, data.inputs), inputs=data.inputs)
        log = training.train(spec, theta0, data, TrainConfig(learning_rate=0.01, iterations=100, differentiation="adjoint"))

        predicted = qntk.predict_trajectory(kernel_k, fourier.dft_uniform(log.residuals[0]), 0.01, log.iterations)
        table = qntk.compare_dynamics(log, predicted, [1.0])
        _, _, r2 = log_linear_fit(table["t"], table["actual_abs_k1"])
        assert r2 >= 0.95
        ratio = table["ratio_k1"].to_numpy()
        assert np.all((ratio <= 3.0) & (ratio >= 1.0 / 3.0))


class TestClassification:

    @pytest.mark.slow
    def test_iris_low_frequency_dominates(self):
        data = datasets.iris_bundled()
        y_hat = fourier.SpectralProbe.for_inputs(data.inputs).transform(data.labels)
        peaks = fourier.descending_peaks(y_hat, 3)
        assert len(peaks) == 3
        assert peaks[0] == min(peaks) == fourier.top_peaks(y_hat, 1)[0]

    @pytest.mark.slow
    def test_iris_low_frequency_learned_first(self):
        data = datasets.iris_bundled()
        spec = ansatz.preset("iris-2x6")
        hits = 0
        for seed in range(6):
            theta0 = ansatz.random_params(spec, np.random.default_rng(seed))
            config = TrainConfig(learning_rate=0.01, iterations=500, seed=seed,
                                 differentiation="adjoint", peak_selection="descending")
            log = training.train(spec, theta0, data, config)
            hits += training.first_crossing(log) == min(log.tracked_ks)
        assert hits >= 4

    @pytest.mark.slow
    def test_dlp_heldout_accuracy(self):
        passed = 0
        for seed in range(5):
            data = datasets.dlp_dataset(DlpConfig(seed=seed, features="logarithm"))
            spec = ansatz.preset("dlp-8x24", prime=67)
            theta0 = ansatz.random_params(spec, np.random.default_rng(seed))
            result = qkernel.optimize_alignment(spec, theta0, data, steps=50, eta=0.1, method="adjoint")
            assert result.best_alignment >= result.initial_alignment

            kernel = qkernel.kernel_matrix(spec, result.params, data.inputs)
            model = qkernel.svm_train(kernel, data.labels)
            rows = qkernel.cross_kernel(spec, result.params, data.test_inputs, data.inputs)
            predictions = qkernel.svm_predict(model, rows)
            assert predictions.shape == (10,)
            passed += accuracy(predictions, data.test_labels) >= 0.85
        assert passed >= 3
