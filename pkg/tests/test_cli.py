import json

import pytest

from src.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main
from src.config.settings import settings
from src.models.errors import ConvergenceError, NumericError
from src.models.manifest import RunManifest
from src.services import qkernel, training
from src.utils.export import sha256_file

FAST_TRAIN = {"iterations": 3, "differentiation": "adjoint"}


@pytest.fixture(autouse=True)
def restore_workers(monkeypatch):
    monkeypatch.setattr(settings, "MAX_WORKERS", settings.MAX_WORKERS)


def _write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload, indent=2))
    return str(path)


def _run(tmp_path, experiment, payload, *extra, out="out"):
    out_dir = tmp_path / out
    code = main([experiment, "--config", _write_config(tmp_path, payload), "--out", str(out_dir), *extra])
    return code, out_dir


def _manifest(out_dir):
    return RunManifest.model_validate_json((out_dir / "manifest.json").read_text())


class TestRuns:

    @pytest.mark.integration
    def test_fit_curve_outputs(self, tmp_path):
        code, out = _run(tmp_path, "fit-curve", {"train": FAST_TRAIN, "curve": {"num_points": 17}})
        assert code == EXIT_OK
        manifest = _manifest(out)
        assert manifest.status == "complete"
        names = sorted(f.name for f in manifest.files)
        assert names == ["output_spectrum.csv", "residuals.csv", "spectrum.csv", "train_log.csv"]
        for produced in manifest.files:
            assert sha256_file(out / produced.name) == produced.sha256
        assert (out / "run.log").exists()
        assert manifest.metrics["tracked_ks"] == [1.0, 3.0, 8.0]
        header = (out / "train_log.csv").read_text().splitlines()[0]
        assert header.startswith("iter,loss,test_loss,delta_f_k1")

    @pytest.mark.integration
    def test_same_seed_same_bytes(self, tmp_path):
        payload = {"train": FAST_TRAIN, "curve": {"num_points": 17}}
        _, first = _run(tmp_path, "fit-curve", payload, "--seed", "11", out="a")
        _, second = _run(tmp_path, "fit-curve", payload, "--seed", "11", out="b")
        for name in ("train_log.csv", "residuals.csv", "output_spectrum.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()
        assert _manifest(first).seed == 11

    @pytest.mark.integration
    def test_flags_override_file(self, tmp_path):
        code, out = _run(tmp_path, "fit-curve", {"train": FAST_TRAIN, "curve": {"num_points": 17}},
                         "--iterations", "2", "--eta", "0.02")
        assert code == EXIT_OK
        config = _manifest(out).config
        assert config["train"]["iterations"] == 2
        assert config["train"]["learning_rate"] == 0.02
        assert config["train"]["differentiation"] == "adjoint"

    @pytest.mark.integration
    def test_spectrum(self, tmp_path):
        code, out = _run(tmp_path, "spectrum", {})
        assert code == EXIT_OK
        manifest = _manifest(out)
        assert manifest.metrics["max_frequency"] == 80
        assert manifest.metrics["reconstruction_max_error"] < 1e-9
        assert manifest.metrics["max_coefficient_outside_spectrum"] < 1e-10
        assert len((out / "spectrum.csv").read_text().splitlines()) == 162

    @pytest.mark.integration
    def test_qntk_compare(self, tmp_path):
        payload = {
            "train": {"iterations": 5, "differentiation": "adjoint"},
            "curve": {"num_points": 17},
            "qntk": {"num_qubits": 2, "num_layers": 2, "fit_window": 5},
        }
        code, out = _run(tmp_path, "qntk-compare", payload)
        assert code == EXIT_OK
        names = {f.name for f in _manifest(out).files}
        assert names == {"train_log.csv", "residuals.csv", "qntk_compare.csv", "kernel.csv"}
        header = (out / "qntk_compare.csv").read_text().splitlines()[0]
        assert header.startswith("t,actual_abs_k1,predicted_abs_k1,ratio_k1")

    @pytest.mark.integration
    def test_qntk_compare_phase_variant(self, tmp_path):
        payload = {
            "train": {"iterations": 3, "differentiation": "adjoint"},
            "curve": {"num_points": 17},
            "qntk": {"num_qubits": 2, "num_layers": 2, "second_axis": "Z", "fit_window": 3},
        }
        code, out = _run(tmp_path, "qntk-compare", payload)
        assert code == EXIT_OK
        assert _manifest(out).metrics["ansatz"] == "curve-2x2-rz"

    @pytest.mark.integration
    def test_iris(self, tmp_path):
        code, out = _run(tmp_path, "iris", {"train": {"iterations": 2, "differentiation": "adjoint"}})
        assert code == EXIT_OK
        manifest = _manifest(out)
        assert {f.name for f in manifest.files} == {"train_log.csv", "residuals.csv", "spectrum.csv"}
        assert len(manifest.metrics["projection_direction"]) == 4

    @pytest.mark.integration
    def test_dlp(self, tmp_path):
        payload = {
            "dlp": {"p": 11, "alpha": 2, "num_samples": 8},
            "alignment": {"steps": 2, "differentiation": "adjoint"},
        }
        code, out = _run(tmp_path, "dlp", payload)
        assert code == EXIT_OK
        manifest = _manifest(out)
        assert {f.name for f in manifest.files} == {"kernel.csv", "model.json", "predictions.csv", "alignment_log.csv"}
        assert manifest.metrics["alignment_final"] >= manifest.metrics["alignment_initial"]
        model = json.loads((out / "model.json").read_text())
        assert len(model["alphas"]) == 6
        assert (out / "predictions.csv").read_text().splitlines()[0] == "index,feature,predicted,true,split"

    @pytest.mark.integration
    def test_dlp_keeps_steps_where_svm_fails(self, tmp_path, monkeypatch):
        real = qkernel.svm_train
        calls = {"n": 0}

        def flaky(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] == 1:
                raise ConvergenceError("SMO did not converge", {"passes": 0})
            return real(*args, **kwargs)

        monkeypatch.setattr(qkernel, "svm_train", flaky)
        payload = {
            "dlp": {"p": 11, "alpha": 2, "num_samples": 8},
            "alignment": {"steps": 2, "differentiation": "adjoint"},
        }
        code, out = _run(tmp_path, "dlp", payload)
        assert code == EXIT_OK
        lines = (out / "alignment_log.csv").read_text().splitlines()
        header = lines[0].split(",")
        assert header[:3] == ["step", "alignment", "frequencies_tracked"]
        assert len(lines) == 4
        first = dict(zip(header, lines[1].split(",")))
        assert first["step"] == "0"
        assert first["frequencies_tracked"] == "False"
        assert all(first[c] == "" for c in header if c.startswith("delta_f_"))
        second = dict(zip(header, lines[2].split(",")))
        assert second["frequencies_tracked"] == "True"
        assert all(second[c] != "" for c in header if c.startswith("delta_f_"))


class TestFailures:

    @pytest.mark.integration
    def test_unknown_key_reports_line(self, tmp_path, capsys):
        code, _ = _run(tmp_path, "fit-curve", {"train": {"iterations": 3, "momentum": 0.9}})
        assert code == EXIT_CONFIG
        err = capsys.readouterr().err
        assert "train.momentum" in err
        assert "(line 4)" in err

    @pytest.mark.integration
    def test_invalid_json(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "train": {\n    "iterations": ,\n  }\n}\n')
        assert main(["fit-curve", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_CONFIG
        assert "(line 3)" in capsys.readouterr().err

    @pytest.mark.integration
    def test_experiment_mismatch(self, tmp_path):
        code, _ = _run(tmp_path, "iris", {"experiment": "dlp"})
        assert code == EXIT_CONFIG

    @pytest.mark.integration
    def test_bad_values(self, tmp_path):
        assert _run(tmp_path, "fit-curve", {}, "--threads", "0")[0] == EXIT_CONFIG
        assert _run(tmp_path, "fit-curve", {"train": {"learning_rate": -1}})[0] == EXIT_CONFIG
        assert _run(tmp_path, "dlp", {"dlp": {"p": 10}})[0] == EXIT_CONFIG
        assert _run(tmp_path, "fit-curve", {"ansatz": "nope", "train": FAST_TRAIN})[0] == EXIT_CONFIG

    @pytest.mark.integration
    def test_missing_iris_file(self, tmp_path):
        payload = {"iris": {"path": str(tmp_path / "missing.csv")}, "train": FAST_TRAIN}
        assert _run(tmp_path, "iris", payload)[0] == EXIT_CONFIG

    @pytest.mark.integration
    def test_numeric_failure_writes_incomplete_manifest(self, tmp_path, monkeypatch):
        real = training.value_and_jacobian
        calls = {"n": 0}

        def flaky(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] == 2:
                raise NumericError("non-finite circuit gradient")
            return real(*args, **kwargs)

        monkeypatch.setattr(training, "value_and_jacobian", flaky)
        code, out = _run(tmp_path, "fit-curve", {"train": FAST_TRAIN, "curve": {"num_points": 17}})
        assert code == EXIT_NUMERIC
        manifest = _manifest(out)
        assert manifest.status == "incomplete"
        assert "non-finite" in manifest.error
        assert {f.name for f in manifest.files} == {"train_log.csv", "residuals.csv"}
        assert manifest.metrics["records"] == 1
