import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.models.config import DlpConfig, is_generator, is_prime
from src.models.errors import ConfigurationError, ParseError
from src.services import datasets
from src.services.fourier import uniform_grid

IRIS_ROWS = """sepal_length,sepal_width,petal_length,petal_width,class
5.1,3.5,1.4,0.2,Iris-setosa
4.9,3.0,1.4,0.2,Iris-setosa
7.0,3.2,4.7,1.4,Iris-versicolor
6.4,3.2,4.5,1.5,Iris-versicolor
6.3,3.3,6.0,2.5,Iris-virginica
"""


class TestCurves:

    @pytest.mark.unit
    def test_grid_and_holdout(self):
        data = datasets.curve_dataset("mid", 64)
        np.testing.assert_allclose(data.inputs[:, 0], uniform_grid(64))
        np.testing.assert_allclose(data.test_inputs[:, 0], uniform_grid(64) + np.pi / 64)
        assert data.name == "curve-mid"

    @pytest.mark.unit
    def test_labels(self):
        x = np.array([0.3, 1.7])
        expected = 0.1 * np.sin(x) + 0.1 * np.sin(3 * x) + 0.9 * np.sin(8 * x)
        np.testing.assert_allclose(datasets.curve_labels("high", x), expected)

    @pytest.mark.unit
    def test_no_holdout(self):
        assert not datasets.curve_dataset("low", 32, holdout=False).has_test

    @pytest.mark.unit
    def test_grid_too_coarse(self):
        with pytest.raises(ConfigurationError):
            datasets.curve_dataset("low", 16)


class TestIris:

    @pytest.mark.unit
    def test_load_with_header(self, tmp_path):
        path = tmp_path / "iris.csv"
        path.write_text(IRIS_ROWS)
        data = datasets.iris_load(path)
        np.testing.assert_array_equal(data.labels, [1, 1, -1, -1])
        assert data.feature_dim == 4
        assert data.inputs.min() == pytest.approx(0.0)
        assert data.inputs.max() == pytest.approx(math.pi)
        # sepal_width of the first row is the column maximum
        assert data.inputs[0, 1] == pytest.approx(math.pi)

    @pytest.mark.unit
    def test_class_names_without_prefix(self, tmp_path):
        path = tmp_path / "iris.csv"
        path.write_text(IRIS_ROWS)
        data = datasets.iris_load(path, class_pair=("versicolor", "virginica"))
        np.testing.assert_array_equal(data.labels, [1, 1, -1])

    @pytest.mark.unit
    def test_constant_column_maps_to_zero(self, tmp_path):
        path = tmp_path / "iris.csv"
        path.write_text("1.0,2.0,3.0,0.2,Iris-setosa\n2.0,2.0,4.0,0.2,Iris-versicolor\n")
        data = datasets.iris_load(path)
        np.testing.assert_array_equal(data.inputs[:, 1], [0.0, 0.0])

    @pytest.mark.unit
    def test_non_numeric_field_reports_line(self, tmp_path):
        path = tmp_path / "iris.csv"
        path.write_text("5.1,3.5,1.4,0.2,Iris-setosa\n4.9,abc,1.4,0.2,Iris-setosa\n")
        with pytest.raises(ParseError) as info:
            datasets.iris_load(path)
        assert info.value.line == 2

    @pytest.mark.unit
    def test_missing_class_column(self, tmp_path):
        path = tmp_path / "iris.csv"
        path.write_text("5.1,3.5,1.4,0.2,Iris-setosa\n4.9,3.0,1.4,0.2,\n")
        with pytest.raises(ParseError) as info:
            datasets.iris_load(path)
        assert info.value.line == 2

    @pytest.mark.unit
    def test_missing_class(self, tmp_path):
        path = tmp_path / "iris.csv"
        path.write_text("5.1,3.5,1.4,0.2,Iris-setosa\n")
        with pytest.raises(ConfigurationError):
            datasets.iris_load(path)

    @pytest.mark.unit
    def test_empty_file(self, tmp_path):
        path = tmp_path / "iris.csv"
        path.write_text("")
        with pytest.raises(ParseError):
            datasets.iris_load(path)

    @pytest.mark.unit
    def test_bundled(self):
        data = datasets.iris_bundled()
        assert len(data) == 100
        assert int((data.labels > 0).sum()) == 50
        assert data.inputs.min() >= 0.0 and data.inputs.max() <= math.pi + 1e-12


class TestDiscreteLog:

    @pytest.mark.unit
    def test_log_table(self):
        logs = datasets.discrete_log_table(7, 3)
        assert logs[0] == -1
        assert {int(b): int(logs[b]) for b in range(1, 7)} == {1: 0, 3: 1, 2: 2, 6: 3, 4: 4, 5: 5}

    @pytest.mark.unit
    def test_labels(self):
        config = DlpConfig(p=7, alpha=3, num_samples=6)
        labels = datasets.dlp_labels([1, 3, 2, 6, 4, 5], config)
        np.testing.assert_array_equal(labels, [1, 1, 1, -1, -1, -1])

    @pytest.mark.unit
    def test_interval_wraps(self):
        config = DlpConfig(p=7, alpha=3, start=5, num_samples=6)
        # logs {5, 0, 1} are positive
        np.testing.assert_array_equal(datasets.dlp_labels([5, 1, 3, 2], config), [1, 1, 1, -1])

    @pytest.mark.unit
    def test_config_checks_group(self):
        assert is_prime(67) and not is_prime(65)
        assert is_generator(2, 67) and not is_generator(2, 7)
        with pytest.raises(ValidationError):
            DlpConfig(p=9)
        with pytest.raises(ValidationError):
            DlpConfig(p=7, alpha=2)
        with pytest.raises(ValidationError):
            DlpConfig(p=7, alpha=3, num_samples=7)

    @pytest.mark.unit
    def test_dataset_split_and_determinism(self):
        config = DlpConfig(p=67, alpha=2, num_samples=40, seed=3)
        a = datasets.dlp_dataset(config)
        b = datasets.dlp_dataset(config)
        assert len(a) == 30 and a.test_inputs.shape == (10, 1)
        np.testing.assert_array_equal(a.inputs, b.inputs)
        elements = np.concatenate([a.inputs[:, 0], a.test_inputs[:, 0]])
        assert len(set(elements.tolist())) == 40
        assert elements.min() >= 1 and elements.max() <= 66
        np.testing.assert_array_equal(a.labels, datasets.dlp_labels(a.inputs[:, 0].astype(int), config))

    @pytest.mark.unit
    @pytest.mark.parametrize("start", [0, 40])
    def test_labels_match_power_table(self, start):
        p, alpha = 67, 2
        config = DlpConfig(p=p, alpha=alpha, start=start)
        half = set((start + i) % (p - 1) for i in range(p // 2))
        expected = {}
        for x in range(p - 1):
            expected[pow(alpha, x, p)] = 1.0 if x in half else -1.0
        assert sorted(expected) == list(range(1, p))
        betas = np.arange(1, p)
        np.testing.assert_array_equal(datasets.dlp_labels(betas, config), [expected[int(b)] for b in betas])
        assert sum(v > 0 for v in expected.values()) == 33

        data = datasets.dlp_dataset(config)
        for beta, label in zip(data.inputs[:, 0], data.labels):
            assert label == expected[int(beta)]

    @pytest.mark.unit
    def test_logarithm_features(self):
        config = DlpConfig(p=11, alpha=2, num_samples=10, test_fraction=0.0, features="logarithm")
        data = datasets.dlp_dataset(config)
        assert not data.has_test
        assert sorted(data.inputs[:, 0].tolist()) == list(range(10))
