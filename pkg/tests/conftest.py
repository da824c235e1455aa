import numpy as np
import pytest
from hypothesis import HealthCheck, settings as hypothesis_settings

from src.services import ansatz

hypothesis_settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
hypothesis_settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_curve_spec():
    """3 qubits, 2 layers: 12 parameters, spectrum {-6, ..., 6}."""
    return ansatz.curve_layout(num_qubits=3, num_layers=2)


@pytest.fixture
def small_params(small_curve_spec, rng):
    return ansatz.random_params(small_curve_spec, rng)
