import logging
import math
import re
from pathlib import Path
from typing import Dict, Sequence, Tuple

import numpy as np
import pandas as pd

from ..models.config import CurveKind, DlpConfig, is_generator, is_prime, prime_factors
from ..models.dataset import Dataset
from ..models.errors import ConfigurationError, ParseError
from .fourier import uniform_grid

logger = logging.getLogger(__name__)

__all__ = [
    "CURVE_WEIGHTS",
    "curve_labels",
    "curve_dataset",
    "iris_load",
    "iris_bundled",
    "discrete_log_table",
    "dlp_labels",
    "dlp_dataset",
    "is_prime",
    "is_generator",
    "prime_factors",
]

# weights on sin(x), sin(3x), sin(8x)
CURVE_WEIGHTS: Dict[CurveKind, Tuple[float, float, float]] = {
    CurveKind.LOW: (0.9, 0.1, 0.1),
    CurveKind.MID: (0.1, 0.9, 0.1),
    CurveKind.HIGH: (0.1, 0.1, 0.9),
}
CURVE_FREQUENCIES = (1, 3, 8)
MIN_CURVE_POINTS = 17


def curve_labels(kind, x) -> np.ndarray:
    weights = CURVE_WEIGHTS[CurveKind(kind)]
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    return sum(w * np.sin(k * x) for w, k in zip(weights, CURVE_FREQUENCIES))


def curve_dataset(kind, n: int = 64, holdout: bool = True) -> Dataset:
    """x_i = 2πi/N with the closed-form target; held-out split at the midpoints 2π(i + ½)/N."""
    if n < MIN_CURVE_POINTS:
        raise ConfigurationError(f"curve grid needs N >= {MIN_CURVE_POINTS} to resolve k = 8, got {n}")
    kind = CurveKind(kind)
    x = uniform_grid(n)
    test_x = test_y = None
    if holdout:
        test_x = x + np.pi / n
        test_y = curve_labels(kind, test_x)
    return Dataset(x.reshape(-1, 1), curve_labels(kind, x), test_x, test_y, name=f"curve-{kind.value}")


# ---------------------------------------------------------------------------
# Iris

def _normalise_class(name: str) -> str:
    name = str(name).strip().lower()
    return name[len("iris-"):] if name.startswith("iris-") else name


def _scale_columns(features: np.ndarray, feature_range: Tuple[float, float]) -> np.ndarray:
    """Min-max each column into feature_range; a constant column maps to 0."""
    lo, hi = feature_range
    mins = features.min(axis=0)
    spans = features.max(axis=0) - mins
    scaled = np.zeros_like(features)
    varying = spans > 0
    scaled[:, varying] = lo + (features[:, varying] - mins[varying]) / spans[varying] * (hi - lo)
    return scaled


def _iris_dataset(features: np.ndarray, classes: Sequence[str], class_pair: Tuple[str, str],
                  feature_range: Tuple[float, float], source: str) -> Dataset:
    wanted = [_normalise_class(c) for c in class_pair]
    normalised = np.array([_normalise_class(c) for c in classes])
    for name, key in zip(class_pair, wanted):
        if not np.any(normalised == key):
            raise ConfigurationError(f"class '{name}' not found in {source}")
    mask = np.isin(normalised, wanted)
    labels = np.where(normalised[mask] == wanted[0], 1.0, -1.0)
    scaled = _scale_columns(features[mask], feature_range)
    logger.info(f"Loaded {mask.sum()} Iris rows ({class_pair[0]} vs {class_pair[1]}) from {source}")
    return Dataset(scaled, labels, name="iris")


_PANDAS_LINE = re.compile(r"line (\d+)")


def _is_number(value) -> bool:
    try:
        return math.isfinite(float(value))
    except (TypeError, ValueError):
        return False


def iris_load(path, class_pair: Tuple[str, str] = ("Iris-setosa", "Iris-versicolor"),
              feature_range: Tuple[float, float] = (0.0, math.pi)) -> Dataset:
    """
    Read a 5-column Iris CSV (4 numeric features, class name). An optional
    header row is skipped. Row order is preserved.
    """
    path = Path(path)
    try:
        raw = pd.read_csv(path, header=None, dtype=str, skip_blank_lines=False,
                          keep_default_na=False, skipinitialspace=True)
    except pd.errors.ParserError as e:
        match = _PANDAS_LINE.search(str(e))
        raise ParseError(f"malformed row in {path.name}: {e}", line=int(match.group(1)) if match else None)
    except pd.errors.EmptyDataError:
        raise ParseError(f"{path.name} is empty")

    features = []
    classes = []
    for idx, row in enumerate(raw.itertuples(index=False)):
        line = idx + 1
        fields = ["" if v is None or (isinstance(v, float) and math.isnan(v)) else str(v).strip() for v in row]
        if all(f == "" for f in fields):
            continue
        if line == 1 and not all(_is_number(f) for f in fields[:4]):
            continue  # header
        if len(fields) != 5 or fields[4] == "":
            raise ParseError(f"expected 4 features and a class name, got {len([f for f in fields if f])} fields", line=line)
        if not all(_is_number(f) for f in fields[:4]):
            raise ParseError(f"non-numeric feature in {fields[:4]}", line=line)
        features.append([float(f) for f in fields[:4]])
        classes.append(fields[4])

    if not features:
        raise ParseError(f"{path.name} holds no data rows")
    return _iris_dataset(np.array(features), classes, class_pair, feature_range, source=path.name)


def iris_bundled(class_pair: Tuple[str, str] = ("Iris-setosa", "Iris-versicolor"),
                 feature_range: Tuple[float, float] = (0.0, math.pi)) -> Dataset:
    """Same construction from scikit-learn's bundled copy of the data (no download)."""
    from sklearn.datasets import load_iris

    bunch = load_iris()
    classes = [bunch.target_names[t] for t in bunch.target]
    return _iris_dataset(np.asarray(bunch.data, dtype=np.float64), classes, class_pair,
                         feature_range, source="scikit-learn bundled iris")


# ---------------------------------------------------------------------------
# discrete logarithm

def discrete_log_table(p: int, alpha: int) -> np.ndarray:
    """logs[beta] = x with alpha^x = beta mod p, built by iterated multiplication; logs[0] = -1."""
    logs = np.full(p, -1, dtype=np.int64)
    value = 1
    for x in range(p - 1):
        logs[value] = x
        value = (value * alpha) % p
    return logs


def dlp_labels(betas, config: DlpConfig) -> np.ndarray:
    """+1 iff log_alpha(beta) ∈ {s, ..., s + (p-3)/2} mod p-1."""
    logs = discrete_log_table(config.p, config.alpha)[np.asarray(betas, dtype=np.int64)]
    offset = (logs - config.start) % (config.p - 1)
    return np.where(offset <= (config.p - 3) // 2, 1.0, -1.0)


def dlp_dataset(config: DlpConfig) -> Dataset:
    """
    `num_samples` group elements drawn without replacement from Z_p*, split
    train/test by `test_fraction`. Features are the elements themselves or,
    with features=logarithm, their discrete logs.
    """
    p = config.p
    rng = np.random.default_rng(config.seed)
    betas = rng.choice(np.arange(1, p), size=config.num_samples, replace=False)
    labels = dlp_labels(betas, config)
    features = betas if config.features == "group_element" else discrete_log_table(p, config.alpha)[betas]
    features = features.astype(np.float64).reshape(-1, 1)

    n_test = int(round(config.num_samples * config.test_fraction))
    n_train = config.num_samples - n_test
    test_x = features[n_train:] if n_test else None
    test_y = labels[n_train:] if n_test else None
    logger.info(
        f"DLP dataset p={p} alpha={config.alpha} s={config.start}: "
        f"{n_train} train / {n_test} test, {int((labels > 0).sum())} positive"
    )
    return Dataset(features[:n_train], labels[:n_train], test_x, test_y, name=f"dlp-{p}")
