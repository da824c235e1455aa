import math
from enum import Enum
from typing import Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..config.settings import settings
from .circuit import AnsatzSpec

Differentiation = Literal["parameter_shift", "adjoint"]


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TrainConfig(_StrictModel):
    """Plain full-batch gradient descent settings."""
    learning_rate: float = Field(default=0.01, gt=0, description="Step size eta")
    iterations: int = Field(default=200, ge=1)
    seed: int = Field(default=7, description="Seeds the uniform parameter initialisation")
    init_range: Tuple[float, float] = Field(default=(0.0, 2 * math.pi), description="Half-open interval for initial angles")
    record_every: int = Field(default=1, ge=1)
    tracked_peaks: int = Field(default=3, ge=1, description="Number of label-spectrum peaks to track")
    peak_selection: Literal["largest", "descending"] = Field(
        default="largest",
        description="largest: the m highest peaks; descending: the highest peak then the next lower peaks above it in k",
    )
    output_scale: Optional[float] = Field(default=None, description="Overrides the ansatz output scale when set")
    differentiation: Differentiation = "parameter_shift"

    @field_validator("init_range")
    @classmethod
    def validate_init_range(cls, v):
        low, high = v
        if not (math.isfinite(low) and math.isfinite(high)) or high <= low:
            raise ValueError("init_range must be a finite interval with low < high")
        return v

    @field_validator("output_scale")
    @classmethod
    def validate_output_scale(cls, v):
        if v is not None and not math.isfinite(v):
            raise ValueError("output_scale must be finite")
        return v


class CurveKind(str, Enum):
    LOW = "low"
    MID = "mid"
    HIGH = "high"


class CurveConfig(_StrictModel):
    """Synthetic target curve sampled on N uniform points of [0, 2π)."""
    kind: CurveKind = CurveKind.LOW
    num_points: int = Field(default=64, ge=17, description="Grid size; 17 resolves k = 8")
    holdout: bool = Field(default=True, description="Attach the grid midpoints as a held-out split")
    output_scale: float = Field(default=1.2, description="Targets reach 1.1 in magnitude, beyond a bare Z expectation")


class IrisConfig(_StrictModel):
    path: Optional[str] = Field(default=None, description="5-column Iris CSV; the scikit-learn bundled copy is used when unset")
    class_pair: Tuple[str, str] = ("Iris-setosa", "Iris-versicolor")
    feature_range: Tuple[float, float] = (0.0, math.pi)

    @field_validator("class_pair")
    @classmethod
    def validate_class_pair(cls, v):
        if v[0].strip().lower() == v[1].strip().lower():
            raise ValueError("class_pair must name two different classes")
        return v

    @field_validator("feature_range")
    @classmethod
    def validate_feature_range(cls, v):
        if v[1] <= v[0]:
            raise ValueError("feature_range must satisfy low < high")
        return v


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def prime_factors(n: int) -> Tuple[int, ...]:
    factors = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            factors.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        factors.append(n)
    return tuple(factors)


def is_generator(alpha: int, p: int) -> bool:
    """alpha generates Z_p* iff alpha^((p-1)/q) != 1 mod p for every prime q | p-1."""
    if alpha % p == 0:
        return False
    return all(pow(alpha, (p - 1) // q, p) != 1 for q in prime_factors(p - 1))


class DlpConfig(_StrictModel):
    """Discrete-log classification set: label +1 iff log_alpha(beta) lies in a half interval starting at `start`."""
    p: int = Field(default=67, le=1_000_000, description="Prime modulus")
    alpha: int = Field(default=2, description="Generator of Z_p*")
    start: int = Field(default=0, description="Interval start s (taken mod p-1)")
    num_samples: int = Field(default=40, ge=2)
    seed: int = 7
    test_fraction: float = Field(default=0.25, ge=0.0, lt=1.0)
    features: Literal["group_element", "logarithm"] = "group_element"

    @field_validator("p")
    @classmethod
    def validate_prime(cls, v):
        if v < 5 or not is_prime(v):
            raise ValueError(f"p must be a prime >= 5, got {v}")
        return v

    @model_validator(mode="after")
    def validate_group(self):
        if not is_generator(self.alpha, self.p):
            raise ValueError(f"alpha={self.alpha} does not generate Z_{self.p}*")
        if self.num_samples > self.p - 1:
            raise ValueError(f"num_samples={self.num_samples} exceeds group size {self.p - 1}")
        return self


class AlignmentConfig(_StrictModel):
    steps: int = Field(default=50, ge=0)
    learning_rate: float = Field(default=0.1, gt=0)
    C: float = Field(default=1000.0, gt=0, description="SVM box constraint")
    differentiation: Differentiation = "parameter_shift"
    track_frequencies: bool = Field(default=True, description="Record decision-function Δ_F at label peaks after each step")


class QntkConfig(_StrictModel):
    num_qubits: int = Field(default=8, ge=1, le=20)
    num_layers: int = Field(default=20, ge=1)
    second_axis: Literal["Y", "Z"] = Field(default="Y", description="Axis of the second trainable block in each layer")
    mode: Literal["continuous", "discrete"] = "continuous"
    kernel: Literal["frozen", "empirical"] = "frozen"
    fit_window: int = Field(default=100, ge=2, description="Iterations used for the log-linear decay fit")


Experiment = Literal["fit-curve", "spectrum", "qntk-compare", "iris", "dlp"]


class RunConfig(_StrictModel):
    """Everything one CLI run needs. Unknown keys are rejected at every level."""
    experiment: Experiment
    ansatz: Optional[Union[str, AnsatzSpec]] = Field(default=None, description="Preset name or custom layout; experiment default when unset")
    train: TrainConfig = Field(default_factory=TrainConfig)
    curve: CurveConfig = Field(default_factory=CurveConfig)
    iris: IrisConfig = Field(default_factory=IrisConfig)
    dlp: DlpConfig = Field(default_factory=DlpConfig)
    alignment: AlignmentConfig = Field(default_factory=AlignmentConfig)
    qntk: QntkConfig = Field(default_factory=QntkConfig)
    output_dir: str = Field(default_factory=lambda: settings.OUTPUT_DIR, description="Parent of the default run directory")
    threads: Optional[int] = Field(default=None, ge=1)
