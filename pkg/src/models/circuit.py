from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import NumericError


class Axis(str, Enum):
    X = "X"
    Y = "Y"
    Z = "Z"


class SlotRole(str, Enum):
    TRAINABLE = "trainable"
    ENCODING = "encoding"
    ENTANGLER = "entangler"


class ObservableKind(str, Enum):
    FULL_Z = "full_z"
    SINGLE_Z = "single_z"
    Z_SUBSET = "z_subset"


class Observable(BaseModel):
    """Pauli-Z string measured at the end of the circuit. All supported kinds are diagonal."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ObservableKind = ObservableKind.FULL_Z
    qubits: Tuple[int, ...] = Field(default=(), description="Measured qubits (ignored for full_z)")

    @model_validator(mode="after")
    def _check_qubits(self):
        if self.kind == ObservableKind.SINGLE_Z and len(self.qubits) != 1:
            raise ValueError("single_z needs exactly one qubit")
        if self.kind == ObservableKind.Z_SUBSET and len(set(self.qubits)) != len(self.qubits):
            raise ValueError("z_subset qubits must be distinct")
        return self

    @classmethod
    def full_z(cls) -> "Observable":
        return cls(kind=ObservableKind.FULL_Z)

    @classmethod
    def single_z(cls, qubit: int) -> "Observable":
        return cls(kind=ObservableKind.SINGLE_Z, qubits=(qubit,))

    @classmethod
    def z_subset(cls, qubits) -> "Observable":
        return cls(kind=ObservableKind.Z_SUBSET, qubits=tuple(sorted(qubits)))

    def support(self, num_qubits: int) -> Tuple[int, ...]:
        if self.kind == ObservableKind.FULL_Z:
            return tuple(range(num_qubits))
        return self.qubits

    def trace_m(self, num_qubits: int) -> float:
        # Tr of a Z-string is 0 unless it is the identity
        return float(2 ** num_qubits) if not self.support(num_qubits) else 0.0

    def trace_m2(self, num_qubits: int) -> float:
        return float(2 ** num_qubits)


class GateSlot(BaseModel):
    """
    One gate position inside a layer.

    Encoding slots read feature `(feature_index + layer * feature_stride) % feature_dim`
    and rotate by `feature_scale * x`. Trainable slots consume the next angle of θ.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    role: SlotRole
    axis: Optional[Axis] = None
    qubits: Tuple[int, ...]
    feature_index: int = Field(default=0, ge=0)
    feature_stride: int = Field(default=0, ge=0)
    feature_scale: float = 1.0

    @model_validator(mode="after")
    def _check_shape(self):
        if self.role == SlotRole.ENTANGLER:
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError("entangler slot needs two distinct qubits (control, target)")
        else:
            if len(self.qubits) != 1:
                raise ValueError(f"{self.role.value} slot acts on exactly one qubit")
            if self.axis is None:
                raise ValueError(f"{self.role.value} slot needs a rotation axis")
        return self

    @classmethod
    def trainable(cls, axis: Axis, qubit: int) -> "GateSlot":
        return cls(role=SlotRole.TRAINABLE, axis=axis, qubits=(qubit,))

    @classmethod
    def encoding(cls, axis: Axis, qubit: int, feature_index: int = 0,
                 feature_stride: int = 0, feature_scale: float = 1.0) -> "GateSlot":
        return cls(role=SlotRole.ENCODING, axis=axis, qubits=(qubit,), feature_index=feature_index,
                   feature_stride=feature_stride, feature_scale=feature_scale)

    @classmethod
    def cnot(cls, control: int, target: int) -> "GateSlot":
        return cls(role=SlotRole.ENTANGLER, qubits=(control, target))


class AnsatzSpec(BaseModel):
    """Declarative data-reloading circuit: `layer_template` repeated `num_layers` times."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "custom"
    num_qubits: int = Field(..., ge=1, le=20)
    num_layers: int = Field(..., ge=0)
    feature_dim: int = Field(default=1, ge=0, description="Dimension of the input feature vectors")
    layer_template: Tuple[GateSlot, ...]
    observable: Observable = Field(default_factory=Observable.full_z)
    trailing_trainable_block: bool = Field(default=False, description="Append the template's trainable slots once more after the last layer")
    output_scale: float = Field(default=1.0, description="Fixed multiplier applied to the expectation value")

    @model_validator(mode="after")
    def _check_indices(self):
        for slot in self.layer_template:
            for q in slot.qubits:
                if q >= self.num_qubits:
                    raise ValueError(f"slot qubit {q} out of range for {self.num_qubits} qubits")
            if slot.role == SlotRole.ENCODING and slot.feature_index >= self.feature_dim:
                raise ValueError(f"encoding feature_index {slot.feature_index} >= feature_dim {self.feature_dim}")
        for q in self.observable.qubits:
            if q >= self.num_qubits:
                raise ValueError(f"observable qubit {q} out of range for {self.num_qubits} qubits")
        return self

    @field_validator("output_scale")
    @classmethod
    def _finite_scale(cls, v):
        if not np.isfinite(v):
            raise ValueError("output_scale must be finite")
        return v

    def _count(self, role: SlotRole) -> int:
        return sum(1 for slot in self.layer_template if slot.role == role)

    @property
    def parameter_count(self) -> int:
        per_layer = self._count(SlotRole.TRAINABLE)
        return per_layer * (self.num_layers + (1 if self.trailing_trainable_block else 0))

    @property
    def encoding_count(self) -> int:
        return self._count(SlotRole.ENCODING) * self.num_layers

    @property
    def dimension(self) -> int:
        return 2 ** self.num_qubits


@dataclass(frozen=True)
class ParamVector:
    """Trainable angles θ in radians, in slot order."""
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise NumericError("ParamVector entries must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    @classmethod
    def zeros(cls, n: int) -> "ParamVector":
        return cls(np.zeros(n))

    def tolist(self):
        return self.values.tolist()


@dataclass(frozen=True)
class FrequencySpectrum:
    """Accessible integer frequencies Ω = {-E, ..., E} of a single-feature circuit."""
    max_frequency: int

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(-self.max_frequency, self.max_frequency + 1)

    def __contains__(self, k) -> bool:
        return float(k).is_integer() and abs(k) <= self.max_frequency
