from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass
class StateVector:
    """Dense amplitudes of an n-qubit pure state. Qubit 0 is the leftmost bit of the basis label."""
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if self.amplitudes.shape[0] != 2 ** self.num_qubits:
            raise ShapeError(
                f"expected {2 ** self.num_qubits} amplitudes for {self.num_qubits} qubits, got {self.amplitudes.shape[0]}"
            )

    @property
    def dimension(self) -> int:
        return self.amplitudes.shape[0]

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())
