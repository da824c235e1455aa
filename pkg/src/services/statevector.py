"""
Dense statevector simulation.

Conventions:
    R_A(φ) = exp(-i φ A / 2) for A in {X, Y, Z}.
    Qubit 0 is the leftmost (most significant) bit of the basis index.

The batched kernels operate on (B, 2^n) arrays so the ansatz engine can push
many circuits through one numpy call; the single-state operations are thin
wrappers that return fresh states.
"""
import logging
from functools import lru_cache

import numpy as np

from ..config.settings import settings
from ..models.circuit import Axis, Observable
from ..models.errors import ConfigurationError, NumericError, QubitIndexError, ShapeError
from ..models.state import StateVector

logger = logging.getLogger(__name__)

_PAULI = {
    Axis.X: np.array([[0, 1], [1, 0]], dtype=np.complex128),
    Axis.Y: np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    Axis.Z: np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def _check_num_qubits(num_qubits: int) -> None:
    if not 1 <= num_qubits <= settings.MAX_QUBITS:
        raise ConfigurationError(f"num_qubits must be in [1, {settings.MAX_QUBITS}], got {num_qubits}")


def _check_qubit(qubit: int, num_qubits: int) -> None:
    if not 0 <= qubit < num_qubits:
        raise QubitIndexError(f"qubit {qubit} out of range for {num_qubits} qubits")


def pauli_matrix(axis: Axis) -> np.ndarray:
    return _PAULI[Axis(axis)].copy()


def rotation_matrices(axis: Axis, angles) -> np.ndarray:
    """R_axis(φ) for every angle; returns shape angles.shape + (2, 2)."""
    phi = np.asarray(angles, dtype=np.float64)
    c = np.cos(phi / 2)
    s = np.sin(phi / 2)
    out = np.zeros(phi.shape + (2, 2), dtype=np.complex128)
    axis = Axis(axis)
    if axis == Axis.X:
        out[..., 0, 0] = c
        out[..., 0, 1] = -1j * s
        out[..., 1, 0] = -1j * s
        out[..., 1, 1] = c
    elif axis == Axis.Y:
        out[..., 0, 0] = c
        out[..., 0, 1] = -s
        out[..., 1, 0] = s
        out[..., 1, 1] = c
    else:
        out[..., 0, 0] = np.exp(-0.5j * phi)
        out[..., 1, 1] = np.exp(0.5j * phi)
    return out


def apply_single_qubit_batch(states: np.ndarray, matrices: np.ndarray, qubit: int, num_qubits: int) -> np.ndarray:
    """
    Apply a 2x2 gate to `qubit` of every row of `states` (B, 2^n).

    `matrices` is either one shared (2, 2) gate or a per-row (B, 2, 2) stack.
    Returns a new array.
    """
    batch = states.shape[0]
    psi = states.reshape(batch, 2 ** qubit, 2, 2 ** (num_qubits - qubit - 1))
    a0 = psi[:, :, 0, :]
    a1 = psi[:, :, 1, :]

    m = np.asarray(matrices)
    if m.ndim == 2:
        m00, m01, m10, m11 = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    else:
        m00 = m[:, 0, 0, None, None]
        m01 = m[:, 0, 1, None, None]
        m10 = m[:, 1, 0, None, None]
        m11 = m[:, 1, 1, None, None]

    out = np.empty_like(psi)
    out[:, :, 0, :] = m00 * a0 + m01 * a1
    out[:, :, 1, :] = m10 * a0 + m11 * a1
    return out.reshape(batch, -1)


@lru_cache(maxsize=256)
def cnot_permutation(num_qubits: int, control: int, target: int) -> np.ndarray:
    """Index map with new[i] = old[perm[i]]; an involution."""
    idx = np.arange(2 ** num_qubits)
    control_bit = (idx >> (num_qubits - 1 - control)) & 1
    perm = idx ^ (control_bit << (num_qubits - 1 - target))
    perm.setflags(write=False)
    return perm


def apply_cnot_batch(states: np.ndarray, control: int, target: int, num_qubits: int) -> np.ndarray:
    return states[:, cnot_permutation(num_qubits, control, target)]


@lru_cache(maxsize=256)
def _z_string_diagonal(num_qubits: int, support: tuple) -> np.ndarray:
    idx = np.arange(2 ** num_qubits)
    parity = np.zeros_like(idx)
    for q in support:
        parity ^= (idx >> (num_qubits - 1 - q)) & 1
    diag = 1.0 - 2.0 * parity
    diag.setflags(write=False)
    return diag


def observable_diagonal(obs: Observable, num_qubits: int) -> np.ndarray:
    """±1 diagonal of a Z-string observable in the computational basis."""
    support = obs.support(num_qubits)
    for q in support:
        _check_qubit(q, num_qubits)
    return _z_string_diagonal(num_qubits, tuple(support))


def expectation_batch(states: np.ndarray, diagonal: np.ndarray) -> np.ndarray:
    probs = states.real ** 2 + states.imag ** 2
    return probs @ diagonal


def init_zero(num_qubits: int) -> StateVector:
    _check_num_qubits(num_qubits)
    amplitudes = np.zeros(2 ** num_qubits, dtype=np.complex128)
    amplitudes[0] = 1.0
    return StateVector(num_qubits, amplitudes)


def apply_rotation(state: StateVector, axis: Axis, qubit: int, angle: float) -> StateVector:
    _check_qubit(qubit, state.num_qubits)
    if not np.isfinite(angle):
        raise NumericError(f"rotation angle must be finite, got {angle}")
    out = apply_single_qubit_batch(
        state.amplitudes[None, :], rotation_matrices(axis, angle), qubit, state.num_qubits
    )
    return StateVector(state.num_qubits, out[0])


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    _check_qubit(control, state.num_qubits)
    _check_qubit(target, state.num_qubits)
    if control == target:
        raise QubitIndexError(f"control and target must differ, both are {control}")
    out = apply_cnot_batch(state.amplitudes[None, :], control, target, state.num_qubits)
    return StateVector(state.num_qubits, out[0])


def expectation(state: StateVector, obs: Observable) -> float:
    diag = observable_diagonal(obs, state.num_qubits)
    return float(expectation_batch(state.amplitudes[None, :], diag)[0])


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b> = Σ conj(a_i) b_i."""
    if a.num_qubits != b.num_qubits:
        raise ShapeError(f"cannot take the overlap of {a.num_qubits}- and {b.num_qubits}-qubit states")
    return complex(np.vdot(a.amplitudes, b.amplitudes))
