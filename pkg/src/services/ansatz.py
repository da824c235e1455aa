"""
Data-reloading circuit layouts and their evaluation.

An AnsatzSpec compiles to a flat tuple of gate ops. Every public entry point
runs the ops over a batch of (θ, x) rows so that shifted-parameter circuits,
training grids and kernel rows share one vectorised simulation path.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Optional, Tuple

import numpy as np

from ..config.settings import settings
from ..models.circuit import (
    AnsatzSpec,
    Axis,
    FrequencySpectrum,
    GateSlot,
    Observable,
    ParamVector,
    SlotRole,
)
from ..models.dataset import as_feature_matrix
from ..models.errors import ConfigurationError, NumericError, ShapeError, UnsupportedError
from ..models.state import StateVector
from ..utils.parallel import chunk_ranges, map_chunks
from .statevector import (
    _check_num_qubits,
    apply_cnot_batch,
    apply_single_qubit_batch,
    expectation_batch,
    observable_diagonal,
    pauli_matrix,
    rotation_matrices,
)

logger = logging.getLogger(__name__)

Method = Literal["parameter_shift", "adjoint"]

_SHIFT = math.pi / 2


# ---------------------------------------------------------------------------
# layouts

def curve_layout(num_qubits: int = 4, num_layers: int = 20, output_scale: float = 1.0,
                 second_axis: Axis = Axis.Y) -> AnsatzSpec:
    """
    Per layer: RY(θ) on every qubit, CNOT chain, R_second_axis(θ) on every
    qubit, RX(x) on every qubit.

    With second_axis Y every gate but RX(x) is real, so ψ(-x) = ψ(x)* and any
    Z-string readout obeys f(x) = f(2π - x). Such a model only spans cosines
    and cannot fit odd targets. second_axis Z breaks that symmetry without
    changing the frequency spectrum or the parameter count.
    """
    second_axis = Axis(second_axis)
    qubits = range(num_qubits)
    template = (
        [GateSlot.trainable(Axis.Y, q) for q in qubits]
        + [GateSlot.cnot(q, q + 1) for q in range(num_qubits - 1)]
        + [GateSlot.trainable(second_axis, q) for q in qubits]
        + [GateSlot.encoding(Axis.X, q) for q in qubits]
    )
    suffix = "" if second_axis == Axis.Y else f"-r{second_axis.value.lower()}"
    return AnsatzSpec(
        name=f"curve-{num_qubits}x{num_layers}{suffix}",
        num_qubits=num_qubits,
        num_layers=num_layers,
        feature_dim=1,
        layer_template=tuple(template),
        observable=Observable.full_z(),
        output_scale=output_scale,
    )


def iris_layout(num_cycles: int = 6) -> AnsatzSpec:
    """
    Per cycle c: RY(x[2c mod 4]) on q0 and RY(x[(2c+1) mod 4]) on q1, RY(θ) on each qubit, CNOT(0, 1).
    Six cycles walk all four features through the encoding gates.
    """
    template = (
        GateSlot.encoding(Axis.Y, 0, feature_index=0, feature_stride=2),
        GateSlot.encoding(Axis.Y, 1, feature_index=1, feature_stride=2),
        GateSlot.trainable(Axis.Y, 0),
        GateSlot.trainable(Axis.Y, 1),
        GateSlot.cnot(0, 1),
    )
    return AnsatzSpec(
        name=f"iris-2x{num_cycles}",
        num_qubits=2,
        num_layers=num_cycles,
        feature_dim=4,
        layer_template=template,
        observable=Observable.full_z(),
    )


def dlp_layout(prime: int = 67, num_qubits: int = 8, num_layers: int = 24) -> AnsatzSpec:
    """Per layer: RY(θ) on every qubit, CNOT ring, RX(2πx/p) on every qubit."""
    qubits = range(num_qubits)
    ring = [GateSlot.cnot(q, (q + 1) % num_qubits) for q in qubits] if num_qubits > 1 else []
    template = (
        [GateSlot.trainable(Axis.Y, q) for q in qubits]
        + ring
        + [GateSlot.encoding(Axis.X, q, feature_scale=2 * math.pi / prime) for q in qubits]
    )
    return AnsatzSpec(
        name=f"dlp-{num_qubits}x{num_layers}",
        num_qubits=num_qubits,
        num_layers=num_layers,
        feature_dim=1,
        layer_template=tuple(template),
        observable=Observable.full_z(),
    )


_PRESETS = {
    "curve-4x20": lambda **kw: curve_layout(4, 20, **kw),
    "curve-4x20-rz": lambda **kw: curve_layout(4, 20, second_axis=Axis.Z, **kw),
    "iris-2x6": lambda **kw: iris_layout(6, **kw),
    "dlp-8x24": lambda **kw: dlp_layout(num_qubits=8, num_layers=24, **kw),
}


def preset(name: str, **overrides) -> AnsatzSpec:
    """
    Named layouts. `overrides` are forwarded to the layout builder
    (`output_scale` for the curve layouts, `prime` for dlp-8x24).
    """
    if name not in _PRESETS:
        raise ConfigurationError(f"unknown ansatz preset '{name}'. Available: {sorted(_PRESETS)}")
    try:
        return _PRESETS[name](**overrides)
    except TypeError as e:
        raise ConfigurationError(f"bad overrides for preset '{name}': {e}")


def with_output_scale(spec: AnsatzSpec, output_scale: float) -> AnsatzSpec:
    return spec.model_copy(update={"output_scale": float(output_scale)})


# ---------------------------------------------------------------------------
# compilation

@dataclass(frozen=True)
class GateOp:
    role: SlotRole
    axis: Optional[Axis]
    qubits: Tuple[int, ...]
    param_index: int = -1
    feature_index: int = -1
    feature_scale: float = 1.0


@lru_cache(maxsize=64)
def compile_ops(spec: AnsatzSpec) -> Tuple[GateOp, ...]:
    """Unroll the layer template into the executed gate sequence."""
    _check_num_qubits(spec.num_qubits)
    ops = []
    p = 0
    for layer in range(spec.num_layers):
        for slot in spec.layer_template:
            if slot.role == SlotRole.TRAINABLE:
                ops.append(GateOp(slot.role, slot.axis, slot.qubits, param_index=p))
                p += 1
            elif slot.role == SlotRole.ENCODING:
                feature = (slot.feature_index + layer * slot.feature_stride) % spec.feature_dim
                ops.append(GateOp(slot.role, slot.axis, slot.qubits,
                                  feature_index=feature, feature_scale=slot.feature_scale))
            else:
                ops.append(GateOp(slot.role, None, slot.qubits))
    if spec.trailing_trainable_block:
        for slot in spec.layer_template:
            if slot.role == SlotRole.TRAINABLE:
                ops.append(GateOp(slot.role, slot.axis, slot.qubits, param_index=p))
                p += 1
    return tuple(ops)


def _op_angles(op: GateOp, thetas: np.ndarray, xs: np.ndarray) -> np.ndarray:
    if op.role == SlotRole.TRAINABLE:
        return thetas[:, op.param_index]
    return op.feature_scale * xs[:, op.feature_index]


def _apply_op(spec: AnsatzSpec, op: GateOp, states: np.ndarray, thetas: np.ndarray,
              xs: np.ndarray, inverse: bool = False) -> np.ndarray:
    if op.role == SlotRole.ENTANGLER:
        return apply_cnot_batch(states, op.qubits[0], op.qubits[1], spec.num_qubits)
    angles = _op_angles(op, thetas, xs)
    if inverse:
        angles = -angles
    return apply_single_qubit_batch(states, rotation_matrices(op.axis, angles), op.qubits[0], spec.num_qubits)


def run_circuit(spec: AnsatzSpec, thetas: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Final states for each row pair (thetas[b], xs[b]); returns (B, 2^n)."""
    batch = thetas.shape[0]
    states = np.zeros((batch, spec.dimension), dtype=np.complex128)
    states[:, 0] = 1.0
    for op in compile_ops(spec):
        states = _apply_op(spec, op, states, thetas, xs)
    return states


def _rows_per_chunk(spec: AnsatzSpec) -> int:
    return max(1, settings.STATE_BATCH_AMPLITUDES // spec.dimension)


# ---------------------------------------------------------------------------
# argument handling

def _theta(spec: AnsatzSpec, params) -> np.ndarray:
    values = params.values if isinstance(params, ParamVector) else np.asarray(params, dtype=np.float64).reshape(-1)
    if values.shape[0] != spec.parameter_count:
        raise ShapeError(f"{spec.name} expects {spec.parameter_count} parameters, got {values.shape[0]}")
    if not np.all(np.isfinite(values)):
        raise NumericError("parameters must be finite")
    return values


def _inputs(spec: AnsatzSpec, inputs) -> np.ndarray:
    x = as_feature_matrix(inputs, feature_dim=spec.feature_dim)
    if not np.all(np.isfinite(x)):
        raise NumericError("inputs must be finite")
    return x


def random_params(spec: AnsatzSpec, rng: np.random.Generator,
                  low: float = 0.0, high: float = 2 * math.pi) -> ParamVector:
    return ParamVector(rng.uniform(low, high, size=spec.parameter_count))


# ---------------------------------------------------------------------------
# evaluation

def prepare_states(spec: AnsatzSpec, params, inputs) -> np.ndarray:
    """Pre-measurement states for every input row, shape (N, 2^n)."""
    theta = _theta(spec, params)
    x = _inputs(spec, inputs)

    def _chunk(start: int, stop: int) -> np.ndarray:
        return run_circuit(spec, np.broadcast_to(theta, (stop - start, theta.shape[0])), x[start:stop])

    parts = map_chunks(_chunk, chunk_ranges(x.shape[0], _rows_per_chunk(spec)))
    return np.concatenate(parts, axis=0) if parts else np.zeros((0, spec.dimension), dtype=np.complex128)


def prepare_state(spec: AnsatzSpec, params, x) -> StateVector:
    x = as_feature_matrix(x, feature_dim=spec.feature_dim)
    if x.shape[0] != 1:
        raise ShapeError("prepare_state takes a single feature vector")
    return StateVector(spec.num_qubits, prepare_states(spec, params, x)[0])


def evaluate_batch(spec: AnsatzSpec, params, inputs) -> np.ndarray:
    """output_scale * <psi(x, θ)|M|psi(x, θ)> for every input row."""
    states = prepare_states(spec, params, inputs)
    return spec.output_scale * expectation_batch(states, observable_diagonal(spec.observable, spec.num_qubits))


def evaluate(spec: AnsatzSpec, params, x) -> float:
    x = as_feature_matrix(x, feature_dim=spec.feature_dim)
    if x.shape[0] != 1:
        raise ShapeError("evaluate takes a single feature vector")
    return float(evaluate_batch(spec, params, x)[0])


# ---------------------------------------------------------------------------
# differentiation

def _shift_table(theta: np.ndarray) -> np.ndarray:
    """Rows 2l and 2l+1 hold θ with θ_l shifted by +π/2 and -π/2."""
    n = theta.shape[0]
    table = np.tile(theta, (2 * n, 1))
    idx = np.arange(n)
    table[2 * idx, idx] += _SHIFT
    table[2 * idx + 1, idx] -= _SHIFT
    return table


def _parameter_shift_jacobian(spec: AnsatzSpec, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    n_params = theta.shape[0]
    n_points = x.shape[0]
    if n_params == 0:
        return np.zeros((n_points, 0))
    table = _shift_table(theta)
    rows = 2 * n_params
    diag = observable_diagonal(spec.observable, spec.num_qubits)

    # flattened work item j -> (point j // rows, shift row j % rows)
    def _chunk(start: int, stop: int) -> np.ndarray:
        j = np.arange(start, stop)
        states = run_circuit(spec, table[j % rows], x[j // rows])
        return expectation_batch(states, diag)

    values = np.concatenate(map_chunks(_chunk, chunk_ranges(n_points * rows, _rows_per_chunk(spec))))
    values = values.reshape(n_points, n_params, 2)
    return spec.output_scale * 0.5 * (values[..., 0] - values[..., 1])


def _adjoint_sweep(spec: AnsatzSpec, theta: np.ndarray, x: np.ndarray,
                   states: np.ndarray, bras: np.ndarray) -> np.ndarray:
    """
    2 Re <b_i | d psi_i / d θ_l> for every row, by one backward pass.

    With psi_k the state after trainable gate k and lam_k the bra pulled back
    to the same point, the derivative of exp(-i θ A / 2) contributes
    Im <lam_k | A psi_k>.
    """
    n_points = x.shape[0]
    out = np.zeros((n_points, theta.shape[0]))
    thetas = np.broadcast_to(theta, (n_points, theta.shape[0]))
    psi = states
    lam = bras
    for op in reversed(compile_ops(spec)):
        if op.role == SlotRole.TRAINABLE:
            a_psi = apply_single_qubit_batch(psi, pauli_matrix(op.axis), op.qubits[0], spec.num_qubits)
            out[:, op.param_index] += np.einsum("bi,bi->b", lam.conj(), a_psi).imag
        psi = _apply_op(spec, op, psi, thetas, x, inverse=True)
        lam = _apply_op(spec, op, lam, thetas, x, inverse=True)
    return out


def state_vjp(spec: AnsatzSpec, params, inputs, bras: np.ndarray) -> np.ndarray:
    """(N, P) matrix of 2 Re <bras[i] | d psi(x_i) / d θ_l>."""
    theta = _theta(spec, params)
    x = _inputs(spec, inputs)
    bras = np.asarray(bras, dtype=np.complex128)
    if bras.shape != (x.shape[0], spec.dimension):
        raise ShapeError(f"bras must have shape {(x.shape[0], spec.dimension)}, got {bras.shape}")

    def _chunk(start: int, stop: int) -> np.ndarray:
        xs = x[start:stop]
        states = run_circuit(spec, np.broadcast_to(theta, (stop - start, theta.shape[0])), xs)
        return _adjoint_sweep(spec, theta, xs, states, bras[start:stop])

    # the sweep holds two state stacks per row
    parts = map_chunks(_chunk, chunk_ranges(x.shape[0], max(1, _rows_per_chunk(spec) // 2)))
    return np.concatenate(parts, axis=0) if parts else np.zeros((0, theta.shape[0]))


def _adjoint_value_and_jacobian(spec: AnsatzSpec, theta: np.ndarray, x: np.ndarray):
    diag = observable_diagonal(spec.observable, spec.num_qubits)

    def _chunk(start: int, stop: int):
        xs = x[start:stop]
        states = run_circuit(spec, np.broadcast_to(theta, (stop - start, theta.shape[0])), xs)
        values = expectation_batch(states, diag)
        jac = _adjoint_sweep(spec, theta, xs, states, states * diag)
        return values, jac

    parts = map_chunks(_chunk, chunk_ranges(x.shape[0], max(1, _rows_per_chunk(spec) // 2)))
    values = np.concatenate([p[0] for p in parts])
    jac = np.concatenate([p[1] for p in parts], axis=0)
    return spec.output_scale * values, spec.output_scale * jac


def value_and_jacobian(spec: AnsatzSpec, params, inputs, method: Method = "parameter_shift"):
    """Outputs f(x_i) and the (N, P) Jacobian df(x_i)/dθ_l in one call."""
    theta = _theta(spec, params)
    x = _inputs(spec, inputs)
    if x.shape[0] == 0:
        return np.zeros(0), np.zeros((0, theta.shape[0]))
    if method == "adjoint":
        values, jac = _adjoint_value_and_jacobian(spec, theta, x)
    elif method == "parameter_shift":
        values = evaluate_batch(spec, theta, x)
        jac = _parameter_shift_jacobian(spec, theta, x)
    else:
        raise ConfigurationError(f"unknown differentiation method '{method}'")
    if not np.all(np.isfinite(jac)):
        raise NumericError("non-finite circuit gradient")
    return values, jac


def jacobian(spec: AnsatzSpec, params, inputs, method: Method = "parameter_shift") -> np.ndarray:
    return value_and_jacobian(spec, params, inputs, method)[1]


def gradient(spec: AnsatzSpec, params, x) -> np.ndarray:
    """Parameter-shift gradient of f at a single input: [f(θ_l + π/2) - f(θ_l - π/2)] / 2."""
    x = as_feature_matrix(x, feature_dim=spec.feature_dim)
    if x.shape[0] != 1:
        raise ShapeError("gradient takes a single feature vector")
    return jacobian(spec, params, x, method="parameter_shift")[0]


# ---------------------------------------------------------------------------
# spectrum

def spectrum(spec: AnsatzSpec) -> FrequencySpectrum:
    """Ω = {-E, ..., E} with E the number of executed encoding gates."""
    encodings = [op for op in compile_ops(spec) if op.role == SlotRole.ENCODING]
    features = {op.feature_index for op in encodings}
    if len(features) > 1:
        raise UnsupportedError(f"{spec.name} encodes {len(features)} features; spectrum needs a single feature")
    if any(op.feature_scale != 1.0 for op in encodings):
        raise UnsupportedError(f"{spec.name} uses non-unit feature scales; spectrum needs unit scale")
    return FrequencySpectrum(max_frequency=len(encodings))
