import logging
from typing import Optional, Sequence

import numpy as np

from src.config.config_manager import config_manager
from src.config.env_manager import MAX_QUBITS_VAR, env_manager
from src.core.errors import DomainError, QubitBudgetError
from src.features.circuits.ir import (
    PERMUTATION_GATES, Circuit, ControlledModularAdd, ControlledRotX, Gate, Hadamard,
    MultiControlledX, PauliX, PauliZ,
)

logger = logging.getLogger(__name__)

STATE_NORM_ATOL = 1e-10

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _bit(index: np.ndarray, qubit: int, n: int) -> np.ndarray:
    return (index >> (n - 1 - qubit)) & 1


def register_value(index: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Value held by `qubits` (first qubit most significant) in each basis index."""
    value = np.zeros_like(index)
    for q in qubits:
        value = (value << 1) | _bit(index, q, n)
    return value


def with_register(index: np.ndarray, qubits: Sequence[int], values: np.ndarray, n: int) -> np.ndarray:
    """Basis indices with the register bits replaced by `values`."""
    width = len(qubits)
    result = index.copy()
    for t, q in enumerate(qubits):
        position = n - 1 - q
        bit = (values >> (width - 1 - t)) & 1
        result = (result & ~(1 << position)) | (bit << position)
    return result


def _controls_match(index: np.ndarray, controls, n: int) -> np.ndarray:
    match = np.ones(index.shape, dtype=bool)
    for q, polarity in controls:
        match &= _bit(index, q, n) == polarity
    return match


def _basis_map(gate: Gate, index: np.ndarray, n: int) -> np.ndarray:
    """Image of each basis index under a permutation gate."""
    if isinstance(gate, PauliX):
        return index ^ (1 << (n - 1 - gate.target))
    if isinstance(gate, MultiControlledX):
        flip = _controls_match(index, gate.controls, n).astype(index.dtype)
        return index ^ (flip << (n - 1 - gate.target))
    if isinstance(gate, ControlledModularAdd):
        value = register_value(index, gate.register, n)
        active = _controls_match(index, gate.controls, n) & (value < gate.modulus)
        shifted = np.where(active, (value + gate.addend) % gate.modulus, value)
        return with_register(index, gate.register, shifted, n)
    raise DomainError(f"{type(gate).__name__} is not a permutation gate")


def _apply_single(state: np.ndarray, matrix: np.ndarray, zero_rows: np.ndarray, position: int) -> None:
    one_rows = zero_rows | (1 << position)
    s0 = state[zero_rows].copy()
    s1 = state[one_rows].copy()
    state[zero_rows] = matrix[0, 0] * s0 + matrix[0, 1] * s1
    state[one_rows] = matrix[1, 0] * s0 + matrix[1, 1] * s1


def _apply_gate(state: np.ndarray, gate: Gate, index: np.ndarray, n: int) -> np.ndarray:
    if isinstance(gate, PERMUTATION_GATES):
        result = np.empty_like(state)
        result[_basis_map(gate, index, n)] = state
        return result
    if isinstance(gate, PauliZ):
        state[_bit(index, gate.target, n) == 1] *= -1
        return state
    position = n - 1 - gate.target
    zero_rows = index[_bit(index, gate.target, n) == 0]
    if isinstance(gate, Hadamard):
        _apply_single(state, _H, zero_rows, position)
        return state
    if isinstance(gate, ControlledRotX):
        values = register_value(zero_rows, gate.control_register, n)
        for value, angle in gate.angles:
            c, s = np.cos(angle / 2), np.sin(angle / 2)
            rx = np.array([[c, -1j * s], [-1j * s, c]])
            _apply_single(state, rx, zero_rows[values == value], position)
        return state
    raise DomainError(f"Unknown gate {gate!r}")


def apply_to_state(circuit: Circuit, state: np.ndarray) -> np.ndarray:
    """
    Applies the gates in order to a state vector, or to the columns of a (2^n, B) array.

    Returns:
        np.ndarray: New complex array; the input is not modified.

    Raises:
        DomainError: Wrong dimension, or a column that is not a unit vector.
    """
    n = circuit.total_qubits
    state = np.array(state, dtype=complex)
    if state.shape[0] != 1 << n:
        raise DomainError(f"State of dimension {state.shape[0]} does not match {n} qubits")
    norms = np.linalg.norm(state, axis=0)
    if not np.allclose(norms, 1.0, rtol=0.0, atol=STATE_NORM_ATOL):
        raise DomainError(f"States must have unit norm, got norms in [{np.min(norms):.6g}, {np.max(norms):.6g}]")
    index = np.arange(1 << n, dtype=np.int64)
    for gate in circuit.gates:
        state = _apply_gate(state, gate, index, n)
    return state


def dense_qubit_limit() -> int:
    configured = config_manager.get_int("CIRCUITS", "max_dense_qubits", fallback=12)
    return env_manager.get_int(MAX_QUBITS_VAR, fallback=configured)


def to_unitary(circuit: Circuit, columns: Optional[Sequence[int]] = None) -> np.ndarray:
    """
    Dense unitary of the circuit, or only the requested columns.

    Raises:
        QubitBudgetError: The circuit is wider than the dense realization limit.
    """
    n = circuit.total_qubits
    limit = dense_qubit_limit()
    if n > limit:
        raise QubitBudgetError(n, limit)
    dim = 1 << n
    columns = np.arange(dim) if columns is None else np.asarray(columns, dtype=np.int64)
    if columns.size and (columns.min() < 0 or columns.max() >= dim):
        raise DomainError(f"Requested columns outside [0, {dim})")
    basis = np.zeros((dim, columns.size), dtype=complex)
    basis[columns, np.arange(columns.size)] = 1.0
    logger.debug(f"Realizing {columns.size} of {dim} columns for a {n}-qubit circuit with {len(circuit)} gates")
    return apply_to_state(circuit, basis)


def classical_action(circuit: Circuit, basis_indices: Sequence[int]) -> np.ndarray:
    """Images of basis states under a circuit built only from permutation gates."""
    n = circuit.total_qubits
    index = np.asarray(basis_indices, dtype=np.int64)
    if index.size and (index.min() < 0 or index.max() >= 1 << n):
        raise DomainError(f"Basis indices outside [0, {1 << n})")
    for gate in circuit.gates:
        index = _basis_map(gate, index, n)
    return index
