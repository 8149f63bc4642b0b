import numpy as np
import pytest

from src.config.env_manager import MAX_QUBITS_VAR
from src.core.errors import DomainError, QubitBudgetError
from src.features.circuits.ir import (
    Circuit, ControlledModularAdd, ControlledRotX, Hadamard, MultiControlledX, PauliX, PauliZ,
    RegisterLayout, concatenate, pattern_controls, primitive_cost,
)
from src.features.circuits.serialization import dumps, loads
from src.features.circuits.simulator import apply_to_state, classical_action, register_value, to_unitary


def _basis(index, dim):
    e = np.zeros(dim, dtype=complex)
    e[index] = 1.0
    return e


# --- Layout ---

def test_register_layout():
    layout = RegisterLayout([("a", 2), ("b", 0), ("c", 3)])
    assert layout.total_qubits == 5
    assert layout["c"].qubits == (2, 3, 4)
    assert layout.qubits("c", "a") == (2, 3, 4, 0, 1)
    assert "b" in layout and layout["b"].qubits == ()
    with pytest.raises(DomainError):
        RegisterLayout([("a", 1), ("a", 2)])
    with pytest.raises(DomainError):
        layout["missing"]


def test_pattern_controls_msb_first():
    assert pattern_controls((4, 5, 6), 0b101) == ((4, 1), (5, 0), (6, 1))
    with pytest.raises(DomainError):
        pattern_controls((0, 1), 4)


# --- Simulation ---

def test_hadamard_on_zero():
    circuit = Circuit(RegisterLayout.flat(1), (Hadamard(0),))
    np.testing.assert_allclose(apply_to_state(circuit, _basis(0, 2)), np.ones(2) / np.sqrt(2))


def test_states_must_be_normalized():
    circuit = Circuit(RegisterLayout.flat(1), (Hadamard(0),))
    with pytest.raises(DomainError):
        apply_to_state(circuit, np.array([1.0, 1.0]))
    with pytest.raises(DomainError):
        apply_to_state(circuit, np.column_stack([_basis(0, 2), 2 * _basis(1, 2)]))
    np.testing.assert_allclose(apply_to_state(circuit, np.eye(2)), np.array([[1, 1], [1, -1]]) / np.sqrt(2))


def test_qubit_zero_is_most_significant():
    circuit = Circuit(RegisterLayout.flat(3), (PauliX(0),))
    assert classical_action(circuit, [0]).tolist() == [4]
    np.testing.assert_allclose(apply_to_state(circuit, _basis(0, 8)), _basis(4, 8))


def test_x_unitary():
    U = to_unitary(Circuit(RegisterLayout.flat(1), (PauliX(0),)))
    np.testing.assert_array_equal(U, [[0, 1], [1, 0]])


def test_composition_applies_gates_in_order():
    layout = RegisterLayout.flat(1)
    hz = to_unitary(Circuit(layout, (Hadamard(0), PauliZ(0))))
    H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    Z = np.diag([1, -1])
    np.testing.assert_allclose(hz, Z @ H)
    np.testing.assert_allclose(to_unitary(Circuit(layout, (PauliZ(0), Hadamard(0)))), H @ Z)


def test_modular_increment_wraps():
    layout = RegisterLayout([("r", 3)])
    circuit = Circuit(layout, (ControlledModularAdd((), (0, 1, 2), 1, 8),))
    assert classical_action(circuit, range(8)).tolist() == [1, 2, 3, 4, 5, 6, 7, 0]
    back = circuit.then(circuit.inverse())
    assert classical_action(back, range(8)).tolist() == list(range(8))


def test_modular_add_leaves_values_beyond_modulus():
    circuit = Circuit(RegisterLayout.flat(3), (ControlledModularAdd((), (0, 1, 2), -1, 6),))
    assert classical_action(circuit, range(8)).tolist() == [5, 0, 1, 2, 3, 4, 6, 7]


def test_controlled_adder_respects_polarity():
    layout = RegisterLayout([("c", 1), ("r", 2)])
    gate = ControlledModularAdd(((0, 0),), (1, 2), 1, 4)
    images = classical_action(Circuit(layout, (gate,)), range(8)).tolist()
    assert images == [1, 2, 3, 0, 4, 5, 6, 7]


def test_multi_controlled_x_truth_table():
    gate = MultiControlledX(((0, 1), (1, 0)), 2)
    images = classical_action(Circuit(RegisterLayout.flat(3), (gate,)), range(8)).tolist()
    # only |10x> flips
    assert images == [0, 1, 2, 3, 5, 4, 6, 7]
    with pytest.raises(DomainError):
        MultiControlledX(((2, 1),), 2)


def test_controlled_rotation_table():
    gate = ControlledRotX((0,), ((1, np.pi),), 1)
    U = to_unitary(Circuit(RegisterLayout.flat(2), (gate,)))
    np.testing.assert_allclose(U[:2, :2], np.eye(2), atol=1e-15)
    np.testing.assert_allclose(U[2:, 2:], [[0, -1j], [-1j, 0]], atol=1e-15)
    np.testing.assert_allclose(U @ to_unitary(Circuit(RegisterLayout.flat(2), (gate.inverse(),))), np.eye(4), atol=1e-14)


def test_partial_columns_match_full_unitary(rng):
    layout = RegisterLayout.flat(3)
    circuit = Circuit(layout, (Hadamard(1), ControlledRotX((1,), ((1, 0.7),), 2), PauliX(0)))
    full = to_unitary(circuit)
    np.testing.assert_allclose(to_unitary(circuit, columns=[2, 5]), full[:, [2, 5]])
    np.testing.assert_allclose(full.conj().T @ full, np.eye(8), atol=1e-14)


def test_classical_action_rejects_superposing_gates():
    circuit = Circuit(RegisterLayout.flat(1), (Hadamard(0),))
    with pytest.raises(DomainError):
        classical_action(circuit, [0])


def test_register_value():
    index = np.array([0b10110])
    assert register_value(index, (1, 2, 3), 5).tolist() == [0b011]


# --- Qubit guard ---

def test_qubit_budget_from_environment(monkeypatch):
    monkeypatch.setenv(MAX_QUBITS_VAR, "3")
    circuit = Circuit(RegisterLayout.flat(4), (PauliX(0),))
    with pytest.raises(QubitBudgetError) as excinfo:
        to_unitary(circuit)
    assert excinfo.value.qubits == 4 and excinfo.value.limit == 3
    monkeypatch.setenv(MAX_QUBITS_VAR, "4")
    assert to_unitary(circuit).shape == (16, 16)


# --- Composition and costs ---

def test_inverse_reverses_and_inverts():
    layout = RegisterLayout.flat(3)
    add = ControlledModularAdd(((0, 1),), (1, 2), 1, 4)
    circuit = Circuit(layout, (PauliX(0), add))
    inverse = circuit.inverse()
    assert inverse.gates == (ControlledModularAdd(((0, 1),), (1, 2), 3, 4), PauliX(0))
    np.testing.assert_allclose(to_unitary(circuit.then(inverse)), np.eye(8))


def test_gate_counts_and_costs():
    layout = RegisterLayout.flat(4)
    circuit = concatenate(layout, [[Hadamard(0), PauliX(1)], Circuit(layout, (MultiControlledX(((0, 1), (1, 1)), 2),))])
    assert circuit.gate_counts() == {"Hadamard": 1, "MultiControlledX": 1, "PauliX": 1}
    assert primitive_cost(MultiControlledX(((0, 1), (1, 1), (2, 0)), 3)) == 5
    assert primitive_cost(ControlledModularAdd(((0, 1),), (1, 2, 3), 1, 8)) == 6
    assert circuit.primitive_cost() == 1 + 1 + 3


def test_then_rejects_other_layouts():
    with pytest.raises(DomainError):
        Circuit(RegisterLayout.flat(2)).then(Circuit(RegisterLayout.flat(3)))
    with pytest.raises(DomainError):
        Circuit(RegisterLayout.flat(2), (PauliX(2),))


# --- Serialization ---

def test_serialized_circuit_reloads_to_the_same_gates():
    layout = RegisterLayout([("d", 1), ("r", 3)])
    circuit = Circuit(layout, (
        Hadamard(1), PauliZ(0), MultiControlledX(((1, 0), (2, 1)), 0),
        ControlledRotX((1, 2, 3), ((0, 0.25), (5, 1.9)), 0),
        ControlledModularAdd(((0, 1),), (1, 2, 3), -1, 6),
    ))
    loaded = loads(dumps(circuit))
    assert loaded.layout == layout
    assert loaded.gates == circuit.gates


def test_loads_reports_line_number():
    with pytest.raises(DomainError, match="line 3"):
        loads("# register q 2\nH 0\nMCX 0:1 -> nope\n")
