"""Gate-level circuit representation.

Qubit 0 is the most significant bit of a basis-state index, and a register's
first qubit is the most significant bit of its value.
"""
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple, Union

from src.core.errors import DomainError

logger = logging.getLogger(__name__)

Control = Tuple[int, int]


@dataclass(frozen=True)
class Register:
    name: str
    start: int
    width: int

    @property
    def qubits(self) -> Tuple[int, ...]:
        return tuple(range(self.start, self.start + self.width))


class RegisterLayout:
    """Named, contiguous registers in declaration order."""

    def __init__(self, widths: Sequence[Tuple[str, int]]):
        registers = []
        start = 0
        for name, width in widths:
            if not isinstance(width, int) or width < 0:
                raise DomainError(f"Register {name!r} needs a nonnegative integer width, got {width!r}")
            registers.append(Register(name, start, width))
            start += width
        names = [r.name for r in registers]
        if len(set(names)) != len(names):
            raise DomainError(f"Duplicate register names in {names}")
        self.registers: Tuple[Register, ...] = tuple(registers)
        self.total_qubits = start
        self._by_name = {r.name: r for r in registers}

    def __getitem__(self, name: str) -> Register:
        try:
            return self._by_name[name]
        except KeyError:
            raise DomainError(f"Layout has no register {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def qubits(self, *names: str) -> Tuple[int, ...]:
        """Qubits of the named registers concatenated in the given order."""
        return tuple(q for name in names for q in self[name].qubits)

    def widths(self) -> Dict[str, int]:
        return {r.name: r.width for r in self.registers}

    def __eq__(self, other):
        return isinstance(other, RegisterLayout) and self.registers == other.registers

    def __repr__(self):
        return f"RegisterLayout({', '.join(f'{r.name}={r.width}' for r in self.registers)})"

    @classmethod
    def flat(cls, n_qubits: int) -> "RegisterLayout":
        return cls([("q", n_qubits)])


def pattern_controls(qubits: Sequence[int], value: int) -> Tuple[Control, ...]:
    """Controls requiring the register `qubits` (first qubit most significant) to hold `value`."""
    width = len(qubits)
    if not 0 <= value < 1 << width:
        raise DomainError(f"Value {value} does not fit a {width}-qubit register")
    return tuple((q, (value >> (width - 1 - t)) & 1) for t, q in enumerate(qubits))


# --- Gates ---

def _check_disjoint(targets: Iterable[int], controls: Iterable[int]):
    targets = list(targets)
    controls = list(controls)
    if len(set(controls)) != len(controls):
        raise DomainError(f"Repeated control qubit in {controls}")
    if len(set(targets)) != len(targets):
        raise DomainError(f"Repeated target qubit in {targets}")
    overlap = set(targets) & set(controls)
    if overlap:
        raise DomainError(f"Qubits {sorted(overlap)} are both target and control")


@dataclass(frozen=True)
class PauliX:
    target: int

    def qubits(self) -> Tuple[int, ...]:
        return (self.target,)

    def inverse(self) -> "PauliX":
        return self


@dataclass(frozen=True)
class Hadamard:
    target: int

    def qubits(self) -> Tuple[int, ...]:
        return (self.target,)

    def inverse(self) -> "Hadamard":
        return self


@dataclass(frozen=True)
class PauliZ:
    target: int

    def qubits(self) -> Tuple[int, ...]:
        return (self.target,)

    def inverse(self) -> "PauliZ":
        return self


@dataclass(frozen=True)
class MultiControlledX:
    """X on `target` when every (qubit, polarity) control matches."""

    controls: Tuple[Control, ...]
    target: int

    def __post_init__(self):
        object.__setattr__(self, "controls", tuple((int(q), int(p)) for q, p in self.controls))
        if any(p not in (0, 1) for _, p in self.controls):
            raise DomainError(f"Control polarities must be 0 or 1: {self.controls}")
        _check_disjoint([self.target], [q for q, _ in self.controls])

    def qubits(self) -> Tuple[int, ...]:
        return tuple(q for q, _ in self.controls) + (self.target,)

    def inverse(self) -> "MultiControlledX":
        return self


@dataclass(frozen=True)
class ControlledRotX:
    """R_X(angle[v]) on `target` when the control register holds v; identity for values not in the table."""

    control_register: Tuple[int, ...]
    angles: Tuple[Tuple[int, float], ...]
    target: int

    def __post_init__(self):
        table = tuple(sorted((int(v), float(a)) for v, a in dict(self.angles).items()))
        object.__setattr__(self, "control_register", tuple(self.control_register))
        object.__setattr__(self, "angles", table)
        _check_disjoint([self.target], self.control_register)
        limit = 1 << len(self.control_register)
        for value, angle in table:
            if not 0 <= value < limit:
                raise DomainError(f"Rotation table key {value} outside a {len(self.control_register)}-qubit register")
            if not math.isfinite(angle):
                raise DomainError(f"Rotation angle for value {value} is not finite")

    def qubits(self) -> Tuple[int, ...]:
        return self.control_register + (self.target,)

    def angle_map(self) -> Dict[int, float]:
        return dict(self.angles)

    def inverse(self) -> "ControlledRotX":
        return ControlledRotX(self.control_register, tuple((v, -a) for v, a in self.angles), self.target)


@dataclass(frozen=True)
class ControlledModularAdd:
    """register -> (register + addend) mod modulus when the controls match.

    Register values at or above the modulus are left alone.
    """

    controls: Tuple[Control, ...]
    register: Tuple[int, ...]
    addend: int
    modulus: int

    def __post_init__(self):
        object.__setattr__(self, "controls", tuple((int(q), int(p)) for q, p in self.controls))
        object.__setattr__(self, "register", tuple(self.register))
        if not 1 <= self.modulus <= 1 << len(self.register):
            raise DomainError(f"Modulus {self.modulus} does not fit a {len(self.register)}-qubit register")
        if any(p not in (0, 1) for _, p in self.controls):
            raise DomainError(f"Control polarities must be 0 or 1: {self.controls}")
        object.__setattr__(self, "addend", int(self.addend) % self.modulus)
        _check_disjoint(self.register, [q for q, _ in self.controls])

    def qubits(self) -> Tuple[int, ...]:
        return tuple(q for q, _ in self.controls) + self.register

    def inverse(self) -> "ControlledModularAdd":
        return ControlledModularAdd(self.controls, self.register, -self.addend, self.modulus)


Gate = Union[PauliX, Hadamard, PauliZ, MultiControlledX, ControlledRotX, ControlledModularAdd]
PERMUTATION_GATES = (PauliX, MultiControlledX, ControlledModularAdd)


def primitive_cost(gate: Gate) -> int:
    """Unit cost model: 1 per single-qubit gate, 2c - 1 per c-controlled X,
    w(c + 1) per c-controlled adder on w qubits, T * w per w-qubit rotation table of T entries."""
    if isinstance(gate, (PauliX, Hadamard, PauliZ)):
        return 1
    if isinstance(gate, MultiControlledX):
        return max(2 * len(gate.controls) - 1, 1)
    if isinstance(gate, ControlledModularAdd):
        return len(gate.register) * (len(gate.controls) + 1)
    if isinstance(gate, ControlledRotX):
        return len(gate.angles) * max(len(gate.control_register), 1)
    raise DomainError(f"Unknown gate {gate!r}")


# --- Circuits ---

@dataclass(frozen=True)
class Circuit:
    layout: RegisterLayout
    gates: Tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for gate in self.gates:
            for q in gate.qubits():
                if not 0 <= q < self.layout.total_qubits:
                    raise DomainError(f"Gate {gate!r} touches qubit {q} outside a {self.layout.total_qubits}-qubit layout")

    @property
    def total_qubits(self) -> int:
        return self.layout.total_qubits

    def __len__(self) -> int:
        return len(self.gates)

    def then(self, other: Union["Circuit", Iterable[Gate]]) -> "Circuit":
        """This circuit followed by `other`."""
        if isinstance(other, Circuit):
            if other.layout != self.layout:
                raise DomainError("Cannot compose circuits on different layouts")
            other = other.gates
        return Circuit(self.layout, self.gates + tuple(other))

    def inverse(self) -> "Circuit":
        return Circuit(self.layout, tuple(g.inverse() for g in reversed(self.gates)))

    def gate_counts(self) -> Dict[str, int]:
        return dict(sorted(Counter(type(g).__name__ for g in self.gates).items()))

    def primitive_cost(self) -> int:
        return sum(primitive_cost(g) for g in self.gates)


def inverse(circuit: Circuit) -> Circuit:
    return circuit.inverse()


def gate_counts(circuit: Circuit) -> Dict[str, int]:
    return circuit.gate_counts()


def concatenate(layout: RegisterLayout, parts: Iterable[Union[Circuit, List[Gate]]]) -> Circuit:
    gates: List[Gate] = []
    for part in parts:
        gates.extend(part.gates if isinstance(part, Circuit) else part)
    return Circuit(layout, tuple(gates))
