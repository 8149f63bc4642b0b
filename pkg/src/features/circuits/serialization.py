import logging
from typing import List, Tuple

from src.core.errors import DomainError
from src.features.circuits.ir import (
    Circuit, ControlledModularAdd, ControlledRotX, Gate, Hadamard, MultiControlledX, PauliX,
    PauliZ, RegisterLayout,
)

logger = logging.getLogger(__name__)

# One gate per line:
#   X q | H q | Z q
#   MCX q:p,q:p -> t
#   RX c,c,c -> t | v:angle,v:angle
#   ADD q:p,q:p | r,r,r | addend mod m
# Header lines "# register <name> <width>" carry the layout.


def _controls(controls) -> str:
    return ",".join(f"{q}:{p}" for q, p in controls) or "-"


def _parse_controls(text: str) -> Tuple[Tuple[int, int], ...]:
    if text == "-":
        return ()
    return tuple(tuple(int(v) for v in item.split(":")) for item in text.split(","))


def _parse_qubits(text: str) -> Tuple[int, ...]:
    return () if text == "-" else tuple(int(v) for v in text.split(","))


def gate_to_line(gate: Gate) -> str:
    if isinstance(gate, PauliX):
        return f"X {gate.target}"
    if isinstance(gate, Hadamard):
        return f"H {gate.target}"
    if isinstance(gate, PauliZ):
        return f"Z {gate.target}"
    if isinstance(gate, MultiControlledX):
        return f"MCX {_controls(gate.controls)} -> {gate.target}"
    if isinstance(gate, ControlledRotX):
        table = ",".join(f"{v}:{a!r}" for v, a in gate.angles) or "-"
        register = ",".join(str(q) for q in gate.control_register) or "-"
        return f"RX {register} -> {gate.target} | {table}"
    if isinstance(gate, ControlledModularAdd):
        register = ",".join(str(q) for q in gate.register)
        return f"ADD {_controls(gate.controls)} | {register} | {gate.addend} mod {gate.modulus}"
    raise DomainError(f"Cannot serialize {gate!r}")


def line_to_gate(line: str) -> Gate:
    kind, _, rest = line.partition(" ")
    rest = rest.strip()
    if kind == "X":
        return PauliX(int(rest))
    if kind == "H":
        return Hadamard(int(rest))
    if kind == "Z":
        return PauliZ(int(rest))
    if kind == "MCX":
        controls, target = rest.split("->")
        return MultiControlledX(_parse_controls(controls.strip()), int(target))
    if kind == "RX":
        head, table = rest.split("|")
        register, target = head.split("->")
        angles = () if table.strip() == "-" else tuple(
            (int(v), float(a)) for v, a in (item.split(":") for item in table.strip().split(",")))
        return ControlledRotX(_parse_qubits(register.strip()), angles, int(target))
    if kind == "ADD":
        controls, register, arithmetic = (part.strip() for part in rest.split("|"))
        addend, _, modulus = arithmetic.partition(" mod ")
        return ControlledModularAdd(_parse_controls(controls), _parse_qubits(register), int(addend), int(modulus))
    raise DomainError(f"Unknown gate kind {kind!r}")


def dumps(circuit: Circuit) -> str:
    lines: List[str] = [f"# register {r.name} {r.width}" for r in circuit.layout.registers]
    lines.extend(gate_to_line(g) for g in circuit.gates)
    return "\n".join(lines) + "\n"


def loads(text: str) -> Circuit:
    widths = []
    gates = []
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 3 and parts[0] == "register":
                widths.append((parts[1], int(parts[2])))
            continue
        try:
            gates.append(line_to_gate(line))
        except (ValueError, DomainError) as e:
            raise DomainError(f"line {line_number}: cannot parse gate '{line}': {e}") from e
    circuit = Circuit(RegisterLayout(widths), tuple(gates))
    logger.debug(f"Parsed circuit with {len(gates)} gates on {circuit.total_qubits} qubits")
    return circuit
