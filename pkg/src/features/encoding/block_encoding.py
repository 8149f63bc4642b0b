import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.config.config_manager import config_manager
from src.core.errors import VerificationFailure
from src.features.circuits.ir import Circuit, Hadamard, concatenate
from src.features.circuits.simulator import to_unitary
from src.features.encoding.labels import LabelScheme
from src.features.encoding.oracles import (
    data_rotation, o_c_circuit, o_rg_circuit, o_t_circuit, value_lookup_circuit,
)
from src.features.operator.assembly import ScaledOperator
from src.utils.fitting import nonnegative_fit

logger = logging.getLogger(__name__)

AUDIT_RESIDUAL_LIMIT = 0.2


def _hadamards(scheme: LabelScheme) -> Circuit:
    s_qubits = scheme.layout.qubits("s_hi", "s_mid", "s_else", "s_lo")
    return Circuit(scheme.layout, tuple(Hadamard(q) for q in s_qubits))


def assemble_block_encoding(scheme: LabelScheme, include_value_lookup: bool = True) -> Circuit:
    """
    Full block encoding of G' in the order:

    Hadamards on the sparsity register, the +1 adders (inverse column
    oracle), the out-of-range oracle with control-D', the value lookup, Z and
    the value-controlled rotation on the data qubit, the transposition oracle,
    the -1 adders (column oracle) and the closing Hadamards.

    The block with every ancilla at |0> is G' / (2D).
    """
    hadamards = _hadamards(scheme)
    column = o_c_circuit(scheme)
    parts = [hadamards, column.inverse(), o_rg_circuit(scheme)]
    if include_value_lookup:
        parts.append(value_lookup_circuit(scheme))
    parts += [data_rotation(scheme), o_t_circuit(scheme), column, hadamards]
    circuit = concatenate(scheme.layout, parts)
    logger.info(f"Block encoding: {circuit.total_qubits} qubits, {len(circuit)} gates {circuit.gate_counts()}")
    return circuit


@dataclass
class BlockEncodingResult:
    circuit: Circuit
    N: int
    D_prime: int
    D: int
    measured_subnorm: float
    expected_subnorm: float
    max_block_error: float
    hermiticity_error: float
    unitarity_error: Optional[float]
    qubit_count: int
    gate_counts: Dict[str, int]

    def to_report(self) -> Dict[str, object]:
        return {
            "N": self.N, "D_prime": self.D_prime, "D": self.D, "qubits": self.qubit_count,
            "gate_counts": self.gate_counts, "measured_subnorm": self.measured_subnorm,
            "expected_subnorm": self.expected_subnorm, "max_block_error": self.max_block_error,
            "hermiticity_error": self.hermiticity_error, "unitarity_error": self.unitarity_error,
        }


def verify_block(circuit: Circuit, scaled: ScaledOperator, scheme: Optional[LabelScheme] = None,
                 tolerance: Optional[float] = None, check_unitarity: bool = False) -> BlockEncodingResult:
    """
    Brute-force check that the all-ancillas-zero block of the circuit is proportional to G'.

    Only the N input columns of the block are realized unless `check_unitarity`
    asks for the full unitary. The scalar c minimizing ||c * block - G'|| is
    fitted, never assumed.

    Args:
        circuit: Circuit whose top-left N x N block should encode G'.
        scaled: The rescaled operator.
        scheme: Label scheme, used for the expected constant 2D and report sizes.
        tolerance: Largest accepted max |c * block - G'|; [NUMERICS] block_tolerance by default.
        check_unitarity: Also realize the full unitary and report max |U U^dagger - I|.

    Returns:
        BlockEncodingResult: Fitted subnormalization, residuals and gate counts.

    Raises:
        VerificationFailure: The residual exceeds the tolerance; carries the worst entry.
    """
    tolerance = config_manager.get_float("NUMERICS", "block_tolerance", fallback=1e-8) if tolerance is None else tolerance
    N = scaled.grid.N
    target = scaled.op.to_dense()
    if check_unitarity:
        unitary = to_unitary(circuit)
        dim = unitary.shape[0]
        unitarity_error = float(np.max(np.abs(unitary @ unitary.conj().T - np.eye(dim))))
        block = unitary[:N, :N]
    else:
        unitarity_error = None
        block = to_unitary(circuit, columns=range(N))[:N, :]

    hermiticity_error = float(np.max(np.abs(block - block.conj().T)))
    overlap = float(np.real(np.vdot(target, block)))
    if overlap == 0.0:
        raise VerificationFailure("Encoded block is orthogonal to G'")
    scale = float(np.sum(target * target)) / overlap
    residual = np.abs(scale * block - target)
    worst = np.unravel_index(int(np.argmax(residual)), residual.shape)
    max_error = float(residual[worst])

    s_width = circuit.layout.total_qubits - 3 - 3 * scaled.grid.ell
    result = BlockEncodingResult(
        circuit=circuit, N=N,
        D_prime=scheme.D_prime if scheme else -1, D=scheme.D if scheme else 1 << (s_width - 1),
        measured_subnorm=scale, expected_subnorm=float(scheme.S if scheme else 1 << s_width),
        max_block_error=max_error, hermiticity_error=hermiticity_error, unitarity_error=unitarity_error,
        qubit_count=circuit.total_qubits, gate_counts=circuit.gate_counts(),
    )
    logger.info(f"verify_block N={N}: measured subnorm {scale:.12g} (expected {result.expected_subnorm:g}), "
                f"max error {max_error:.3e}")
    if max_error > tolerance:
        raise VerificationFailure(
            f"Encoded block deviates from G' by {max_error:.3e} > {tolerance:.1e}",
            row=int(worst[0]), column=int(worst[1]),
            expected=float(target[worst]), actual=complex(scale * block[worst]),
        )
    if not math.isclose(scale, result.expected_subnorm, rel_tol=1e-9):
        logger.warning(f"Measured subnormalization {scale!r} differs from 2D = {result.expected_subnorm:g}")
    return result


@dataclass
class ComplexityAudit:
    rows: List[Dict[str, float]]
    coefficients: Dict[str, float]
    relative_residual: float
    passed: bool


def audited_cost(scheme: LabelScheme) -> int:
    """Primitive cost of the block encoding without the value-lookup stage."""
    return assemble_block_encoding(scheme, include_value_lookup=False).primitive_cost()


def gate_complexity_audit(schemes: Sequence[LabelScheme]) -> ComplexityAudit:
    """
    Fits primitive cost = a + b log2 N + c D' log2 D' over the instances by
    non-negative least squares and accepts relative residuals below 20%.
    """
    rows = []
    for scheme in schemes:
        rows.append({
            "N": scheme.N, "D_prime": scheme.D_prime, "D": scheme.D,
            "qubits": scheme.layout.total_qubits, "cost": audited_cost(scheme),
        })
    design = np.array([[1.0, math.log2(r["N"]), r["D_prime"] * math.log2(r["D_prime"])] for r in rows])
    target = np.array([r["cost"] for r in rows], dtype=float)
    coefficients, relative = nonnegative_fit(design, target)
    audit = ComplexityAudit(
        rows=rows, coefficients={"a": float(coefficients[0]), "b": float(coefficients[1]), "c": float(coefficients[2])},
        relative_residual=relative, passed=relative < AUDIT_RESIDUAL_LIMIT,
    )
    logger.info(f"Gate complexity audit over {len(rows)} instances: {audit.coefficients}, "
                f"relative residual {relative:.3g}")
    return audit
