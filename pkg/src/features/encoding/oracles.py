import logging
import math
from typing import List

import numpy as np

from src.core.errors import DomainError
from src.features.circuits.ir import (
    Circuit, ControlledModularAdd, ControlledRotX, Gate, MultiControlledX, PauliZ, pattern_controls,
)
from src.features.encoding.labels import SECTION_REGISTERS, LabelScheme
from src.features.permeability.census import NO_LABEL, SECTION_BANDS

logger = logging.getLogger(__name__)


def _section_controls(scheme: LabelScheme, section: int):
    return pattern_controls(scheme.layout.qubits("s_hi", "s_mid"), section)


def _d_register(scheme: LabelScheme):
    return scheme.layout.qubits("s_hi", "s_mid", "s_else")


def o_t_circuit(scheme: LabelScheme) -> Circuit:
    """Transposition oracle: flips m_hi on the three off-diagonal sections."""
    s_lo = scheme.layout["s_lo"].start
    gates = [MultiControlledX(_section_controls(scheme, section), s_lo) for section in (1, 2, 3)]
    return Circuit(scheme.layout, tuple(gates))


def o_c_circuit(scheme: LabelScheme) -> Circuit:
    """
    Column oracle on the m_lo register.

    For m_hi = 0 in sections 01, 10 and 11 the coordinate along the section's
    axis is decremented modulo n, which takes m_lo to the column of the
    addressed lower-triangle entry. Section 00 and m_hi = 1 are left alone.
    """
    layout = scheme.layout
    s_lo = layout["s_lo"].start
    gates = []
    for section, register in SECTION_REGISTERS.items():
        controls = _section_controls(scheme, section) + ((s_lo, 0),)
        gates.append(ControlledModularAdd(controls, layout[register].qubits, -1, scheme.grid.n))
    return Circuit(layout, tuple(gates))


def control_dprime(scheme: LabelScheme) -> List[Gate]:
    """Flags every padded label: del flips when the d register holds an unassigned label and in_range is 0."""
    layout = scheme.layout
    gate_controls = ((layout["in_range"].start, 0),)
    target = layout["del"].start
    unassigned = scheme.census.unassigned_labels()
    if len(unassigned) != scheme.D - scheme.D_prime:
        raise DomainError(f"{len(unassigned)} unassigned labels, expected D - D' = {scheme.D - scheme.D_prime}")
    return [MultiControlledX(gate_controls + pattern_controls(_d_register(scheme), d), target) for d in unassigned]


def o_rg_circuit(scheme: LabelScheme) -> Circuit:
    """
    Out-of-range oracle.

    Conditions 1-4 (diagonal section with m_hi = 1; an off-diagonal section
    whose axis coordinate of m_lo is zero) flip both del and in_range. Padded
    labels are then flagged through control_dprime, gated on in_range = 0.
    """
    layout = scheme.layout
    s_lo = layout["s_lo"].start
    conditions = [_section_controls(scheme, 0) + ((s_lo, 1),)]
    for section, register in SECTION_REGISTERS.items():
        conditions.append(_section_controls(scheme, section) + tuple((q, 0) for q in layout[register].qubits))
    gates: List[Gate] = []
    for controls in conditions:
        gates.append(MultiControlledX(controls, layout["del"].start))
        gates.append(MultiControlledX(controls, layout["in_range"].start))
    gates.extend(control_dprime(scheme))
    return Circuit(layout, tuple(gates))


def value_lookup_circuit(scheme: LabelScheme) -> Circuit:
    """
    Coordinate-to-label check for heterogeneous fields.

    At every structurally in-range position (section, m_lo), del flips for
    each assigned label of the section other than the census label of the
    entry there. Empty when every section holds a single value.
    """
    layout = scheme.layout
    census = scheme.census
    target = layout["del"].start
    m_lo_qubits = layout.qubits("N_c", "N_b", "N_a")
    gate_controls = ((layout["in_range"].start, 0),)
    gates: List[Gate] = []
    for section, bands in enumerate(SECTION_BANDS):
        labels = census.assigned_labels(section)
        if not labels:
            continue
        lower_band = bands[0]
        for m_lo in range(scheme.N):
            if section != 0 and scheme.field_value(m_lo, section) == 0:
                continue
            expected = int(census.lookup[lower_band, m_lo])
            wrong = [d for d in labels if d != expected]
            if expected != NO_LABEL and not wrong:
                continue
            position = pattern_controls(m_lo_qubits, m_lo)
            for d in wrong:
                gates.append(MultiControlledX(gate_controls + pattern_controls(_d_register(scheme), d) + position, target))
    logger.debug(f"Value lookup stage: {len(gates)} gates")
    return Circuit(layout, tuple(gates))


def data_rotation(scheme: LabelScheme) -> Circuit:
    """Z on the data qubit, then R_X(2 arccos G'_d) controlled on the d register."""
    angles = {}
    for d, value in scheme.value_table.items():
        if abs(value) > 1.0 + 1e-12:
            raise DomainError(f"Label {d} carries |G'_d| = {abs(value)} > 1")
        angles[d] = 2.0 * math.acos(float(np.clip(value, -1.0, 1.0)))
    data = scheme.layout["data"].start
    gates = (PauliZ(data), ControlledRotX(_d_register(scheme), tuple(sorted(angles.items())), data))
    return Circuit(scheme.layout, gates)
