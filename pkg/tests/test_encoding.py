import math

import numpy as np
import pytest

from src.config.env_manager import MAX_QUBITS_VAR
from src.core.errors import DomainError, VerificationFailure
from src.core.grid import GridSpec
from src.features.circuits.ir import concatenate
from src.features.circuits.simulator import classical_action
from src.features.encoding.block_encoding import (
    assemble_block_encoding, audited_cost, gate_complexity_audit, verify_block,
)
from src.features.encoding.labels import block_encoding_layout, build_label_scheme
from src.features.encoding.oracles import (
    control_dprime, data_rotation, o_c_circuit, o_rg_circuit, o_t_circuit, value_lookup_circuit,
)
from src.features.permeability.census import census, scaled_instance
from src.features.operator.assembly import BoundaryMode
from src.features.permeability.coefficients import InterfaceRule, constant_field
from src.features.permeability.fractures import pitchfork3d, rasterize


def _scheme(instance):
    field, _, result = instance
    return build_label_scheme(result, field.grid)


@pytest.fixture
def pitchfork_n4():
    """F = 2 pitchfork on the n = 4 grid: scale-1 layer at j = 0, trunk at j = 2."""
    grid = GridSpec(ell=2)
    field = rasterize(pitchfork3d(grid, 2), grid)
    scaled = scaled_instance(field)
    return field, scaled, census(field, scaled=scaled)


def _images(circuit, scheme):
    addresses = list(scheme.all_addresses())
    inputs = [scheme.basis_index(*address) for address in addresses]
    return addresses, [scheme.decode(int(i)) for i in classical_action(circuit, inputs)]


# --- Layout and labels ---

def test_layout_sizes(constant1, pitchfork1):
    constant = _scheme(constant1)
    assert constant.layout.total_qubits == 9
    assert constant.layout.widths()["s_else"] == 0
    assert (constant.N, constant.D, constant.M, constant.S) == (8, 4, 16, 8)
    assert constant.M * constant.D == constant.N * constant.S
    fork = _scheme(pitchfork1)
    assert fork.layout.total_qubits == 10
    with pytest.raises(DomainError):
        block_encoding_layout(1, 6)


def test_every_nonzero_has_one_address(pitchfork1):
    _, scaled, _ = pitchfork1
    scheme = _scheme(pitchfork1)
    dense = scaled.op.to_dense()
    nonzero = {(int(a), int(b)) for a, b in zip(*np.nonzero(dense))}
    assert set(scheme.positions) == nonzero
    assert len(scheme.occurrences) == len(nonzero)
    for (d, m_hi, m_lo), (a, b) in scheme.occurrences.items():
        assert scheme.value_table[d] == pytest.approx(dense[a, b])
        assert (a >= b) == (m_hi == 0)


def test_column_examples(constant1):
    scheme = _scheme(constant1)
    assert scheme.column(1, 0, 5) == 4
    assert scheme.column(3, 0, 4) == 0
    assert scheme.column(1, 1, 5) == 5
    assert scheme.column(0, 0, 6) == 6


def test_column_and_transpose_follow_occurrences(constant2):
    scheme = _scheme(constant2)
    for key, (a, b) in scheme.occurrences.items():
        assert scheme.column(*key) == b
        if scheme.section(key[0]) != 0:
            assert scheme.address(*scheme.transpose(*key)) == (b, a)
        else:
            assert scheme.transpose(*key) == key


def test_basis_index_round_trip(pitchfork1):
    scheme = _scheme(pitchfork1)
    index = scheme.basis_index(5, 1, 3, data=1, flag=0, in_range=1)
    assert scheme.decode(index) == {"data": 1, "del": 0, "in_range": 1, "d": 5, "m_hi": 1, "m_lo": 3}


# --- Oracles ---

@pytest.mark.parametrize("name", ["pitchfork1", "two_scale", "constant2", "pitchfork_n4"])
def test_transposition_oracle(name, request):
    scheme = _scheme(request.getfixturevalue(name))
    o_t = o_t_circuit(scheme)
    addresses, images = _images(o_t, scheme)
    for address, image in zip(addresses, images):
        assert (image["d"], image["m_hi"], image["m_lo"]) == scheme.transpose(*address)
    _, twice = _images(o_t.then(o_t), scheme)
    assert [(r["d"], r["m_hi"], r["m_lo"]) for r in twice] == addresses


@pytest.mark.parametrize("name", ["constant1", "pitchfork1", "constant2", "pitchfork_n4"])
def test_column_oracle(name, request):
    scheme = _scheme(request.getfixturevalue(name))
    addresses, images = _images(o_c_circuit(scheme), scheme)
    for (d, m_hi, m_lo), image in zip(addresses, images):
        assert image["m_lo"] == scheme.column(d, m_hi, m_lo)
        assert (image["d"], image["m_hi"]) == (d, m_hi)
    assert len(o_c_circuit(scheme)) == 3


@pytest.mark.parametrize("name", ["constant1", "pitchfork1", "two_scale", "constant2", "pitchfork_n4"])
def test_range_oracle_flags_exactly_the_unused_addresses(name, request):
    scheme = _scheme(request.getfixturevalue(name))
    unassigned = set(scheme.census.unassigned_labels())
    addresses, images = _images(o_rg_circuit(scheme), scheme)
    for (d, m_hi, m_lo), image in zip(addresses, images):
        out = not scheme.structurally_in_range(d, m_hi, m_lo)
        assert image["in_range"] == int(out)
        assert image["del"] == int(out or d in unassigned)
        assert (image["d"], image["m_hi"], image["m_lo"], image["data"]) == (d, m_hi, m_lo, 0)


@pytest.mark.parametrize("name", ["constant1", "pitchfork1", "two_scale"])
def test_range_and_value_checks_accept_only_occurrences(name, request):
    scheme = _scheme(request.getfixturevalue(name))
    checks = concatenate(scheme.layout, [o_rg_circuit(scheme), value_lookup_circuit(scheme)])
    addresses, images = _images(checks, scheme)
    for address, image in zip(addresses, images):
        assert (image["del"] == 0) == (address in scheme.occurrences)


def test_range_and_value_checks_on_n4_pitchfork(pitchfork_n4):
    field, _, result = pitchfork_n4
    scheme = build_label_scheme(result, field.grid)
    checks = concatenate(scheme.layout, [o_rg_circuit(scheme), value_lookup_circuit(scheme)])
    addresses, images = _images(checks, scheme)
    accepted = {address for address, image in zip(addresses, images) if image["del"] == 0}
    assert accepted == set(scheme.occurrences)


def test_value_lookup_is_empty_for_constant_fields(constant1, constant2):
    assert len(value_lookup_circuit(_scheme(constant1))) == 0
    assert len(value_lookup_circuit(_scheme(constant2))) == 0


def test_control_dprime_flags_padding(constant1, pitchfork1):
    assert control_dprime(_scheme(constant1)) == []
    gates = control_dprime(_scheme(pitchfork1))
    assert len(gates) == 1


def test_data_rotation_angles(constant1):
    scheme = _scheme(constant1)
    rotation = data_rotation(scheme)
    assert rotation.gate_counts() == {"ControlledRotX": 1, "PauliZ": 1}
    angles = rotation.gates[1].angle_map()
    assert angles[0] == pytest.approx(2 * math.acos(0.5))
    for d in (1, 2, 3):
        assert angles[d] == pytest.approx(2 * math.acos(-1 / 12))


# --- Full block encoding ---

def test_circuit_structure(pitchfork1):
    scheme = _scheme(pitchfork1)
    circuit = assemble_block_encoding(scheme)
    counts = circuit.gate_counts()
    assert counts["ControlledModularAdd"] == 6
    assert counts["Hadamard"] == 2 * 4
    assert counts["ControlledRotX"] == 1
    assert circuit.total_qubits == 10


@pytest.mark.parametrize("name", ["constant1", "pitchfork1", "two_scale"])
def test_block_equals_scaled_operator(name, request):
    instance = request.getfixturevalue(name)
    scheme = _scheme(instance)
    result = verify_block(assemble_block_encoding(scheme), instance[1], scheme, tolerance=1e-10, check_unitarity=True)
    assert result.measured_subnorm == pytest.approx(scheme.S, rel=1e-9)
    assert result.max_block_error <= 1e-10
    assert result.hermiticity_error <= 1e-10
    assert result.unitarity_error <= 1e-10
    report = result.to_report()
    assert report["D"] == scheme.D and report["qubits"] == scheme.layout.total_qubits


def test_block_with_identity_rows(grid1):
    field = constant_field(grid1)
    boundary = BoundaryMode.identity_rows([0, 7])
    scaled = scaled_instance(field, boundary=boundary)
    scheme = build_label_scheme(census(field, boundary=boundary, scaled=scaled), grid1)
    assert (scheme.D_prime, scheme.D) == (5, 8)
    assert scheme.layout.total_qubits == 10
    result = verify_block(assemble_block_encoding(scheme), scaled, scheme, tolerance=1e-10)
    assert result.measured_subnorm == pytest.approx(scheme.S, rel=1e-9)
    assert result.max_block_error <= 1e-10


@pytest.mark.parametrize("name", ["pitchfork1", "two_scale"])
def test_block_with_geometric_interfaces(name, request):
    field = request.getfixturevalue(name)[0]
    scaled = scaled_instance(field, InterfaceRule.GEOMETRIC)
    scheme = build_label_scheme(census(field, InterfaceRule.GEOMETRIC, scaled=scaled), field.grid)
    result = verify_block(assemble_block_encoding(scheme), scaled, scheme, tolerance=1e-10)
    assert result.measured_subnorm == pytest.approx(scheme.S, rel=1e-9)
    harmonic = request.getfixturevalue(name)[1]
    assert not np.allclose(scaled.op.to_dense(), harmonic.op.to_dense())


def test_block_on_n4_constant(constant2):
    scheme = _scheme(constant2)
    assert scheme.layout.total_qubits == 12
    result = verify_block(assemble_block_encoding(scheme), constant2[1], scheme)
    assert result.measured_subnorm == pytest.approx(8.0, rel=1e-9)
    assert result.unitarity_error is None


@pytest.mark.slow
def test_block_on_n4_pitchfork(monkeypatch, pitchfork_n4):
    monkeypatch.setenv(MAX_QUBITS_VAR, "16")
    field, scaled, result = pitchfork_n4
    scheme = build_label_scheme(result, field.grid)
    block = verify_block(assemble_block_encoding(scheme), scaled, scheme)
    assert block.measured_subnorm == pytest.approx(scheme.S, rel=1e-9)


def test_missing_value_lookup_is_detected(pitchfork1):
    scheme = _scheme(pitchfork1)
    with pytest.raises(VerificationFailure) as excinfo:
        verify_block(assemble_block_encoding(scheme, include_value_lookup=False), pitchfork1[1], scheme)
    assert excinfo.value.row is not None


def test_wrong_instance_is_detected(constant1, two_scale):
    scheme = _scheme(constant1)
    with pytest.raises(VerificationFailure):
        verify_block(assemble_block_encoding(scheme), two_scale[1], scheme)


# --- Gate complexity ---

def test_audited_cost_grows_with_grid():
    costs = []
    for ell in (1, 2, 3):
        field = constant_field(GridSpec(ell=ell))
        costs.append(audited_cost(build_label_scheme(census(field), field.grid)))
    assert costs[0] < costs[1] < costs[2]


def test_gate_complexity_audit_over_mixed_instances():
    fields = [constant_field(GridSpec(ell=ell)) for ell in (1, 2, 3)]
    for ell in (1, 2, 3):
        grid = GridSpec(ell=ell)
        fields.append(rasterize(pitchfork3d(grid, 1), grid))
    grid = GridSpec(ell=2)
    fields.append(rasterize(pitchfork3d(grid, 2), grid))
    schemes = [build_label_scheme(census(field), field.grid) for field in fields]

    audit = gate_complexity_audit(schemes)
    assert [row["D_prime"] for row in audit.rows] == [4, 4, 4, 7, 9, 9, 15]
    assert [row["D"] for row in audit.rows] == [4, 4, 4, 8, 16, 16, 32]
    assert all(value >= 0 for value in audit.coefficients.values())
    assert audit.coefficients["c"] > 0
    # the label padding makes cost nonlinear in D' log D', so the fit is not exact
    assert 1e-6 < audit.relative_residual < 0.2
    assert audit.passed
