import numpy as np
import pytest

from src.core.grid import Direction, GridSpec
from src.features.operator.assembly import BoundaryMode
from src.features.permeability.census import (
    NO_LABEL, census, census_sweep, cluster_values, padded_label_count, scaled_instance,
)
from src.features.permeability.coefficients import constant_field
from src.features.permeability.fractures import pitchfork3d, rasterize


def test_padded_label_count():
    assert padded_label_count(4) == 4
    assert padded_label_count(5) == 8
    assert padded_label_count(1) == 1


def test_cluster_values_merges_within_tolerance():
    reps, ids = cluster_values(np.array([0.5, 0.1, 0.5 + 1e-15, 0.1]), 1e-12)
    assert len(reps) == 2
    assert list(ids) == [1, 0, 1, 0]


def test_constant_field_census(constant1):
    _, scaled, result = constant1
    assert result.summary() == {"F": 1, "D_init": 2, "D_prime": 4, "D": 4}
    assert result.value_bits == 0
    assert result.value_table[0] == pytest.approx(0.5)
    for section in (1, 2, 3):
        assert result.value_table[section] == pytest.approx(-1 / 12)
    assert result.unassigned_labels() == []


def test_lookup_labels_match_entries(pitchfork1):
    _, scaled, result = pitchfork1
    op = scaled.op
    n = op.grid.n
    for a in range(op.N):
        assert result.value_table[result.label(a)] == pytest.approx(op.entry(a, a))
        for direction in Direction:
            label = result.label(a, direction)
            moved = a + direction.offset(n)
            if label == NO_LABEL:
                assert not (0 <= moved < op.N) or op.entry(a, moved) == 0.0
            else:
                assert result.value_table[label] == pytest.approx(op.entry(a, moved))


def test_census_counts_match_matrix_scan(grid2):
    field = rasterize(pitchfork3d(grid2, 1), grid2)
    result = census(field)
    dense = scaled_instance(field).op.to_dense()
    distinct = cluster_values(dense[dense != 0], 1e-12 * np.max(np.abs(dense)))[0]
    assert result.D_init == len(distinct)
    assert result.D >= result.D_prime >= 4
    assert result.D & (result.D - 1) == 0


def test_heterogeneous_padding_leaves_room_per_section(pitchfork1):
    _, _, result = pitchfork1
    # diagonal 2, z 2, y 1, x 2 values
    assert result.D_prime == 7
    assert result.D == 8
    assert len(result.unassigned_labels()) == 1
    for section in range(4):
        assert all(result.section_of(d) == section for d in result.assigned_labels(section))


def test_identity_rows_join_the_diagonal_section(grid1):
    field = constant_field(grid1)
    boundary = BoundaryMode.identity_rows([0])
    result = census(field, boundary=boundary)
    diagonal = [result.value_table[d] for d in result.assigned_labels(0)]
    assert any(v == pytest.approx(1.0 / 48.0) for v in diagonal)
    assert result.label(0, Direction.PLUS_Z) == NO_LABEL


def test_census_sweep_rows():
    rows = census_sweep(GridSpec(ell=2), [1, 2])
    assert [r["F"] for r in rows] == [1, 2]
    assert [r["cell_values"] for r in rows] == [2, 3]
    # scale-1 layer at y = 0 with one background plane to the trunk
    assert [r["D_init"] for r in rows] == [6, 10]
    assert [r["D_prime"] for r in rows] == [9, 15]


@pytest.mark.parametrize("ell", [1, 2, 3, 4, pytest.param(5, marks=pytest.mark.slow)])
def test_distinct_values_grow_at_most_twofold_per_scale(ell):
    rows = census_sweep(GridSpec(ell=ell), range(1, ell + 1))
    counts = [r["D_init"] for r in rows]
    assert counts == sorted(counts)
    for before, after in zip(counts, counts[1:]):
        assert after <= 2 * before
    for row in rows:
        assert row["cell_values"] == row["F"] + 1
        assert row["D_init"] <= row["cell_values"] ** 12


def test_each_isolated_scale_adds_at_most_five_values():
    rows = census_sweep(GridSpec(ell=3), [1, 2, 3])
    steps = [after["D_init"] - before["D_init"] for before, after in zip(rows, rows[1:])]
    assert steps == [5, 4]
