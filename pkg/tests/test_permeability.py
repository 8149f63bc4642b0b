import numpy as np
import pytest

from src.core.errors import DomainError, FieldFormatError
from src.core.grid import GridSpec
from src.features.permeability.coefficients import (
    CoefficientField, InterfaceRule, constant_field, field_from_rule, interface_value,
)
from src.features.permeability.field_io import export_field, import_field
from src.features.permeability.fractures import Fracture, FractureNetwork, pitchfork3d, rasterize


# --- Interface rule ---

def test_interface_values():
    assert interface_value(4, 1, "geometric") == 2.0
    assert interface_value(1, 3, "harmonic") == 1.5
    for rule in InterfaceRule:
        assert interface_value(0.37, 0.37, rule) == 0.37


def test_interface_value_is_vectorized():
    result = interface_value(np.array([1.0, 4.0]), np.array([3.0, 1.0]), InterfaceRule.HARMONIC)
    np.testing.assert_allclose(result, [1.5, 1.6])


def test_interface_value_rejects_nonpositive():
    with pytest.raises(DomainError):
        interface_value(0.0, 1.0)
    with pytest.raises(DomainError):
        InterfaceRule.parse("arithmetic")


# --- Fields ---

def test_coefficient_field_validation(grid1):
    with pytest.raises(DomainError):
        CoefficientField(grid1, np.ones(7))
    with pytest.raises(DomainError):
        CoefficientField(grid1, np.array([1, 1, 1, 1, 1, 1, 1, -1.0]))
    field = constant_field(grid1, 2.5)
    assert field.k_min == field.k_max == 2.5
    with pytest.raises(ValueError):
        field.cell_k[0] = 1.0


def test_field_from_rule_uses_ijk_order(grid1):
    field = field_from_rule(grid1, lambda i, j, k: 1.0 + i)
    assert list(field.cell_k) == [1.0] * 4 + [2.0] * 4
    assert field.as_cube()[1, 0, 0] == 2.0


# --- Pitchfork ---

def test_single_scale_is_one_trunk(grid2):
    network = pitchfork3d(grid2, 1)
    assert network.counts_by_scale() == {0: 1}
    field = rasterize(network, grid2)
    assert set(field.distinct_values()) == {1e-4, 1.0}
    cube = field.as_cube()
    assert np.all(cube[:, 2, :] == 1.0)
    assert np.all(cube[:, [0, 1, 3], :] == 1e-4)


def test_two_scales_on_n4_match_hand_enumeration(grid2):
    network = pitchfork3d(grid2, 2)
    assert network.counts_by_scale() == {0: 1, 1: 3}
    cube = rasterize(network, grid2).as_cube()

    expected = np.full((4, 4, 4), 1e-4)
    expected[:, 0, 1:3] = 0.25
    expected[:, 2, :] = 1.0
    np.testing.assert_array_equal(cube, expected)
    assert len(np.unique(cube)) == 3
    tines = [f.extent for f in network.fractures if f.scale == 1]
    assert tines == [((0, 1), (0, 0), (1, 2)), ((2, 3), (0, 0), (1, 2)), ((1, 2), (0, 0), (1, 2))]


def test_scale_counts_grow_by_three():
    network = pitchfork3d(GridSpec(ell=4), 3)
    assert network.counts_by_scale() == {0: 1, 1: 3, 2: 9}
    assert network.scale_permeability(2) == pytest.approx(1 / 16)


def test_scales_sit_in_separate_planes():
    network = pitchfork3d(GridSpec(ell=4), 4)
    planes = {f.scale: f.extent[1][0] for f in network.fractures}
    assert planes == {0: 8, 1: 5, 2: 2, 3: 11}
    for f in network.fractures:
        if f.scale:
            lo, hi = f.extent[2]
            assert hi - lo + 1 == 16 >> f.scale
            assert f.extent[0][1] - f.extent[0][0] + 1 == 16 >> f.scale


def test_five_scales_give_six_values():
    grid = GridSpec(ell=5)
    field = rasterize(pitchfork3d(grid, 5), grid)
    assert len(field.distinct_values()) == 6
    assert field.k_min == pytest.approx(1e-4)


def test_pitchfork_rejects_too_many_scales(grid1):
    with pytest.raises(DomainError):
        pitchfork3d(grid1, 3)
    with pytest.raises(DomainError):
        pitchfork3d(grid1, 0)
    with pytest.raises(DomainError):
        pitchfork3d(grid1, 2)
    with pytest.raises(DomainError):
        pitchfork3d(GridSpec(ell=2), 3)
    assert pitchfork3d(GridSpec(ell=3), 3).F == 3


def test_background_must_stay_below_fractures(grid2):
    with pytest.raises(DomainError):
        pitchfork3d(grid2, 2, k_bg=0.5)


def test_rasterize_takes_the_larger_permeability(grid1):
    big = Fracture(scale=0, extent=((0, 1), (0, 0), (0, 1)), permeability=1.0)
    small = Fracture(scale=1, extent=((0, 0), (0, 1), (0, 0)), permeability=0.25)
    network = FractureNetwork((big, small), F=2, beta=2.0, k_bg=0.01)
    cube = rasterize(network, grid1).as_cube()
    assert cube[0, 0, 0] == 1.0
    assert cube[0, 1, 0] == 0.25
    assert cube[1, 1, 1] == 0.01


def test_empty_network_is_uniform_background(grid1):
    field = rasterize(FractureNetwork((), F=0, beta=2.0, k_bg=0.3), grid1)
    assert set(field.distinct_values()) == {0.3}


# --- Field export ---

def test_field_export_round_trip(tmp_path, grid2):
    field = rasterize(pitchfork3d(grid2, 2), grid2)
    stem = str(tmp_path / "fields" / "pitchfork")
    export_field(field, stem)
    loaded = import_field(stem)
    np.testing.assert_array_equal(loaded.cell_k, field.cell_k)
    assert loaded.metadata["F"] == 2


def test_field_import_reports_line(tmp_path, grid1):
    stem = str(tmp_path / "broken")
    export_field(constant_field(grid1), stem)
    lines = (tmp_path / "broken.csv").read_text().splitlines()
    lines[4] = "abc"
    (tmp_path / "broken.csv").write_text("\n".join(lines) + "\n")
    with pytest.raises(FieldFormatError) as excinfo:
        import_field(stem)
    assert excinfo.value.line == 5
