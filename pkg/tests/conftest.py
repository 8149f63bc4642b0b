import json

import numpy as np
import pytest

from src.core.grid import GridSpec
from src.features.permeability.census import census, scaled_instance
from src.features.permeability.coefficients import constant_field
from src.features.permeability.fractures import Fracture, FractureNetwork, pitchfork3d, rasterize


@pytest.fixture
def grid1():
    return GridSpec(ell=1)


@pytest.fixture
def grid2():
    return GridSpec(ell=2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def constant1(grid1):
    """Constant k = 1 on the n = 2 grid with its rescaled operator and census."""
    field = constant_field(grid1, 1.0)
    scaled = scaled_instance(field)
    return field, scaled, census(field, scaled=scaled)


@pytest.fixture
def pitchfork1(grid1):
    """F = 1 pitchfork on the n = 2 grid: one trunk over the j = 1 layer."""
    field = rasterize(pitchfork3d(grid1, 1), grid1)
    scaled = scaled_instance(field)
    return field, scaled, census(field, scaled=scaled)


@pytest.fixture
def two_scale(grid1):
    """Trunk over j = 1 plus a scale-1 fracture along the (i, 0, 0) row; three cell values on n = 2."""
    trunk = Fracture(scale=0, extent=((0, 1), (1, 1), (0, 1)), permeability=1.0)
    row = Fracture(scale=1, extent=((0, 1), (0, 0), (0, 0)), permeability=0.25)
    field = rasterize(FractureNetwork((trunk, row), F=2, beta=2.0, k_bg=1e-2), grid1)
    scaled = scaled_instance(field)
    return field, scaled, census(field, scaled=scaled)


@pytest.fixture
def constant2(grid2):
    field = constant_field(grid2, 1.0)
    scaled = scaled_instance(field)
    return field, scaled, census(field, scaled=scaled)


@pytest.fixture
def experiment_file(tmp_path):
    """Writes a JSON experiment config and returns its path."""
    def write(payload, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return str(path)

    return write
