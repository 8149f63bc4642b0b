import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from src.core.errors import DomainError
from src.core.grid import GridSpec
from src.features.permeability.coefficients import CoefficientField

logger = logging.getLogger(__name__)

Box = Tuple[Tuple[int, int], Tuple[int, int], Tuple[int, int]]


@dataclass(frozen=True)
class Fracture:
    """Axis-aligned fracture box with inclusive (lo, hi) cell bounds per axis (i, j, k)."""

    scale: int
    extent: Box
    permeability: float

    def __post_init__(self):
        if self.scale < 0:
            raise DomainError(f"Fracture scale must be nonnegative, got {self.scale}")
        if not self.permeability > 0:
            raise DomainError(f"Fracture permeability must be positive, got {self.permeability}")
        for lo, hi in self.extent:
            if lo > hi:
                raise DomainError(f"Empty fracture extent {self.extent}")

    def fits(self, n: int) -> bool:
        return all(0 <= lo and hi < n for lo, hi in self.extent)

    def slices(self) -> Tuple[slice, slice, slice]:
        return tuple(slice(lo, hi + 1) for lo, hi in self.extent)


@dataclass(frozen=True)
class FractureNetwork:
    fractures: Tuple[Fracture, ...]
    F: int
    beta: float
    k_bg: float
    L: float = 1.0
    metadata: Dict[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.k_bg > 0:
            raise DomainError(f"Background permeability must be positive, got {self.k_bg}")
        scales = {f.scale for f in self.fractures}
        if self.fractures and scales != set(range(self.F)):
            raise DomainError(f"Network scales {sorted(scales)} are not exactly 0..{self.F - 1}")
        if self.fractures and self.k_bg >= min(f.permeability for f in self.fractures):
            raise DomainError(
                f"Background permeability {self.k_bg} must be below every fracture permeability "
                f"(smallest is {min(f.permeability for f in self.fractures)})"
            )

    def scale_permeability(self, scale: int) -> float:
        return (self.L / 2 ** scale) ** self.beta

    def counts_by_scale(self) -> Dict[int, int]:
        return dict(sorted(Counter(f.scale for f in self.fractures).items()))


def _clip(lo: int, hi: int, n: int) -> Tuple[int, int]:
    return max(lo, 0), min(hi, n - 1)


def _layer_planes(n: int, count: int) -> List[int]:
    """y-planes for scales 1.., below the trunk first, 3 planes apart (2 when n is too small)."""
    middle = n // 2
    for spacing in (3, 2):
        below = list(range(middle - spacing, -1, -spacing))
        above = list(range(middle + spacing, n, spacing))
        planes = below + above
        if len(planes) >= count:
            return planes[:count]
    raise DomainError(f"No room for {count} fracture layers on a grid with n={n}")


def _children(parent: Fracture, scale: int, n: int, plane: int, permeability: float) -> List[Fracture]:
    """Two tines at the ends of the parent's x-footprint plus one continuation through its middle."""
    lo, hi = parent.extent[0]
    width = (hi - lo + 2) // 2
    depth = n >> scale
    z_range = _clip(n // 2 - depth // 2, n // 2 - depth // 2 + depth - 1, n)
    middle = lo + (hi - lo + 1 - width) // 2
    footprints = [
        (lo, lo + width - 1),          # tine
        (hi - width + 1, hi),          # tine
        (middle, middle + width - 1),  # continuation
    ]
    return [
        Fracture(scale=scale, extent=(x_range, (plane, plane), z_range), permeability=permeability)
        for x_range in footprints
    ]


def pitchfork3d(grid: GridSpec, F: int, beta: float = 2.0, k_bg: float = 1e-4) -> FractureNetwork:
    """
    Generates the deterministic 3D pitchfork fracture network.

    The scale-0 trunk fills the y = n/2 plane. Scale s >= 1 lives in its own
    y-plane, separated from the trunk and from the other scales by background:
    every scale-(s-1) fracture spawns three children whose x-footprints cover
    the parent's, n/2**s cells deep in z around the middle. Scale s conducts
    with permeability (L/2**s)**beta. Each added scale contributes at most
    five new distinct operator values.

    Args:
        grid: Target grid.
        F: Number of fracture scales; the finest is n/2**(F-1) >= 2 cells deep.
        beta: Length-to-permeability exponent.
        k_bg: Matrix (background) permeability.

    Returns:
        FractureNetwork: Fractures ordered by scale, 3**s of them at scale s.
    """
    n = grid.n
    if F < 1:
        raise DomainError(f"Fracture scale count must be at least 1, got {F}")
    if 2 ** F > n:
        raise DomainError(f"F={F} scales do not fit on a grid with n={n}: need 2**F <= n")

    def permeability(scale: int) -> float:
        return (grid.L / 2 ** scale) ** beta

    planes = _layer_planes(n, F - 1)
    trunk = Fracture(scale=0, extent=((0, n - 1), (n // 2, n // 2), (0, n - 1)), permeability=permeability(0))
    fractures = [trunk]
    generation = [trunk]
    for scale, plane in enumerate(planes, start=1):
        generation = [child for parent in generation
                      for child in _children(parent, scale, n, plane, permeability(scale))]
        fractures.extend(generation)

    logger.info(f"Pitchfork network: n={n}, F={F}, {len(fractures)} fractures, layers at y={planes}")
    return FractureNetwork(
        fractures=tuple(fractures), F=F, beta=float(beta), k_bg=float(k_bg), L=grid.L,
        metadata={"field": "pitchfork", "F": F, "beta": float(beta), "k_bg": float(k_bg)},
    )


def rasterize(network: FractureNetwork, grid: GridSpec) -> CoefficientField:
    """Cell value is the largest permeability among the covering fractures and the background."""
    cube = np.full((grid.n,) * 3, network.k_bg)
    for fracture in network.fractures:
        if not fracture.fits(grid.n):
            raise DomainError(f"Fracture extent {fracture.extent} exceeds the n={grid.n} grid")
        region = fracture.slices()
        cube[region] = np.maximum(cube[region], fracture.permeability)
    metadata = dict(network.metadata)
    metadata.setdefault("k_bg", network.k_bg)
    return CoefficientField(grid, cube.reshape(-1), metadata)
