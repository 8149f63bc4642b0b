import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

from src.core.errors import DomainError

logger = logging.getLogger(__name__)


class Direction(Enum):
    """Face directions, in the row order of the assembled operator."""

    MINUS_X = "-x"
    MINUS_Y = "-y"
    MINUS_Z = "-z"
    PLUS_Z = "+z"
    PLUS_Y = "+y"
    PLUS_X = "+x"

    @property
    def axis(self) -> int:
        # Axis 0 is x (index i), 2 is z (index k).
        return {"x": 0, "y": 1, "z": 2}[self.value[1]]

    @property
    def sign(self) -> int:
        return -1 if self.value[0] == "-" else 1

    def offset(self, n: int) -> int:
        """Linear index offset of the neighbor in this direction."""
        return self.sign * n ** (2 - self.axis)

    def opposite(self) -> "Direction":
        return DIRECTIONS[len(DIRECTIONS) - 1 - DIRECTIONS.index(self)]


# Shared ordering constant: (-x, -y, -z, +z, +y, +x).
DIRECTIONS: Tuple[Direction, ...] = tuple(Direction)

# Sentinel for neighbors outside the domain.
OUT_OF_DOMAIN = None


@dataclass(frozen=True)
class GridSpec:
    """Cubic grid of n = 2**ell cells per axis over a cube of side L."""

    ell: int
    L: float = 1.0

    def __post_init__(self):
        if not isinstance(self.ell, int) or isinstance(self.ell, bool) or self.ell < 0:
            raise DomainError(f"Refinement level must be a nonnegative integer, got {self.ell!r}")
        if not self.L > 0:
            raise DomainError(f"Side length L must be positive, got {self.L!r}")

    @classmethod
    def from_cells(cls, n: int, L: float = 1.0) -> "GridSpec":
        """Builds a grid from a cell count per axis; n must be a power of two."""
        if n < 1 or n & (n - 1):
            raise DomainError(f"Cells per axis must be a power of two, got {n}")
        return cls(ell=n.bit_length() - 1, L=L)

    @property
    def n(self) -> int:
        return 1 << self.ell

    @property
    def N(self) -> int:
        return self.n ** 3

    @property
    def dx(self) -> float:
        return self.L / self.n

    def refined(self, steps: int = 1) -> "GridSpec":
        """Same physical cube, resolution doubled `steps` times."""
        return GridSpec(ell=self.ell + steps, L=self.L)


def _check_axis(value: int, n: int, name: str):
    if not 0 <= value < n:
        raise DomainError(f"Axis index {name}={value} outside [0, {n})")


def linear_index(i: int, j: int, k: int, n: int) -> int:
    """Row-by-row linearization a = k + j*n + i*n**2."""
    for value, name in ((i, "i"), (j, "j"), (k, "k")):
        _check_axis(value, n, name)
    return k + j * n + i * n * n


def grid_coords(a: int, n: int) -> Tuple[int, int, int]:
    """Inverse of `linear_index`."""
    if not 0 <= a < n ** 3:
        raise DomainError(f"Cell index {a} outside [0, {n ** 3})")
    i, rest = divmod(a, n * n)
    j, k = divmod(rest, n)
    return i, j, k


def neighbors(a: int, n: int) -> List[Tuple[Direction, Optional[int]]]:
    """The six face neighbors of cell `a`, in DIRECTIONS order.

    Neighbors across the domain boundary are reported as OUT_OF_DOMAIN; indices
    never wrap across cell rows.
    """
    coords = grid_coords(a, n)
    result = []
    for direction in DIRECTIONS:
        moved = coords[direction.axis] + direction.sign
        if 0 <= moved < n:
            result.append((direction, a + direction.offset(n)))
        else:
            result.append((direction, OUT_OF_DOMAIN))
    return result


def refine_indices(i: int, j: int, k: int, ell: int) -> List[int]:
    """The eight cells of the (2n)^3 grid covering cell (i, j, k), ascending."""
    n = 1 << ell
    for value, name in ((i, "i"), (j, "j"), (k, "k")):
        _check_axis(value, n, name)
    base = 2 * k + 2 * n * (2 * j + 2 * n * 2 * i)
    m = 2 * n
    return sorted(base + dz + dy * m + dx * m * m for dx in (0, 1) for dy in (0, 1) for dz in (0, 1))


def refine_closure(i: int, j: int, k: int, ell: int, steps: int) -> List[int]:
    """Cells covering (i, j, k) after `steps` doublings, ascending."""
    cells = [linear_index(i, j, k, 1 << ell)]
    for step in range(steps):
        n = 1 << (ell + step)
        cells = sorted(c for a in cells for c in refine_indices(*grid_coords(a, n), ell + step))
    return cells


def shift_index_bits(r: int, ell: int) -> int:
    """Maps cell index r on level ell to its first child r' on level ell + 1.

    Bit l of r (counted from the least significant end) moves to l + 1 in the
    k field, l + 2 in the j field and l + 3 in the i field.
    """
    if not 0 <= r < 1 << (3 * ell):
        raise DomainError(f"Cell index {r} outside a {3 * ell}-bit register")
    shifted = 0
    for position in range(3 * ell):
        if (r >> position) & 1:
            shifted |= 1 << (position + 1 + position // ell)
    return shifted
