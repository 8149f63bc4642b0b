import logging
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as sparse_linalg

from src.config.config_manager import config_manager
from src.core.errors import DomainError, PreconditionViolation
from src.core.grid import DIRECTIONS, Direction, GridSpec
from src.features.permeability.coefficients import CoefficientField, InterfaceRule, interface_value

logger = logging.getLogger(__name__)

# Band rows of the storage: (-x, -y, -z, diagonal, +z, +y, +x).
BANDS: Tuple[Optional[Direction], ...] = DIRECTIONS[:3] + (None,) + DIRECTIONS[3:]
DIAGONAL_BAND = 3


def band_index(direction: Optional[Direction]) -> int:
    return BANDS.index(direction)


def band_offsets(n: int) -> List[int]:
    return [0 if d is None else d.offset(n) for d in BANDS]


@dataclass(frozen=True)
class BoundaryMode:
    """Boundary treatment. "ghost" mirrors the boundary cell into a ghost cell
    with h = 0; "identity_rows" additionally replaces the listed rows by unit rows."""

    kind: str = "ghost"
    rows: FrozenSet[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind not in ("ghost", "identity_rows"):
            raise DomainError(f"Unknown boundary mode {self.kind!r}; expected 'ghost' or 'identity_rows'")
        object.__setattr__(self, "rows", frozenset(int(r) for r in self.rows))

    @classmethod
    def ghost(cls) -> "BoundaryMode":
        return cls("ghost")

    @classmethod
    def identity_rows(cls, rows: Iterable[int]) -> "BoundaryMode":
        return cls("identity_rows", frozenset(rows))

    def describe(self) -> Union[str, dict]:
        if self.kind == "ghost":
            return "ghost"
        return {"identity_rows": sorted(self.rows)}


def _neighbor_mask(direction: Direction, n: int) -> np.ndarray:
    """True where the neighbor in `direction` lies inside the grid, in linear cell order."""
    coords = np.indices((n, n, n)).reshape(3, -1)[direction.axis] + direction.sign
    return (coords >= 0) & (coords < n)


class SparseOperator:
    """Symmetric 7-band operator on a cubic grid.

    bands[t, a] holds entry (a, a + offset_t); positions whose neighbor is
    outside the grid are kept at zero.
    """

    def __init__(self, grid: GridSpec, bands: np.ndarray):
        bands = np.array(bands, dtype=float)
        if bands.shape != (len(BANDS), grid.N):
            raise DomainError(f"Band array must have shape {(len(BANDS), grid.N)}, got {bands.shape}")
        bands.setflags(write=False)
        self.grid = grid
        self.bands = bands
        self.offsets = band_offsets(grid.n)

    # --- Structure ---

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def shape(self) -> Tuple[int, int]:
        return self.N, self.N

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.bands))

    def band(self, direction: Optional[Direction]) -> np.ndarray:
        return self.bands[band_index(direction)]

    def diagonal(self) -> np.ndarray:
        return self.bands[DIAGONAL_BAND]

    def entry(self, a: int, b: int) -> float:
        if not (0 <= a < self.N and 0 <= b < self.N):
            raise DomainError(f"Entry ({a}, {b}) outside a {self.N}x{self.N} operator")
        offset = b - a
        if offset in self.offsets:
            return float(self.bands[self.offsets.index(offset), a])
        return 0.0

    # --- Arithmetic ---

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape[0] != self.N:
            raise DomainError(f"Vector of length {x.shape[0]} does not match operator dimension {self.N}")
        extra = (slice(None),) + (None,) * (x.ndim - 1)
        y = self.bands[DIAGONAL_BAND][extra] * x
        for t, offset in enumerate(self.offsets):
            if offset > 0:
                y[:-offset] += self.bands[t, :-offset][extra] * x[offset:]
            elif offset < 0:
                y[-offset:] += self.bands[t, -offset:][extra] * x[:offset]
        return y

    def __matmul__(self, x):
        return self.matvec(x)

    def scaled(self, factor: float) -> "SparseOperator":
        return SparseOperator(self.grid, self.bands * factor)

    def is_symmetric(self) -> bool:
        for t, offset in enumerate(self.offsets):
            if offset > 0:
                mirror = self.offsets.index(-offset)
                if not np.array_equal(self.bands[t, :-offset], self.bands[mirror, offset:]):
                    return False
        return True

    # --- Conversions ---

    def to_scipy(self) -> sparse.csr_matrix:
        diagonals = []
        for t, offset in enumerate(self.offsets):
            diagonals.append(self.bands[t, : self.N - offset] if offset >= 0 else self.bands[t, -offset:])
        return sparse.diags(diagonals, self.offsets, shape=self.shape, format="csr")

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def as_linear_operator(self) -> sparse_linalg.LinearOperator:
        return sparse_linalg.LinearOperator(self.shape, matvec=self.matvec, rmatvec=self.matvec, matmat=self.matvec, dtype=float)

    @classmethod
    def from_matrix(cls, matrix, grid: GridSpec) -> "SparseOperator":
        """Reads a dense or scipy matrix back into band storage, rejecting entries off the stencil."""
        coo = sparse.coo_matrix(matrix)
        if coo.shape != (grid.N, grid.N):
            raise DomainError(f"Matrix shape {coo.shape} does not match grid with N={grid.N}")
        offsets = band_offsets(grid.n)
        masks = [np.ones(grid.N, dtype=bool) if d is None else _neighbor_mask(d, grid.n) for d in BANDS]
        bands = np.zeros((len(BANDS), grid.N))
        for row, col, value in zip(coo.row, coo.col, coo.data):
            if value == 0:
                continue
            offset = int(col) - int(row)
            if offset not in offsets or not masks[offsets.index(offset)][row]:
                raise DomainError(f"Entry ({row}, {col}) is not on the 7-point stencil")
            bands[offsets.index(offset), row] += value
        return cls(grid, bands)

    def __repr__(self):
        return f"SparseOperator(N={self.N}, nnz={self.nnz})"


@dataclass(frozen=True)
class ScaledOperator:
    """G' = G / alpha together with the quantities that fix alpha."""

    op: SparseOperator
    alpha: float
    a_max: float
    original: Optional[SparseOperator] = None

    @property
    def grid(self) -> GridSpec:
        return self.op.grid


def assemble_G(field: CoefficientField, grid: Optional[GridSpec] = None,
               rule: Union[str, InterfaceRule] = InterfaceRule.HARMONIC,
               boundary: Optional[BoundaryMode] = None) -> SparseOperator:
    """
    Assembles the 7-point heterogeneous operator G with the positive sign convention.

    Each face contributes k_face / dx**2 to the diagonal of both cells and
    -k_face / dx**2 to their coupling. Faces on the domain boundary see a
    ghost cell with the boundary cell's own permeability, so the diagonal
    always sums six faces while the coupling is absent.

    Args:
        field: Cell permeabilities.
        grid: Grid the field must match; defaults to the field's grid.
        rule: Interface averaging rule.
        boundary: Boundary treatment, ghost by default.

    Returns:
        SparseOperator: The symmetric positive definite operator.
    """
    grid = grid or field.grid
    if field.grid.N != grid.N:
        raise DomainError(f"Field with N={field.grid.N} does not match grid with N={grid.N}")
    boundary = boundary or BoundaryMode.ghost()
    n, N = grid.n, grid.N
    k = field.cell_k
    inv_dx2 = 1.0 / grid.dx ** 2
    bands = np.zeros((len(BANDS), N))
    cells = np.arange(N)

    for direction in DIRECTIONS:
        mask = _neighbor_mask(direction, n)
        faces = k.copy()
        inside = cells[mask]
        faces[inside] = interface_value(k[inside], k[inside + direction.offset(n)], rule)
        bands[DIAGONAL_BAND] += faces * inv_dx2
        bands[band_index(direction)][mask] = -faces[mask] * inv_dx2

    if boundary.kind == "identity_rows":
        rows = sorted(boundary.rows)
        if rows and not (0 <= rows[0] and rows[-1] < N):
            raise DomainError(f"Identity rows {rows} outside [0, {N})")
        for a in rows:
            for direction in DIRECTIONS:
                t = band_index(direction)
                if bands[t, a] != 0.0:
                    neighbor = a + direction.offset(n)
                    bands[band_index(direction.opposite()), neighbor] = 0.0
                    bands[t, a] = 0.0
            bands[DIAGONAL_BAND, a] = 1.0

    logger.debug(f"Assembled G: N={N}, rule={InterfaceRule.parse(rule).value}, boundary={boundary.kind}")
    return SparseOperator(grid, bands)


def laplacian3d(grid: GridSpec) -> SparseOperator:
    """Unit-spacing 3D Laplacian (positive convention): diagonal 6, couplings -1."""
    n, N = grid.n, grid.N
    bands = np.zeros((len(BANDS), N))
    bands[DIAGONAL_BAND] = 6.0
    for direction in DIRECTIONS:
        bands[band_index(direction)][_neighbor_mask(direction, n)] = -1.0
    return SparseOperator(grid, bands)


def gershgorin_alpha(field: CoefficientField, grid: Optional[GridSpec] = None) -> float:
    """Row-sum bound 12 * k_max * N**(2/3) / L**2 on the norm of G."""
    grid = grid or field.grid
    return 12.0 * field.k_max * grid.n ** 2 / grid.L ** 2


def _norm(op: SparseOperator) -> float:
    if op.N <= config_manager.dense_threshold():
        return float(np.max(np.abs(np.linalg.eigvalsh(op.to_dense()))))
    value = sparse_linalg.eigsh(op.to_scipy(), k=1, which="LM", return_eigenvectors=False, tol=1e-10)
    return float(abs(value[0]))


def rescale(G: SparseOperator, alpha: float, check_norm: bool = True) -> ScaledOperator:
    """Divides every entry by alpha; optionally asserts the rescaled norm is at most one."""
    if not alpha > 0:
        raise DomainError(f"Subnormalization must be positive, got {alpha}")
    scaled = G.scaled(1.0 / alpha)
    if check_norm:
        norm = _norm(scaled)
        if norm > 1.0 + 1e-10:
            raise PreconditionViolation(f"Rescaled operator has norm {norm:.12g} > 1 (alpha={alpha})")
        logger.debug(f"Rescaled operator norm {norm:.6g} with alpha={alpha:.6g}")
    a_max = alpha / G.grid.n ** 2
    return ScaledOperator(op=scaled, alpha=float(alpha), a_max=float(a_max), original=G)


def build_source(grid: GridSpec, sites: Optional[Sequence[Tuple[int, float]]] = None,
                 count: Optional[int] = None, seed=None) -> np.ndarray:
    """
    Builds a sparse source vector b.

    Args:
        grid: Target grid.
        sites: Explicit (cell, amplitude) pairs.
        count: Number of random sites when `sites` is not given; capped at N.
        seed: Seed, SeedSequence or Generator for random placement.

    Returns:
        np.ndarray: Vector of length N with the requested support.
    """
    b = np.zeros(grid.N)
    if sites is None:
        if count is None or count < 1:
            raise DomainError("Either explicit sites or a positive site count is required")
        count = min(int(count), grid.N)
        rng = np.random.default_rng(seed)
        cells = rng.choice(grid.N, size=count, replace=False)
        sites = [(int(c), 1.0 if t % 2 == 0 else -1.0) for t, c in enumerate(cells)]

    seen = set()
    for cell, amplitude in sites:
        if not 0 <= cell < grid.N:
            raise DomainError(f"Source site {cell} outside [0, {grid.N})")
        if cell in seen:
            raise DomainError(f"Duplicate source site {cell}")
        seen.add(cell)
        b[cell] = amplitude
    return b
