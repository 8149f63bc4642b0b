import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional, Tuple

from src.core.errors import DomainError
from src.core.grid import GridSpec
from src.features.circuits.ir import RegisterLayout
from src.features.operator.assembly import BANDS, DIAGONAL_BAND
from src.features.permeability.census import NO_LABEL, NUM_SECTIONS, ValueCensus

logger = logging.getLogger(__name__)

# (d, m_hi, m_lo) and (row, column)
Address = Tuple[int, int, int]
Entry = Tuple[int, int]

# Sub-register of the column index that each off-diagonal section moves along.
SECTION_REGISTERS = {1: "N_a", 2: "N_b", 3: "N_c"}


def block_encoding_layout(ell: int, D: int) -> RegisterLayout:
    """data, del, in_range, the sparsity register s = (s_hi, s_mid, s_else, s_lo) and j = (N_c, N_b, N_a)."""
    if D < 4 or D & (D - 1):
        raise DomainError(f"Padded label count must be a power of two >= 4, got {D}")
    return RegisterLayout([
        ("data", 1), ("del", 1), ("in_range", 1),
        ("s_hi", 1), ("s_mid", 1), ("s_else", int(math.log2(D)) - 2), ("s_lo", 1),
        ("N_c", ell), ("N_b", ell), ("N_a", ell),
    ])


@dataclass(frozen=True)
class LabelScheme:
    """Index algebra between labels (d, m_hi, m_lo) and nonzero entries of G'.

    m_hi = 0 addresses the lower triangle including the diagonal: entry (a, b)
    with a >= b sits at (d, 0, a). m_hi = 1 addresses the upper triangle: entry
    (a, b) with a < b sits at (d, 1, b).
    """

    census: ValueCensus
    grid: GridSpec
    layout: RegisterLayout
    occurrences: Dict[Address, Entry] = field(repr=False)
    positions: Dict[Entry, Address] = field(repr=False)

    # --- Sizes ---

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def D_prime(self) -> int:
        return self.census.D_prime

    @property
    def D(self) -> int:
        return self.census.D

    @property
    def M(self) -> int:
        return 2 * self.grid.N

    @property
    def S(self) -> int:
        return 2 * self.census.D

    @property
    def value_bits(self) -> int:
        return self.census.value_bits

    @property
    def value_table(self) -> Dict[int, float]:
        return self.census.value_table

    # --- Label algebra ---

    def section(self, d: int) -> int:
        return self.census.section_of(d)

    def section_offset(self, section: int) -> int:
        """Linear index offset of the band pair of a section (0 for the diagonal)."""
        return (0, 1, self.grid.n, self.grid.n ** 2)[section]

    def field_value(self, index: int, section: int) -> int:
        """Coordinate along the axis a section couples (k for 01, j for 10, i for 11)."""
        return (index // self.section_offset(section)) % self.grid.n

    def structurally_in_range(self, d: int, m_hi: int, m_lo: int) -> bool:
        """Conditions checked by the out-of-range oracle before any value lookup."""
        section = self.section(d)
        if section == 0:
            return m_hi == 0
        return self.field_value(m_lo, section) != 0

    def column(self, d: int, m_hi: int, m_lo: int) -> int:
        """Column reached by the column oracle: m_lo shifted back along the section's axis when m_hi = 0."""
        section = self.section(d)
        if section == 0 or m_hi == 1:
            return m_lo
        n = self.grid.n
        offset = self.section_offset(section)
        coordinate = self.field_value(m_lo, section)
        return m_lo + (((coordinate - 1) % n) - coordinate) * offset

    def transpose(self, d: int, m_hi: int, m_lo: int) -> Address:
        return (d, m_hi ^ 1, m_lo) if self.section(d) != 0 else (d, m_hi, m_lo)

    def address(self, d: int, m_hi: int, m_lo: int) -> Optional[Entry]:
        return self.occurrences.get((d, m_hi, m_lo))

    def all_addresses(self) -> Iterator[Address]:
        for d in range(self.D):
            for m_hi in (0, 1):
                for m_lo in range(self.N):
                    yield d, m_hi, m_lo

    def basis_index(self, d: int, m_hi: int, m_lo: int, data: int = 0, flag: int = 0, in_range: int = 0) -> int:
        """Basis index of the layout with the given register contents."""
        s_width = int(math.log2(self.S))
        j_width = 3 * self.grid.ell
        ancillas = (data << 2) | (flag << 1) | in_range
        return (ancillas << (s_width + j_width)) | (((d << 1) | m_hi) << j_width) | m_lo

    def decode(self, index: int) -> Dict[str, int]:
        j_width = 3 * self.grid.ell
        s_width = int(math.log2(self.S))
        s = (index >> j_width) & ((1 << s_width) - 1)
        ancillas = index >> (s_width + j_width)
        return {"data": (ancillas >> 2) & 1, "del": (ancillas >> 1) & 1, "in_range": ancillas & 1,
                "d": s >> 1, "m_hi": s & 1, "m_lo": index & ((1 << j_width) - 1)}


def build_label_scheme(census: ValueCensus, grid: GridSpec) -> LabelScheme:
    """
    Builds the bijection between in-range labels and nonzero entries of G'.

    Args:
        census: Census of the same instance.
        grid: Grid of the instance, ell >= 1.

    Returns:
        LabelScheme: Occurrence maps plus the register layout.
    """
    if census.grid.N != grid.N or census.lookup.shape[1] != grid.N:
        raise DomainError(f"Census for N={census.grid.N} does not match grid with N={grid.N}")
    if grid.ell < 1:
        raise DomainError("Block encoding needs at least two cells per axis (ell >= 1)")

    n = grid.n
    occurrences: Dict[Address, Entry] = {}
    for t, direction in enumerate(BANDS):
        offset = 0 if direction is None else direction.offset(n)
        for a in range(grid.N):
            d = int(census.lookup[t, a])
            if d == NO_LABEL:
                continue
            b = a + offset
            if t == DIAGONAL_BAND or offset < 0:
                key = (d, 0, a)
            else:
                key = (d, 1, b)
            if key in occurrences:
                raise DomainError(f"Label collision at {key}: {occurrences[key]} and {(a, b)}")
            occurrences[key] = (a, b)
    positions = {entry: key for key, entry in occurrences.items()}

    layout = block_encoding_layout(grid.ell, census.D)
    scheme = LabelScheme(census=census, grid=grid, layout=layout, occurrences=occurrences, positions=positions)
    if scheme.M * scheme.D != scheme.N * scheme.S:
        raise DomainError("Padding identity M * D = N * S violated")
    if census.D_prime < NUM_SECTIONS:
        logger.warning(f"Only {census.D_prime} labels in use; some sections carry no entries")
    logger.info(f"Label scheme: N={grid.N}, D'={scheme.D_prime}, D={scheme.D}, M={scheme.M}, S={scheme.S}, "
                f"{len(occurrences)} occurrences, {layout.total_qubits} qubits")
    return scheme
