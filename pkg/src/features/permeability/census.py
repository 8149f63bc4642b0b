import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from src.config.config_manager import config_manager
from src.core.errors import DomainError
from src.core.grid import DIRECTIONS, Direction, GridSpec
from src.features.operator.assembly import (
    BoundaryMode, ScaledOperator, assemble_G, band_index, gershgorin_alpha, rescale,
)
from src.features.permeability.coefficients import CoefficientField, InterfaceRule, interface_value
from src.features.permeability.fractures import pitchfork3d, rasterize

logger = logging.getLogger(__name__)

# Sections 00 (diagonal), 01 (+-1), 10 (+-n), 11 (+-n^2) as band indices.
SECTION_BANDS: Tuple[Tuple[int, ...], ...] = (
    (band_index(None),),
    (band_index(Direction.MINUS_Z), band_index(Direction.PLUS_Z)),
    (band_index(Direction.MINUS_Y), band_index(Direction.PLUS_Y)),
    (band_index(Direction.MINUS_X), band_index(Direction.PLUS_X)),
)
NUM_SECTIONS = len(SECTION_BANDS)
NO_LABEL = -1


def padded_label_count(D_prime: int) -> int:
    """Smallest power of two that is at least D_prime."""
    if D_prime < 1:
        raise DomainError(f"Label count must be positive, got {D_prime}")
    return 1 << math.ceil(math.log2(D_prime))


def cluster_values(values: np.ndarray, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """Groups sorted values whose consecutive gaps are at most `tol`.

    Returns:
        Tuple of (cluster representatives ascending, cluster id per input value).
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return np.empty(0), np.empty(0, dtype=int)
    order = np.argsort(values, kind="stable")
    ordered = values[order]
    starts = np.concatenate([[True], np.diff(ordered) > tol])
    ids_sorted = np.cumsum(starts) - 1
    ids = np.empty_like(ids_sorted)
    ids[order] = ids_sorted
    representatives = np.array([ordered[ids_sorted == c].mean() for c in range(ids_sorted[-1] + 1)])
    return representatives, ids


@dataclass(frozen=True)
class ValueCensus:
    """Distinct-value census of a rescaled operator G'.

    Labels are d = (section << value_bits) | value_index; `lookup[t, a]` is the
    label of entry (a, a + offset_t) in band t, NO_LABEL where that entry is zero.
    """

    grid: GridSpec
    F: int
    interface_values: np.ndarray
    D_init: int
    D_prime: int
    D: int
    value_table: Dict[int, float]
    lookup: np.ndarray
    section_values: Tuple[Tuple[float, ...], ...]

    @property
    def value_bits(self) -> int:
        return int(math.log2(self.D)) - 2

    def make_label(self, section: int, index: int) -> int:
        return (section << self.value_bits) | index

    @staticmethod
    def section_of_label(d: int, value_bits: int) -> int:
        return d >> value_bits

    def section_of(self, d: int) -> int:
        return self.section_of_label(d, self.value_bits)

    def label(self, a: int, direction: Optional[Direction] = None) -> int:
        """Label of entry (a, neighbor of a in `direction`); direction None is the diagonal."""
        return int(self.lookup[band_index(direction), a])

    def assigned_labels(self, section: Optional[int] = None) -> List[int]:
        labels = sorted(self.value_table)
        if section is None:
            return labels
        return [d for d in labels if self.section_of(d) == section]

    def unassigned_labels(self) -> List[int]:
        return [d for d in range(self.D) if d not in self.value_table]

    def summary(self) -> Dict[str, int]:
        return {"F": self.F, "D_init": self.D_init, "D_prime": self.D_prime, "D": self.D}


def _interface_values(field: CoefficientField, rule) -> np.ndarray:
    n = field.grid.n
    k = field.cell_k
    cells = np.arange(field.grid.N)
    coords = np.indices((n, n, n)).reshape(3, -1)
    faces = []
    for direction in DIRECTIONS:
        moved = coords[direction.axis] + direction.sign
        mask = (moved >= 0) & (moved < n)
        inside = cells[mask]
        faces.append(np.atleast_1d(interface_value(k[inside], k[inside + direction.offset(n)], rule)) if inside.size else np.empty(0))
        faces.append(k[~mask])
    return np.unique(np.concatenate(faces))


def scaled_instance(field: CoefficientField, rule: Union[str, InterfaceRule] = InterfaceRule.HARMONIC,
                    boundary: Optional[BoundaryMode] = None, check_norm: bool = True) -> ScaledOperator:
    """Assembles G for `field` and rescales it by the Gershgorin subnormalization."""
    boundary = boundary or BoundaryMode.ghost()
    G = assemble_G(field, rule=rule, boundary=boundary)
    alpha = gershgorin_alpha(field)
    if boundary.kind == "identity_rows" and alpha < 1.0:
        # unit rows must stay inside the unit ball
        alpha = 1.0
    return rescale(G, alpha, check_norm=check_norm)


def census(field: CoefficientField, rule: Union[str, InterfaceRule] = InterfaceRule.HARMONIC,
           boundary: Optional[BoundaryMode] = None, scaled: Optional[ScaledOperator] = None,
           value_rtol: Optional[float] = None) -> ValueCensus:
    """
    Censuses the distinct nonzero values of G' by section.

    Args:
        field: Coefficient field of the instance.
        rule: Interface averaging rule.
        boundary: Boundary treatment.
        scaled: Already rescaled operator for this field; assembled when omitted.
        value_rtol: Relative tolerance under which two values count as one.

    Returns:
        ValueCensus: Counts, labels and the (row, direction) -> label lookup.
    """
    if scaled is None:
        scaled = scaled_instance(field, rule, boundary)
    if scaled.grid.N != field.grid.N:
        raise DomainError(f"Operator with N={scaled.grid.N} does not belong to the field with N={field.grid.N}")
    bands = scaled.op.bands
    value_rtol = config_manager.value_rtol() if value_rtol is None else value_rtol
    tol = value_rtol * float(np.max(np.abs(bands)))

    nonzero = bands[bands != 0]
    D_init = len(cluster_values(nonzero, tol)[0])

    section_reps = []
    section_ids = []
    for section_bands in SECTION_BANDS:
        values = np.concatenate([bands[t][bands[t] != 0] for t in section_bands])
        reps, ids = cluster_values(values, tol)
        section_reps.append(reps)
        section_ids.append(ids)

    counts = [len(reps) for reps in section_reps]
    D_prime = sum(counts)
    D = max(padded_label_count(D_prime), NUM_SECTIONS * padded_label_count(max(max(counts), 1)))
    value_bits = int(math.log2(D)) - 2

    lookup = np.full(bands.shape, NO_LABEL, dtype=int)
    value_table: Dict[int, float] = {}
    for section, (section_bands, reps, ids) in enumerate(zip(SECTION_BANDS, section_reps, section_ids)):
        for index, value in enumerate(reps):
            if abs(value) > 1.0 + 1e-12:
                raise DomainError(f"Rescaled value {value} outside [-1, 1]; normalization is broken upstream")
            value_table[(section << value_bits) | index] = float(value)
        start = 0
        for t in section_bands:
            positions = np.flatnonzero(bands[t])
            lookup[t, positions] = (section << value_bits) | ids[start:start + positions.size]
            start += positions.size

    interface = _interface_values(field, rule)
    result = ValueCensus(
        grid=field.grid, F=int(len(field.distinct_values())), interface_values=interface,
        D_init=D_init, D_prime=D_prime, D=D, value_table=value_table, lookup=lookup,
        section_values=tuple(tuple(float(v) for v in reps) for reps in section_reps),
    )
    logger.info(f"Census: F={result.F}, D_init={D_init}, D'={D_prime}, D={D}, section counts={counts}")
    return result


def census_sweep(grid: GridSpec, F_values: Iterable[int], beta: float = 2.0, k_bg: float = 1e-4,
                 rule: Union[str, InterfaceRule] = InterfaceRule.HARMONIC) -> List[Dict[str, int]]:
    """D-versus-F table for pitchfork fields on a fixed grid."""
    rows = []
    for F in F_values:
        field = rasterize(pitchfork3d(grid, F, beta=beta, k_bg=k_bg), grid)
        result = census(field, rule, scaled=scaled_instance(field, rule, check_norm=False))
        rows.append({"F": F, "cell_values": result.F, "D_init": result.D_init,
                     "D_prime": result.D_prime, "D": result.D})
    return rows
