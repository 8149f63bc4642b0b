import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Union

import numpy as np

from src.core.errors import DomainError
from src.core.grid import GridSpec

logger = logging.getLogger(__name__)


class InterfaceRule(str, Enum):
    """How the permeability of a face between two cells is formed."""

    GEOMETRIC = "geometric"
    HARMONIC = "harmonic"

    @classmethod
    def parse(cls, value: Union[str, "InterfaceRule"]) -> "InterfaceRule":
        try:
            return cls(value)
        except ValueError:
            raise DomainError(f"Unknown interface rule {value!r}; expected one of {[r.value for r in cls]}") from None


@dataclass(frozen=True)
class CoefficientField:
    """Cell permeabilities on a cubic grid, stored in linear cell order."""

    grid: GridSpec
    cell_k: np.ndarray
    metadata: Dict[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        values = np.array(self.cell_k, dtype=float).reshape(-1)
        if values.size != self.grid.N:
            raise DomainError(f"Field has {values.size} values, grid needs {self.grid.N}")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise DomainError("Permeabilities must be finite and strictly positive")
        values.setflags(write=False)
        object.__setattr__(self, "cell_k", values)

    @property
    def k_min(self) -> float:
        return float(self.cell_k.min())

    @property
    def k_max(self) -> float:
        return float(self.cell_k.max())

    def distinct_values(self) -> np.ndarray:
        return np.unique(self.cell_k)

    def as_cube(self) -> np.ndarray:
        """View indexed [i, j, k]."""
        n = self.grid.n
        return self.cell_k.reshape(n, n, n)

    def scaled(self, factor: float) -> "CoefficientField":
        return CoefficientField(self.grid, self.cell_k * factor, dict(self.metadata))


def interface_value(ka, kb, rule: Union[str, InterfaceRule] = InterfaceRule.HARMONIC):
    """Face permeability between cells with values ka and kb.

    Works elementwise on arrays as well as on scalars.
    """
    rule = InterfaceRule.parse(rule)
    ka_arr = np.asarray(ka, dtype=float)
    kb_arr = np.asarray(kb, dtype=float)
    if np.any(ka_arr <= 0) or np.any(kb_arr <= 0):
        raise DomainError(f"Interface permeabilities need positive inputs, got {ka!r}, {kb!r}")
    if rule is InterfaceRule.GEOMETRIC:
        result = np.sqrt(ka_arr * kb_arr)
    else:
        result = 2.0 * ka_arr * kb_arr / (ka_arr + kb_arr)
    # Equal inputs must give the input back exactly.
    result = np.where(ka_arr == kb_arr, ka_arr, result)
    return float(result) if result.ndim == 0 else result


def constant_field(grid: GridSpec, k: float = 1.0) -> CoefficientField:
    if not k > 0:
        raise DomainError(f"Constant permeability must be positive, got {k}")
    return CoefficientField(grid, np.full(grid.N, float(k)), {"field": "constant", "k": float(k)})


def field_from_rule(grid: GridSpec, rule: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]) -> CoefficientField:
    """Evaluates an arithmetic rule k(i, j, k) on every cell.

    Args:
        grid: Target grid.
        rule: Vectorized callable receiving integer index arrays (i, j, k).

    Returns:
        CoefficientField: The evaluated field.
    """
    i, j, k = np.meshgrid(*(np.arange(grid.n),) * 3, indexing="ij")
    values = np.broadcast_to(np.asarray(rule(i, j, k), dtype=float), i.shape)
    logger.debug(f"Evaluated field rule on {grid.N} cells")
    return CoefficientField(grid, values.reshape(-1), {"field": "rule"})
