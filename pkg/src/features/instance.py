import logging
from dataclasses import dataclass
from typing import Dict, Optional

from src.config.experiment_config import InstanceSpec
from src.core.errors import DomainError
from src.core.grid import GridSpec
from src.features.operator.assembly import BoundaryMode, ScaledOperator
from src.features.permeability.census import ValueCensus, census, scaled_instance
from src.features.permeability.coefficients import CoefficientField, InterfaceRule, constant_field
from src.features.permeability.fractures import FractureNetwork, pitchfork3d, rasterize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Instance:
    """One configured problem: field, rescaled operator and its value census."""

    spec: InstanceSpec
    grid: GridSpec
    field: CoefficientField
    boundary: BoundaryMode
    rule: InterfaceRule
    scaled: ScaledOperator
    network: Optional[FractureNetwork] = None
    _census: Optional[ValueCensus] = None

    @property
    def G(self):
        return self.scaled.original

    def census(self) -> ValueCensus:
        if self._census is None:
            object.__setattr__(self, "_census", census(self.field, self.rule, self.boundary, scaled=self.scaled))
        return self._census


def build_field(spec: InstanceSpec, grid: GridSpec):
    if spec.field == "constant":
        return constant_field(grid, spec.k), None
    if spec.field == "pitchfork":
        network = pitchfork3d(grid, spec.F, beta=spec.beta, k_bg=spec.k_bg)
        return rasterize(network, grid), network
    raise DomainError(f"Unknown field kind {spec.field!r}")


def build_instance(spec: InstanceSpec, check_norm: bool = True) -> Instance:
    grid = GridSpec(ell=spec.ell, L=spec.L)
    field, network = build_field(spec, grid)
    boundary = (BoundaryMode.identity_rows(spec.identity_rows) if spec.boundary == "identity_rows"
                else BoundaryMode.ghost())
    rule = InterfaceRule.parse(spec.rule)
    scaled = scaled_instance(field, rule, boundary, check_norm=check_norm)
    logger.info(f"Built {spec.field} instance: ell={spec.ell}, N={grid.N}, alpha={scaled.alpha:.6g}")
    return Instance(spec=spec, grid=grid, field=field, boundary=boundary, rule=rule, scaled=scaled, network=network)


def instance_descriptor(instance: Instance) -> Dict[str, object]:
    """Metadata written next to exported matrices."""
    spec = instance.spec
    grid = instance.grid
    return {
        "ell": grid.ell, "n": grid.n, "N": grid.N, "L": grid.L, "dx": grid.dx,
        "field": spec.field, "F": spec.F if spec.field == "pitchfork" else 1,
        "beta": spec.beta, "k_bg": spec.k_bg, "rule": instance.rule.value,
        "boundary": instance.boundary.describe(),
        "alpha": instance.scaled.alpha, "a_max": instance.scaled.a_max,
        "k_max": instance.field.k_max, "k_min": instance.field.k_min,
    }
