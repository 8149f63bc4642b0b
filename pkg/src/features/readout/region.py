import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from src.core.errors import DomainError
from src.core.grid import linear_index, shift_index_bits
from src.features.circuits.ir import Circuit, Hadamard, PauliX, RegisterLayout, pattern_controls
from src.features.circuits.simulator import apply_to_state

logger = logging.getLogger(__name__)

AXIS_REGISTERS = ("x", "y", "z")


@dataclass(frozen=True)
class RegionObservable:
    """Uniform superposition over the cells covering one coarse cell after `steps` refinements."""

    base_cell: Tuple[int, int, int]
    base_level: int
    steps: int
    prep_circuit: Circuit
    support: Tuple[int, ...]

    @property
    def target_level(self) -> int:
        return self.base_level + self.steps

    @property
    def amplitude(self) -> float:
        return 8.0 ** (-self.steps / 2)

    @property
    def dimension(self) -> int:
        return 1 << (3 * self.target_level)

    def state(self) -> np.ndarray:
        """The prepared state, built from the support."""
        phi = np.zeros(self.dimension)
        phi[list(self.support)] = self.amplitude
        return phi

    def simulate(self) -> np.ndarray:
        """The prepared state, obtained by running prep_circuit on |0...0>."""
        zero = np.zeros(self.dimension, dtype=complex)
        zero[0] = 1.0
        return apply_to_state(self.prep_circuit, zero)


def region_layout(level: int) -> RegisterLayout:
    return RegisterLayout([(name, level) for name in AXIS_REGISTERS])


def region_state_prep(i: int, j: int, k: int, ell: int, steps: int = 0) -> RegionObservable:
    """
    Prepares the indicator state of cell (i, j, k) of the level-ell grid on the level ell + steps grid.

    Each doubling inserts a zero bit below each axis field of the cell index;
    X gates write the shifted index and one Hadamard per axis field spreads
    every inserted bit, so one doubling costs three qubits and three Hadamards.

    Args:
        i, j, k: Coarse cell coordinates.
        ell: Coarse level, n = 2^ell.
        steps: Number of doublings t >= 0.

    Returns:
        RegionObservable: Circuit on 3 (ell + steps) qubits with its support.

    Raises:
        DomainError: Cell outside the grid or negative steps.
    """
    if steps < 0:
        raise DomainError(f"Refinement steps must be nonnegative, got {steps}")
    if ell < 0:
        raise DomainError(f"Level must be nonnegative, got {ell}")
    r = linear_index(i, j, k, 1 << ell)
    shifted = r
    for step in range(steps):
        shifted = shift_index_bits(shifted, ell + step)

    level = ell + steps
    layout = region_layout(level)
    all_qubits = layout.qubits(*AXIS_REGISTERS)
    gates = [PauliX(q) for q, bit in pattern_controls(all_qubits, shifted) if bit] if all_qubits else []
    for name in AXIS_REGISTERS:
        qubits = layout[name].qubits
        gates.extend(Hadamard(q) for q in qubits[len(qubits) - steps:])
    circuit = Circuit(layout, tuple(gates))

    n_fine = 1 << level
    corner = [(shifted >> (shift * level)) & (n_fine - 1) for shift in (2, 1, 0)]
    spread = range(1 << steps)
    support = sorted(
        linear_index(corner[0] + di, corner[1] + dj, corner[2] + dk, n_fine)
        for di in spread for dj in spread for dk in spread
    )
    logger.debug(f"Region prep for cell {(i, j, k)} at level {ell} + {steps}: "
                 f"{circuit.total_qubits} qubits, {len(support)} cells")
    return RegionObservable((i, j, k), ell, steps, circuit, tuple(support))


def _check_dimension(obs: RegionObservable, x: np.ndarray):
    if x.ndim != 1 or x.shape[0] != obs.dimension:
        raise DomainError(f"Vector of shape {x.shape} does not match the level-{obs.target_level} grid "
                          f"({obs.dimension} cells)")


def exact_overlap(obs: RegionObservable, x: np.ndarray) -> float:
    """<phi|x> for a real vector on the fine grid."""
    x = np.asarray(x, dtype=float)
    _check_dimension(obs, x)
    return obs.amplitude * float(np.sum(x[list(obs.support)]))


def region_average(obs: RegionObservable, x: np.ndarray) -> float:
    """Mean of x over the region; comparable across refinement levels."""
    return exact_overlap(obs, x) * obs.amplitude


def refine_source(b: np.ndarray, ell: int, steps: int = 1) -> np.ndarray:
    """Source density on the grid refined `steps` times, every child inheriting its parent's value."""
    b = np.asarray(b, dtype=float)
    n = 1 << ell
    if b.shape != (n ** 3,):
        raise DomainError(f"Source of shape {b.shape} does not match a level-{ell} grid")
    cube = b.reshape(n, n, n)
    factor = 1 << steps
    for axis in range(3):
        cube = np.repeat(cube, factor, axis=axis)
    return cube.ravel()


def hadamard_test_estimate(obs: RegionObservable, x_state: np.ndarray, shots: int,
                           seed: Optional[int] = None) -> Dict[str, float]:
    """
    Samples a Hadamard test of Re<phi|x> for the normalized state x.

    Outcome 0 (recorded as +1) occurs with probability (1 + Re<phi|x>) / 2.

    Returns:
        dict: estimate (mean of the +-1 outcomes), stderr (sample standard
        deviation over sqrt(shots)), exact, shots.
    """
    if shots < 1:
        raise DomainError(f"At least one shot is needed, got {shots}")
    x = np.asarray(x_state, dtype=complex)
    _check_dimension(obs, x)
    norm = np.linalg.norm(x)
    if norm == 0:
        raise DomainError("Cannot normalize the zero vector")
    exact = float(np.real(np.vdot(obs.state(), x / norm)))
    p_zero = min(max((1.0 + exact) / 2.0, 0.0), 1.0)

    rng = np.random.default_rng(seed)
    zeros = int(rng.binomial(shots, p_zero))
    estimate = (2 * zeros - shots) / shots
    if shots > 1:
        variance = max(1.0 - estimate ** 2, 0.0) * shots / (shots - 1)
        stderr = math.sqrt(variance / shots)
    else:
        stderr = 0.0
    logger.debug(f"Hadamard test: {zeros}/{shots} zeros, estimate {estimate:.6f} (exact {exact:.6f})")
    return {"estimate": estimate, "stderr": stderr, "exact": exact, "shots": shots}
