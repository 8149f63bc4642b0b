import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.sparse import linalg as sparse_linalg

from src.config.config_manager import config_manager
from src.core.errors import ConvergenceError, DomainError
from src.features.operator.assembly import ScaledOperator
from src.features.solver.cg import cg_solve
from src.utils.operators import as_matvec

logger = logging.getLogger(__name__)


def _default_cap(N: int, max_iter: Optional[int]) -> int:
    if max_iter is not None:
        return max_iter
    return max(config_manager.get_int("NUMERICS", "cg_max_iter_factor", fallback=10) * N, 1000)


def _start_vector(N: int, seed: int) -> np.ndarray:
    x = np.random.default_rng(seed).standard_normal(N)
    return x / np.linalg.norm(x)


def spectral_norm(A, tol: Optional[float] = None, max_iter: Optional[int] = None, seed: int = 0) -> float:
    """
    Power-iteration estimate of ||A|| for a symmetric operator.

    Iterates on A^T A = A^2 so that eigenvalues +-lambda of equal magnitude
    share one dominant eigenspace. Stops once the relative residual
    ||A^2 x - sigma^2 x|| / sigma^2 of the unit iterate x drops to `tol`,
    with sigma^2 = x . A^2 x = ||A x||^2. The estimate sigma never exceeds ||A||.

    Raises:
        ConvergenceError: With the best estimate and last relative residual.
    """
    matvec, N = as_matvec(A)
    tol = config_manager.tolerance() if tol is None else tol
    max_iter = _default_cap(N, max_iter)
    x = _start_vector(N, seed)
    estimate = 0.0
    residual = np.inf
    for iteration in range(1, max_iter + 1):
        y = matvec(x)
        norm_y = float(np.linalg.norm(y))
        if norm_y == 0.0:
            # a random start only lands in the null space of the zero operator
            return 0.0
        z = matvec(y)
        rayleigh = norm_y ** 2
        residual = float(np.linalg.norm(z - rayleigh * x)) / rayleigh
        estimate = norm_y
        if residual <= tol:
            logger.debug(f"Power iteration converged in {iteration} iterations: {estimate:.10g}")
            return estimate
        x = z / np.linalg.norm(z)
    raise ConvergenceError(f"Power iteration did not converge in {max_iter} iterations (residual {residual:.3e})",
                           estimate=estimate, residual=residual, iterations=max_iter)


def min_eig_spd(A, tol: Optional[float] = None, max_iter: Optional[int] = None, seed: int = 0) -> float:
    """
    Inverse-iteration estimate of the smallest eigenvalue of an SPD operator.

    Each step solves A y = x with CG and takes the Rayleigh quotient of the
    normalized y.

    Raises:
        BreakdownError: CG met non-positive curvature (A is not SPD).
        ConvergenceError: Outer iteration cap reached.
    """
    matvec, N = as_matvec(A)
    tol = config_manager.tolerance() if tol is None else tol
    max_iter = _default_cap(N, max_iter)
    inner_tol = min(tol * 1e-2, 1e-10)
    precond = "jacobi" if hasattr(A, "diagonal") else "none"
    x = _start_vector(N, seed)
    estimate = np.inf
    change = np.inf
    for iteration in range(1, max_iter + 1):
        y = cg_solve(A, x, tol=inner_tol, precond=precond).x
        x = y / np.linalg.norm(y)
        rayleigh = float(x @ matvec(x))
        change = abs(rayleigh - estimate) / abs(rayleigh) if np.isfinite(estimate) else np.inf
        estimate = rayleigh
        if change <= tol:
            logger.debug(f"Inverse iteration converged in {iteration} iterations: {estimate:.10g}")
            return estimate
    raise ConvergenceError(f"Inverse iteration did not converge in {max_iter} iterations (change {change:.3e})",
                           estimate=estimate, residual=change, iterations=max_iter)


@dataclass
class SpectralReport:
    N: int
    lambda_max: float
    lambda_min: float
    spectral_norm: float
    K: float
    kappa_eff: float
    alpha: float
    tolerance: float
    method: str

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def condition_numbers(scaled: ScaledOperator, tol: Optional[float] = None) -> SpectralReport:
    """
    Condition number K of G and effective condition number alpha / lambda_min(G).

    Dense eigensolves are used up to [NUMERICS] dense_threshold; above it,
    Lanczos gives lambda_max and inverse iteration gives lambda_min.
    """
    tol = config_manager.tolerance() if tol is None else tol
    G = scaled.original if scaled.original is not None else scaled.op.scaled(scaled.alpha)
    if G.N <= config_manager.dense_threshold():
        eigenvalues = np.linalg.eigvalsh(G.to_dense())
        lambda_min, lambda_max = float(eigenvalues[0]), float(eigenvalues[-1])
        method = "dense"
    else:
        lambda_max = float(sparse_linalg.eigsh(G.to_scipy(), k=1, which="LA", tol=tol,
                                               return_eigenvectors=False)[0])
        lambda_min = min_eig_spd(G, tol=tol)
        method = "iterative"
    if lambda_min <= 0:
        raise DomainError(f"Operator is not positive definite (lambda_min = {lambda_min:.3e})")
    report = SpectralReport(
        N=G.N, lambda_max=lambda_max, lambda_min=lambda_min, spectral_norm=lambda_max,
        K=lambda_max / lambda_min, kappa_eff=scaled.alpha / lambda_min, alpha=scaled.alpha,
        tolerance=tol, method=method,
    )
    logger.info(f"N={G.N}: lambda_min={lambda_min:.6g}, lambda_max={lambda_max:.6g}, "
                f"K={report.K:.6g}, kappa_eff={report.kappa_eff:.6g} ({method})")
    return report


@dataclass
class PoincareTable:
    rows: List[Dict[str, float]] = field(default_factory=list)
    plateau_ratio: float = float("nan")
    decaying: bool = False


def poincare_check(instances: Sequence[ScaledOperator], k_mins: Sequence[float],
                   tol: Optional[float] = None) -> PoincareTable:
    """
    Reports lambda_min(G) and the implied constant C^2 = k_min / lambda_min under mesh refinement.

    Args:
        instances: Refinements of one physical domain, ordered by increasing N.
        k_mins: Smallest cell permeability of each instance.
        tol: Eigensolver tolerance.

    Returns:
        PoincareTable: Rows {N, lambda_min, k_min, C_squared}, the max/min
        plateau ratio and whether lambda_min is decaying toward zero.
    """
    if len(instances) != len(k_mins):
        raise DomainError("Need one k_min per instance")
    if len({inst.grid.L for inst in instances}) > 1:
        raise DomainError("Poincare check needs a fixed physical side length across instances")
    table = PoincareTable()
    for scaled, k_min in zip(instances, k_mins):
        lambda_min = condition_numbers(scaled, tol).lambda_min
        table.rows.append({"N": scaled.grid.N, "lambda_min": lambda_min, "k_min": float(k_min),
                           "C_squared": float(k_min) / lambda_min})
    values = np.array([row["lambda_min"] for row in table.rows])
    if values.size:
        table.plateau_ratio = float(values.max() / values.min())
    if values.size >= 3:
        last = values[-3:]
        table.decaying = bool(np.all(np.diff(last) < 0) and last[0] / last[-1] > 2.0)
    if table.decaying:
        logger.warning(f"lambda_min decays under refinement: {values.tolist()}")
    return table
