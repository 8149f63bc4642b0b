import logging
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from src.config.config_manager import config_manager
from src.core.errors import BreakdownError, ConvergenceError, DomainError
from src.core.grid import GridSpec
from src.utils.operators import as_matvec

logger = logging.getLogger(__name__)

PRECONDITIONERS = ("none", "jacobi", "inverse_laplacian")


@dataclass(frozen=True)
class SolveResult:
    x: np.ndarray
    iterations: int
    relative_residual: float
    preconditioner: str


def _preconditioner(A, precond: Union[str, Callable], N: int) -> Callable[[np.ndarray], np.ndarray]:
    if callable(precond):
        return precond
    if precond == "none":
        return lambda r: r
    if precond == "jacobi":
        if hasattr(A, "diagonal"):
            diag = np.asarray(A.diagonal(), dtype=float)
        else:
            matvec, _ = as_matvec(A)
            diag = np.array([matvec(e)[i] for i, e in enumerate(np.eye(N))])
        if np.any(diag <= 0):
            raise DomainError("Jacobi preconditioning needs a positive diagonal")
        inv_diag = 1.0 / diag
        return lambda r: inv_diag * r
    if precond == "inverse_laplacian":
        from src.features.spectral.fast_inverse import fast_inverse_laplacian_3d

        grid = getattr(A, "grid", None) or GridSpec.from_cells(round(N ** (1 / 3)))
        return fast_inverse_laplacian_3d(grid.n).matvec
    raise DomainError(f"Unknown preconditioner {precond!r}; expected one of {PRECONDITIONERS}")


def cg_solve(G, b: np.ndarray, tol: Optional[float] = None, max_iter: Optional[int] = None,
             precond: Union[str, Callable] = "none") -> SolveResult:
    """
    Preconditioned conjugate gradient from the zero initial guess.

    Args:
        G: Symmetric positive definite operator (SparseOperator, array or LinearOperator).
        b: Nonzero right-hand side.
        tol: Relative residual target ||G x - b|| / ||b||.
        max_iter: Iteration cap, cg_max_iter_factor * N by default.
        precond: "none", "jacobi", "inverse_laplacian" or a callable applying M.

    Returns:
        SolveResult: Solution, iterations, achieved relative residual and preconditioner tag.

    Raises:
        BreakdownError: A search direction with non-positive curvature was met.
        ConvergenceError: The cap was reached; carries the best iterate.
    """
    matvec, N = as_matvec(G)
    b = np.asarray(b, dtype=float)
    if b.shape != (N,):
        raise DomainError(f"Right-hand side of shape {b.shape} does not match dimension {N}")
    norm_b = np.linalg.norm(b)
    if norm_b == 0:
        raise DomainError("Right-hand side must be nonzero")
    tol = config_manager.tolerance() if tol is None else tol
    if max_iter is None:
        max_iter = config_manager.get_int("NUMERICS", "cg_max_iter_factor", fallback=10) * N
    tag = precond if isinstance(precond, str) else getattr(precond, "__name__", "custom")
    apply_m = _preconditioner(G, precond, N)

    x = np.zeros(N)
    r = b.copy()
    z = apply_m(r)
    p = z.copy()
    gamma = float(r @ z)
    best_x, best_res = x.copy(), 1.0

    for iteration in range(1, max_iter + 1):
        Ap = matvec(p)
        curvature = float(p @ Ap)
        if curvature <= 0:
            raise BreakdownError(f"CG breakdown at iteration {iteration}: p^T A p = {curvature:.3e}",
                                 best=best_x, residual=best_res, iterations=iteration)
        step = gamma / curvature
        x += step * p
        r -= step * Ap
        res = np.linalg.norm(r) / norm_b
        if res < best_res:
            best_x, best_res = x.copy(), res
        if res <= tol:
            logger.debug(f"CG ({tag}) converged in {iteration} iterations, residual {res:.3e}")
            return SolveResult(x=x, iterations=iteration, relative_residual=float(res), preconditioner=tag)
        z = apply_m(r)
        gamma_old = gamma
        gamma = float(r @ z)
        p = z + (gamma / gamma_old) * p

    raise ConvergenceError(f"CG ({tag}) did not reach {tol:.1e} within {max_iter} iterations (best {best_res:.3e})",
                           best=best_x, residual=best_res, iterations=max_iter)
