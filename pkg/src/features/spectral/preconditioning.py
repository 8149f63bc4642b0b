import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.config.config_manager import config_manager
from src.core.errors import DomainError, PreconditionViolation, VerificationFailure
from src.utils.operators import to_dense

logger = logging.getLogger(__name__)


@dataclass
class PrecondBoundReport:
    N: int
    alpha_A: float
    alpha_M: float
    norm_AinvMinv: float
    kappa_composed: float
    K_A: float
    K_MA: float
    slack: float
    holds: bool

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def _singular_values(matrix: np.ndarray) -> np.ndarray:
    return np.linalg.svd(matrix, compute_uv=False)


def precond_lower_bound(A, M, alpha_A: Optional[float] = None, alpha_M: Optional[float] = None,
                        tol: float = 1e-10, strict: bool = True) -> PrecondBoundReport:
    """
    Evaluates the composed effective condition number alpha_A * alpha_M * ||A^-1 M^-1||
    of a preconditioned system against K(A).

    Subnormalizations default to the tight values ||A|| and ||M||.

    Args:
        A: System operator.
        M: Preconditioner operator.
        alpha_A: Subnormalization of A, at least ||A||.
        alpha_M: Subnormalization of M, at least ||M||.
        tol: Relative tolerance on the slack, in units of K(A).
        strict: Raise when the slack falls below -tol * K(A).

    Returns:
        PrecondBoundReport: All four norms, the slack, and K(MA) for reference.

    Raises:
        PreconditionViolation: A subnormalization is below the operator norm.
        VerificationFailure: The bound fails (only with `strict`).
    """
    A_d = to_dense(A)
    M_d = to_dense(M)
    N = A_d.shape[0]
    if M_d.shape != A_d.shape:
        raise DomainError(f"Operator shapes differ: {A_d.shape} vs {M_d.shape}")
    if N > config_manager.dense_threshold():
        raise DomainError(f"Dense bound evaluation limited to N <= {config_manager.dense_threshold()}, got {N}")

    sv_A = _singular_values(A_d)
    sv_M = _singular_values(M_d)
    sv_MA = _singular_values(M_d @ A_d)
    norm_A, norm_M = float(sv_A[0]), float(sv_M[0])
    alpha_A = norm_A if alpha_A is None else float(alpha_A)
    alpha_M = norm_M if alpha_M is None else float(alpha_M)
    for name, alpha, norm in (("alpha_A", alpha_A, norm_A), ("alpha_M", alpha_M, norm_M)):
        if alpha < norm * (1 - 1e-12):
            raise PreconditionViolation(f"{name}={alpha:.12g} is below the operator norm {norm:.12g}")

    norm_AinvMinv = float(1.0 / sv_MA[-1])
    K_A = float(sv_A[0] / sv_A[-1])
    kappa_composed = alpha_A * alpha_M * norm_AinvMinv
    slack = kappa_composed - K_A
    report = PrecondBoundReport(
        N=N, alpha_A=alpha_A, alpha_M=alpha_M, norm_AinvMinv=norm_AinvMinv,
        kappa_composed=kappa_composed, K_A=K_A, K_MA=float(sv_MA[0] / sv_MA[-1]),
        slack=slack, holds=bool(slack >= -tol * K_A),
    )
    logger.debug(f"Bound check N={N}: kappa_composed={kappa_composed:.6g}, K_A={K_A:.6g}, slack={slack:.3e}")
    if strict and not report.holds:
        raise VerificationFailure(f"Composed condition number {kappa_composed:.12g} below K(A)={K_A:.12g}")
    return report


def random_spd_pair(dim: int, rng: np.random.Generator, max_log10_cond: float = 4.0) -> Tuple[np.ndarray, np.ndarray]:
    """Two random SPD matrices with log-uniform spectra up to 10**max_log10_cond."""
    if dim < 1:
        raise DomainError(f"Dimension must be positive, got {dim}")

    def spd() -> np.ndarray:
        q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        eigenvalues = 10.0 ** rng.uniform(0.0, max_log10_cond, size=dim)
        matrix = (q * eigenvalues) @ q.T
        return (matrix + matrix.T) / 2

    return spd(), spd()


@dataclass
class PairSweepSummary:
    count: int
    max_dim: int
    min_relative_slack: float
    all_hold: bool
    reports: List[PrecondBoundReport]


def random_pair_sweep(count: int, max_dim: int, seed: int, tol: float = 1e-10) -> PairSweepSummary:
    """Checks the bound on `count` random SPD pairs of dimension 2..max_dim with tight subnormalizations."""
    if max_dim < 2:
        raise DomainError(f"max_dim must be at least 2, got {max_dim}")
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(count):
        dim = int(rng.integers(2, max_dim + 1))
        A, M = random_spd_pair(dim, rng)
        reports.append(precond_lower_bound(A, M, tol=tol, strict=False))
    relative = [r.slack / r.K_A for r in reports]
    summary = PairSweepSummary(
        count=count, max_dim=max_dim, min_relative_slack=float(min(relative)) if relative else float("nan"),
        all_hold=all(r.holds for r in reports), reports=reports,
    )
    logger.info(f"Random pair sweep: {count} pairs, min relative slack {summary.min_relative_slack:.3e}, "
                f"all hold: {summary.all_hold}")
    return summary
