import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.config.config_manager import config_manager
from src.core.errors import ConvergenceError, DomainError
from src.features.operator.assembly import SparseOperator, build_source
from src.features.solver.cg import cg_solve
from src.utils.fitting import fit_power_through_origin, loglog_slope

logger = logging.getLogger(__name__)

TREND_EXPONENT = 0.2


def epsilon_metric(x: np.ndarray, zero_tol: Optional[float] = None) -> float:
    """Smallest relative magnitude |x_i| / ||x|| among entries above zero_tol * ||x||."""
    x = np.asarray(x, dtype=float)
    zero_tol = config_manager.get_float("NUMERICS", "zero_tol", fallback=1e-12) if zero_tol is None else zero_tol
    norm = np.linalg.norm(x)
    if norm == 0:
        raise DomainError("epsilon metric of the zero vector is undefined")
    magnitudes = np.abs(x) / norm
    kept = magnitudes[magnitudes > zero_tol]
    if kept.size == 0:
        raise DomainError(f"All entries fall below zero_tol={zero_tol}")
    return float(kept.min())


@dataclass
class EpsilonSweep:
    rows: List[Dict[str, object]] = field(default_factory=list)
    summaries: List[Dict[str, float]] = field(default_factory=list)
    trend_coefficient: float = float("nan")
    growth_exponent: float = float("nan")
    sublinear: Optional[bool] = None  # undecided below two levels
    failures: int = 0


def draw_generator(seed: int, level: int, draw: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(level, draw)))


def _solve_draw(operator: SparseOperator, level: int, draw: int, sites: int, seed: int, tol: float) -> Dict[str, object]:
    b = build_source(operator.grid, count=sites, seed=draw_generator(seed, level, draw))
    row = {"N": operator.N, "draw": draw}
    try:
        result = cg_solve(operator, b, tol=tol, precond="jacobi")
    except ConvergenceError as e:
        logger.warning(f"Draw {draw} at N={operator.N} failed: {e}")
        row.update({"epsilon": float("nan"), "log_inv_epsilon": float("nan"), "iterations": e.iterations, "failed": True})
        return row
    eps = epsilon_metric(result.x)
    row.update({"epsilon": eps, "log_inv_epsilon": float(np.log(1.0 / eps)), "iterations": result.iterations, "failed": False})
    return row


def epsilon_sweep(operators: Sequence[SparseOperator], draws: int, sites: int, seed: int,
                  tol: Optional[float] = None, workers: int = 1) -> EpsilonSweep:
    """
    Runs `draws` random-source solves per operator and summarizes log(1/eps) per N.

    Rows come back in (level, draw) order regardless of worker scheduling.
    The trend check fits log(1/eps) = c * N**0.2 through the origin on the level
    means; growth is sublinear in N**0.2 when the largest-N mean is on or below the fit.
    With fewer than two summarized levels no trend is fitted and `sublinear` stays None.
    """
    if draws < 1:
        raise DomainError(f"Need at least one draw, got {draws}")
    tol = config_manager.tolerance() if tol is None else tol
    jobs = [(level, op, draw) for level, op in enumerate(operators) for draw in range(draws)]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(lambda job: _solve_draw(job[1], job[0], job[2], sites, seed, tol), jobs))

    sweep = EpsilonSweep(rows=rows, failures=sum(1 for r in rows if r["failed"]))
    for op in operators:
        values = np.array([r["log_inv_epsilon"] for r in rows if r["N"] == op.N and not r["failed"]])
        if values.size:
            sweep.summaries.append({"N": op.N, "mean": float(values.mean()), "std": float(values.std()), "draws": int(values.size)})

    if len(sweep.summaries) >= 2:
        N = np.array([s["N"] for s in sweep.summaries], dtype=float)
        means = np.array([s["mean"] for s in sweep.summaries])
        sweep.trend_coefficient = fit_power_through_origin(N, means, TREND_EXPONENT)
        sweep.growth_exponent = loglog_slope(N, means)
        sweep.sublinear = bool(means[-1] <= sweep.trend_coefficient * N[-1] ** TREND_EXPONENT)
        logger.info(f"Epsilon sweep: c={sweep.trend_coefficient:.4g}, slope={sweep.growth_exponent:.4g}, "
                    f"sublinear in N^{TREND_EXPONENT}: {sweep.sublinear}")
    return sweep
