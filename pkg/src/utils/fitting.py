import logging
from typing import Sequence, Tuple

import numpy as np
from scipy import optimize

from src.core.errors import DomainError

logger = logging.getLogger(__name__)


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log(y) against log(x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("Log-log fit needs at least two strictly positive points")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def fit_power_through_origin(x: Sequence[float], y: Sequence[float], exponent: float) -> float:
    """Coefficient c minimizing sum (y - c * x**exponent)**2."""
    basis = np.asarray(x, dtype=float) ** exponent
    return float(basis @ np.asarray(y, dtype=float) / (basis @ basis))


def nonnegative_fit(design: np.ndarray, target: Sequence[float]) -> Tuple[np.ndarray, float]:
    """Non-negative least squares; returns coefficients and ||design @ c - target|| / ||target||."""
    design = np.asarray(design, dtype=float)
    target = np.asarray(target, dtype=float)
    coefficients, residual = optimize.nnls(design, target)
    relative = float(residual / np.linalg.norm(target)) if np.any(target) else 0.0
    logger.debug(f"NNLS fit coefficients {coefficients}, relative residual {relative:.3g}")
    return coefficients, relative
