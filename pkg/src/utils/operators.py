from typing import Callable, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as sparse_linalg

from src.core.errors import DomainError

MatVec = Callable[[np.ndarray], np.ndarray]


def as_matvec(A) -> Tuple[MatVec, int]:
    """Returns (matvec, dimension) for dense arrays, scipy matrices and objects with a matvec."""
    if isinstance(A, np.ndarray) or sparse.issparse(A):
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DomainError(f"Operator must be square, got shape {A.shape}")
        return (lambda x: A @ x), A.shape[0]
    if isinstance(A, sparse_linalg.LinearOperator):
        return A.matvec, A.shape[0]
    if hasattr(A, "matvec") and hasattr(A, "shape"):
        return A.matvec, A.shape[0]
    raise DomainError(f"Cannot apply an operator of type {type(A).__name__}")


def to_dense(A) -> np.ndarray:
    """Dense copy of any supported operator."""
    if isinstance(A, np.ndarray):
        return np.array(A, dtype=float)
    if sparse.issparse(A):
        return A.toarray()
    if hasattr(A, "to_dense"):
        return A.to_dense()
    matvec, N = as_matvec(A)
    return np.column_stack([matvec(e) for e in np.eye(N)])
