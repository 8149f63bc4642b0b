import logging

import numpy as np
from scipy import fft, sparse
from scipy.sparse import linalg as sparse_linalg

from src.core.errors import DomainError

logger = logging.getLogger(__name__)


def _half_angle_sines(n: int) -> np.ndarray:
    """sin(k*pi / (2(n+1))) for k = 1..n."""
    return np.sin(np.arange(1, n + 1) * np.pi / (2 * (n + 1)))


def laplacian_eigs_2d(n: int) -> np.ndarray:
    """
    Eigenvalues of the rescaled 2D Dirichlet Laplacian, indexed [kx-1, ky-1].

    lambda = -(sin^2(kx*pi/(2(n+1))) + sin^2(ky*pi/(2(n+1)))) / (2 sin^2(pi/(2(n+1)))),
    so the smallest magnitude, at (1, 1), is exactly 1.
    """
    if n < 1:
        raise DomainError(f"Grid size must be at least 1, got {n}")
    s2 = _half_angle_sines(n) ** 2
    return -(s2[:, None] + s2[None, :]) / (2 * s2[0])


def laplacian_eigs_3d(n: int) -> np.ndarray:
    """Eigenvalues of the positive 3D Dirichlet Laplacian rescaled so the smallest is 1, indexed [kx-1, ky-1, kz-1]."""
    if n < 1:
        raise DomainError(f"Grid size must be at least 1, got {n}")
    s2 = _half_angle_sines(n) ** 2
    return (s2[:, None, None] + s2[None, :, None] + s2[None, None, :]) / (3 * s2[0])


def laplacian_5point_2d(n: int, rescaled: bool = True) -> sparse.csr_matrix:
    """2D 5-point Laplacian on an n x n interior grid, cell (i, j) at index j + i*n.

    With `rescaled`, this is the operator whose spectrum is laplacian_eigs_2d(n);
    otherwise it is the unit-spacing negative Laplacian (diagonal 4).
    """
    if n < 1:
        raise DomainError(f"Grid size must be at least 1, got {n}")
    T = sparse.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1])
    I = sparse.identity(n)
    L = (sparse.kron(T, I) + sparse.kron(I, T)).tocsr()
    if rescaled:
        L = -L / (8 * _half_angle_sines(n)[0] ** 2)
    return L


class FastInverseLaplacian:
    """Applies a Dirichlet Laplacian inverse by diagonalizing in the sine basis.

    The orthonormal type-I sine transform is its own inverse, so the action is
    V diag(1/lambda) V on the grid-shaped vector.
    """

    def __init__(self, eigenvalues: np.ndarray):
        self.eigenvalues = eigenvalues
        self.grid_shape = eigenvalues.shape
        self.dim = int(eigenvalues.size)
        self.shape = (self.dim, self.dim)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape[0] != self.dim:
            raise DomainError(f"Vector of length {x.shape[0]} does not match dimension {self.dim}")
        if x.ndim == 2:
            return np.column_stack([self.matvec(column) for column in x.T])
        axes = tuple(range(len(self.grid_shape)))
        grid = x.reshape(self.grid_shape)
        coefficients = fft.dstn(grid, type=1, axes=axes, norm="ortho") / self.eigenvalues
        return fft.dstn(coefficients, type=1, axes=axes, norm="ortho").reshape(-1)

    def norm(self) -> float:
        return float(1.0 / np.min(np.abs(self.eigenvalues)))

    def to_dense(self) -> np.ndarray:
        return self.matvec(np.eye(self.dim))

    def as_linear_operator(self) -> sparse_linalg.LinearOperator:
        return sparse_linalg.LinearOperator(self.shape, matvec=self.matvec, rmatvec=self.matvec, dtype=float)


def fast_inverse_laplacian_2d(n: int) -> FastInverseLaplacian:
    return FastInverseLaplacian(laplacian_eigs_2d(n))


def fast_inverse_laplacian_3d(n: int) -> FastInverseLaplacian:
    operator = FastInverseLaplacian(laplacian_eigs_3d(n))
    logger.debug(f"3D fast inverse Laplacian for n={n} (dimension {operator.dim})")
    return operator
