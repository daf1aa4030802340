"""Node-side kernel matrices with cached Cholesky factorizations.

A kernel operator wraps a symmetric positive-definite ``n x n`` matrix ``K``
describing pairwise similarity of per-node covariates.  All downstream math
needs solves against ``K`` and quadratic forms against its inverse; the
inverse is only materialized on request (system assembly in the filter
module), never for individual solves.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .errors import DimensionError, InvalidKernelError
from .graphs import LaplacianGraph


class KernelOperator:
    """Factorized SPD kernel matrix.

    ``matrix`` is the matrix that was actually factorized, i.e. it already
    includes any jitter recorded in ``jitter_applied``.
    """

    def __init__(self, matrix: np.ndarray, jitter_applied: float = 0.0):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError(f"kernel matrix must be square, got shape {matrix.shape}")
        self.n = matrix.shape[0]
        self.jitter_applied = float(jitter_applied)
        try:
            self._cho = cho_factor(matrix, lower=True)
        except np.linalg.LinAlgError as exc:
            raise InvalidKernelError(f"kernel matrix is not positive definite: {exc}") from exc
        matrix = matrix.copy()
        matrix.setflags(write=False)
        self.matrix = matrix
        self._inverse: np.ndarray | None = None

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Return ``K^{-1} b`` for a vector or matrix right-hand side."""
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise DimensionError(f"right-hand side has {b.shape[0]} rows, kernel has {self.n}")
        return cho_solve(self._cho, b, check_finite=False)

    def quad_inv(self, x: np.ndarray) -> float:
        """Quadratic form ``x^T K^{-1} x``, computed via a triangular solve.

        Never materializes the inverse, and is exactly nonnegative because it
        is evaluated as a squared norm.
        """
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.n:
            raise DimensionError(f"vector has length {x.size}, kernel has {self.n}")
        y = solve_triangular(self._cho[0], x, lower=True, check_finite=False)
        return float(y @ y)

    def quad_inv_columns(self, X: np.ndarray) -> np.ndarray:
        """Per-column quadratic forms ``x^T K^{-1} x`` of a signal matrix."""
        X = np.asarray(X, dtype=float)
        if X.shape[0] != self.n:
            raise DimensionError(f"matrix has {X.shape[0]} rows, kernel has {self.n}")
        Y = solve_triangular(self._cho[0], X, lower=True, check_finite=False)
        return np.sum(Y * Y, axis=0)

    def inverse_matrix(self) -> np.ndarray:
        """Explicit symmetrized ``K^{-1}`` (cached); used only for system assembly."""
        if self._inverse is None:
            inv = cho_solve(self._cho, np.eye(self.n), check_finite=False)
            inv = (inv + inv.T) / 2.0
            inv.setflags(write=False)
            self._inverse = inv
        return self._inverse

    def sampling_factor(self) -> np.ndarray:
        """Lower-triangular factor ``C`` with ``C C^T = matrix``, for Gaussian sampling."""
        return np.tril(self._cho[0])

    def trace(self) -> float:
        return float(np.trace(self.matrix))


def precomputed_kernel(M, jitter_policy: float = 1e-10) -> KernelOperator:
    """Kernel operator from an arbitrary square matrix.

    The matrix is symmetrized as ``(M + M^T)/2`` and factorized.  On failure,
    ``jitter * I`` is added with jitter escalating tenfold from
    ``jitter_policy`` up to ``1e-4 * trace(M) / n``; the jitter that finally
    succeeded is recorded on the operator.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"kernel matrix must be square, got shape {M.shape}")
    n = M.shape[0]
    K = (M + M.T) / 2.0
    try:
        return KernelOperator(K, jitter_applied=0.0)
    except InvalidKernelError:
        pass
    cap = 1e-4 * np.trace(K) / n
    jitter = float(jitter_policy)
    while jitter <= cap:
        try:
            return KernelOperator(K + jitter * np.eye(n), jitter_applied=jitter)
        except InvalidKernelError:
            jitter *= 10.0
    raise InvalidKernelError(
        f"matrix not positive definite after jitter escalation up to {cap:g}"
    )


def diffusion_kernel(g: LaplacianGraph, eta: float, jitter_policy: float = 1e-10) -> KernelOperator:
    """Diffusion kernel ``K = (I + eta * L)^{-1}`` of a graph.

    Computed by solving the factorized system against the identity and
    symmetrizing; the result goes through the usual jitter-escalating
    factorization because sampled diffusion kernels get numerically
    near-singular for large ``eta``.
    """
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    A = np.eye(g.n) + eta * g.laplacian
    try:
        factor = cho_factor(A, lower=True)
    except np.linalg.LinAlgError as exc:  # cannot occur for a valid Laplacian, guarded anyway
        raise InvalidKernelError(f"singular diffusion system: {exc}") from exc
    K = cho_solve(factor, np.eye(g.n), check_finite=False)
    return precomputed_kernel((K + K.T) / 2.0, jitter_policy)


def rbf_kernel(coords, bandwidth: float, jitter_policy: float = 1e-10) -> KernelOperator:
    """Gaussian RBF kernel on node coordinates, one row per node."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    sq = np.sum((coords[:, None, :] - coords[None, :, :]) ** 2, axis=-1)
    return precomputed_kernel(np.exp(-sq / (2.0 * bandwidth**2)), jitter_policy)


def save_kernel_csv(k: KernelOperator, path) -> None:
    """Write the kernel matrix as headerless CSV, round-trip precision."""
    np.savetxt(path, k.matrix, fmt="%.17g", delimiter=",")


def load_kernel_csv(path, jitter_policy: float = 1e-10) -> KernelOperator:
    return precomputed_kernel(np.loadtxt(path, delimiter=",", ndmin=2), jitter_policy)
