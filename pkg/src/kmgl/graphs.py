"""Undirected weighted graphs stored as Laplacians.

A graph on ``n`` nodes is represented by the vector of its ``n(n-1)/2``
nonnegative upper-triangle edge weights (row-major pair order) together with
the derived Laplacian ``L = D - W``.  Constructors build ``L`` symmetrically,
so ``L == L.T`` holds exactly, and the all-ones vector is always in its null
space up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import DegenerateGraphError, DimensionError, InvalidWeightError


def edge_count(n: int) -> int:
    """Number of unordered node pairs of an ``n``-node graph."""
    return n * (n - 1) // 2


@lru_cache(maxsize=None)
def _endpoints(n: int) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = np.triu_indices(n, k=1)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def edge_endpoints(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint arrays ``(rows, cols)`` of every edge slot, in flat order."""
    return _endpoints(n)


def pair_to_flat(i: int, j: int, n: int) -> int:
    """Flat edge index of the node pair ``(i, j)`` with ``i < j``."""
    if not 0 <= i < j < n:
        raise DimensionError(f"need 0 <= i < j < n, got ({i}, {j}) with n={n}")
    return i * (2 * n - i - 1) // 2 + (j - i - 1)


def flat_to_pair(e: int, n: int) -> tuple[int, int]:
    """Node pair ``(i, j)`` of the flat edge index ``e``."""
    rows, cols = _endpoints(n)
    if not 0 <= e < rows.size:
        raise DimensionError(f"edge index {e} out of range for n={n}")
    return int(rows[e]), int(cols[e])


@dataclass(frozen=True, eq=False)
class LaplacianGraph:
    """Immutable weighted graph: edge-weight vector plus cached Laplacian.

    Attributes
    ----------
    n : int
        Node count.
    w : np.ndarray
        Nonnegative edge weights, length ``n(n-1)/2``, upper-triangle order.
    laplacian : np.ndarray
        ``n x n`` combinatorial Laplacian ``D - W``.
    normalized : bool
        True when the weights were scaled so that ``trace(L) == n``.
    """

    n: int
    w: np.ndarray
    laplacian: np.ndarray
    normalized: bool = False

    def adjacency(self) -> np.ndarray:
        """Dense symmetric adjacency matrix with zero diagonal."""
        rows, cols = _endpoints(self.n)
        W = np.zeros((self.n, self.n))
        W[rows, cols] = self.w
        W[cols, rows] = self.w
        return W

    def degrees(self) -> np.ndarray:
        return np.diag(self.laplacian).copy()

    def frobenius_sq(self) -> float:
        """Squared Frobenius norm of the Laplacian."""
        return float(np.sum(self.laplacian * self.laplacian))


def laplacian_from_weights(w, n: int) -> LaplacianGraph:
    """Build the graph with edge-weight vector ``w`` on ``n`` nodes.

    Raises
    ------
    DimensionError
        If ``w`` does not have length ``n(n-1)/2``.
    InvalidWeightError
        If any weight is negative or not finite.
    """
    w = np.array(w, dtype=float).ravel()
    if w.size != edge_count(n):
        raise DimensionError(f"expected {edge_count(n)} weights for n={n}, got {w.size}")
    if not np.all(np.isfinite(w)):
        raise InvalidWeightError("edge weights must be finite")
    if np.any(w < 0):
        raise InvalidWeightError("edge weights must be nonnegative")
    rows, cols = _endpoints(n)
    L = np.zeros((n, n))
    # Off-diagonal entries are assigned, never computed, so symmetry is exact.
    L[rows, cols] = -w
    L[cols, rows] = -w
    d = np.bincount(rows, weights=w, minlength=n) + np.bincount(cols, weights=w, minlength=n)
    L[np.diag_indices(n)] = d
    w.setflags(write=False)
    L.setflags(write=False)
    return LaplacianGraph(n=n, w=w, laplacian=L)


def laplacian_from_adjacency(A) -> LaplacianGraph:
    """Build a graph from a dense adjacency matrix (e.g. loaded from CSV)."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"adjacency matrix must be square, got shape {A.shape}")
    if not np.allclose(A, A.T, atol=1e-8):
        raise InvalidWeightError("adjacency matrix must be symmetric")
    if np.any(np.abs(np.diag(A)) > 1e-12):
        raise InvalidWeightError("self-loops are not supported")
    n = A.shape[0]
    rows, cols = _endpoints(n)
    g = laplacian_from_weights(A[rows, cols], n)
    if abs(np.trace(g.laplacian) - n) <= 1e-8:
        g = replace(g, normalized=True)
    return g


def normalize_trace(g: LaplacianGraph) -> LaplacianGraph:
    """Rescale the weights so that ``trace(L) == n`` (i.e. sum of weights n/2)."""
    total = float(np.sum(g.w))
    if total <= 0.0:
        raise DegenerateGraphError("cannot normalize a graph with no edges")
    scaled = laplacian_from_weights(g.w * (g.n / (2.0 * total)), g.n)
    return replace(scaled, normalized=True)


def erdos_renyi(n: int, p: float, rng_seed: int) -> LaplacianGraph:
    """Seeded Erdos-Renyi graph with binary edges, trace-normalized.

    Each unordered pair receives weight 1 with probability ``p``.  If no edge
    is drawn the seed is incremented and the draw repeated, up to 100 times.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"edge probability must be in (0, 1], got {p}")
    for attempt in range(100):
        rng = np.random.default_rng(rng_seed + attempt)
        w = (rng.random(edge_count(n)) < p).astype(float)
        if w.any():
            return normalize_trace(laplacian_from_weights(w, n))
    raise DegenerateGraphError(f"no edges drawn in 100 attempts (n={n}, p={p})")


def save_adjacency_csv(g: LaplacianGraph, path) -> None:
    """Write the full adjacency matrix as headerless CSV, round-trip precision."""
    np.savetxt(path, g.adjacency(), fmt="%.17g", delimiter=",")


def load_adjacency_csv(path) -> LaplacianGraph:
    return laplacian_from_adjacency(np.loadtxt(path, delimiter=",", ndmin=2))
