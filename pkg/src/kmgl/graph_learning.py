"""Per-cluster Laplacian estimation and the inner filter/learn loop.

Given filtered signals, the Laplacian is learned from the quadratic program

    min_w  beta * z^T w + gamma * (sum_i d_i(w)^2 + 2 * sum_e w_e^2)
    s.t.   w >= 0,  2 * sum_e w_e = n        (i.e. trace(L) = n)

where ``z_e`` accumulates the squared differences of each filtered signal
across the edge ``e`` and ``d(w)`` is the degree map.  The feasible set is a
scaled simplex, so the problem is solved by projected gradient descent with
an exact sort-and-threshold projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateClusteringError
from .filtering import FilterParams, LowpassOperator, masked_base, masked_solve
from .graphs import LaplacianGraph, edge_count, edge_endpoints, laplacian_from_weights
from .kernels import KernelOperator


@dataclass(frozen=True, eq=False)
class QPProblem:
    """Edge-space form of the Laplacian learning problem for one cluster."""

    n: int
    z: np.ndarray
    beta: float
    gamma: float

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float).ravel()
        if z.size != edge_count(self.n):
            raise ValueError(f"z has length {z.size}, expected {edge_count(self.n)}")
        if np.any(z < 0):
            raise ValueError("edge-wise smoothness vector must be nonnegative")
        z = z.copy()
        z.setflags(write=False)
        object.__setattr__(self, "z", z)


def build_qp(filtered: np.ndarray, beta: float, gamma: float) -> QPProblem:
    """Accumulate the edge-wise smoothness vector of a cluster's filtered signals.

    ``filtered`` has one signal per column; ``z`` is additive over signals.
    """
    filtered = np.asarray(filtered, dtype=float)
    if filtered.ndim == 1:
        filtered = filtered[:, None]
    if filtered.shape[1] == 0:
        raise DegenerateClusteringError("cannot build the learning problem for an empty cluster")
    n = filtered.shape[0]
    rows, cols = edge_endpoints(n)
    diff = filtered[rows, :] - filtered[cols, :]
    z = np.sum(diff * diff, axis=1)
    return QPProblem(n=n, z=z, beta=float(beta), gamma=float(gamma))


def project_simplex(v: np.ndarray, target_sum: float) -> np.ndarray:
    """Euclidean projection onto ``{w >= 0, sum(w) = target_sum}``.

    Sort-and-threshold method; exact up to rounding, total for any input.
    """
    if target_sum <= 0:
        raise ValueError("target_sum must be positive")
    v = np.asarray(v, dtype=float).ravel()
    u = np.sort(v)[::-1]
    shifted = np.cumsum(u) - target_sum
    counts = np.arange(1, v.size + 1)
    rho = counts[u - shifted / counts > 0][-1]
    theta = shifted[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _degrees(w: np.ndarray, n: int) -> np.ndarray:
    rows, cols = edge_endpoints(n)
    return np.bincount(rows, weights=w, minlength=n) + np.bincount(cols, weights=w, minlength=n)


def qp_objective(q: QPProblem, w: np.ndarray) -> float:
    d = _degrees(w, q.n)
    return float(q.beta * (q.z @ w) + q.gamma * (d @ d + 2.0 * (w @ w)))


def qp_gradient(q: QPProblem, w: np.ndarray) -> np.ndarray:
    rows, cols = edge_endpoints(q.n)
    d = _degrees(w, q.n)
    return q.beta * q.z + q.gamma * (2.0 * (d[rows] + d[cols]) + 4.0 * w)


def kkt_residual(q: QPProblem, w: np.ndarray) -> float:
    """Stationarity residual of ``w`` for the simplex-constrained problem.

    On the support the gradient must equal the equality multiplier; off the
    support it must not fall below it.  Returns the worst violation.
    """
    g = qp_gradient(q, w)
    support = w > 0
    if not support.any():
        return float("inf")
    nu = float(np.mean(g[support]))
    res_support = float(np.max(np.abs(g[support] - nu)))
    if support.all():
        return res_support
    res_inactive = float(np.max(np.maximum(nu - g[~support], 0.0)))
    return max(res_support, res_inactive)


def solve_laplacian_qp(
    q: QPProblem,
    w0: np.ndarray | None = None,
    max_iter: int = 5000,
    tol: float = 1e-8,
) -> LaplacianGraph:
    """Projected gradient descent for the Laplacian learning problem.

    The step size starts from the reciprocal Lipschitz estimate ``1/(4 n gamma)``
    and backtracks by halving until the quadratic upper bound holds (it always
    does at the estimate; the search is a guard).  Terminates when the iterate
    moves by at most ``tol`` in the max norm.  Infeasible starting points are
    projected, not rejected.
    """
    target = q.n / 2.0
    E = edge_count(q.n)
    if w0 is None:
        w = np.full(E, target / E)
    else:
        w = project_simplex(np.asarray(w0, dtype=float), target)
    lip = 4.0 * q.n * q.gamma
    t0 = 1.0 / lip if lip > 0 else 1e12
    f_w = qp_objective(q, w)
    for _ in range(max_iter):
        g = qp_gradient(q, w)
        t = t0
        while True:
            w_new = project_simplex(w - t * g, target)
            step = w_new - w
            f_new = qp_objective(q, w_new)
            bound = f_w + g @ step + (step @ step) / (2.0 * t)
            if f_new <= bound + 1e-12 * max(1.0, abs(f_w)) or t < 1e-20:
                break
            t /= 2.0
        moved = float(np.max(np.abs(step)))
        w, f_w = w_new, f_new
        if moved <= tol:
            break
    # Kill rounding drift so the trace constraint holds exactly.
    w = w * (target / np.sum(w))
    g = laplacian_from_weights(w, q.n)
    return LaplacianGraph(n=g.n, w=g.w, laplacian=g.laplacian, normalized=True)


def filter_cluster_columns(
    X: np.ndarray,
    masks: np.ndarray | None,
    kernel: KernelOperator,
    graph: LaplacianGraph,
    params: FilterParams,
) -> np.ndarray:
    """Filtered version of every column of ``X`` under one cluster's filter.

    Fully observed columns share one factorized solve; partially observed
    columns each get their own masked system.
    """
    op = LowpassOperator(kernel, graph, params)
    Xhat = op.apply(X)
    if masks is not None:
        partial = ~masks.all(axis=0)
        if partial.any():
            base = masked_base(kernel, graph, params)
            for j in np.flatnonzero(partial):
                Xhat[:, j] = masked_solve(base, masks[:, j], X[:, j])
    return Xhat


def _inner_objective(
    X: np.ndarray,
    Xhat: np.ndarray,
    kernel: KernelOperator,
    params: FilterParams,
    graph: LaplacianGraph,
    gamma: float,
    masks: np.ndarray | None,
) -> float:
    # Fidelity + alpha * xhat' K^-1 xhat + beta * xhat' L xhat + gamma ||L||_F^2,
    # summed over the cluster; the masked variant weighs fidelity by M.
    resid = X - Xhat
    if masks is not None:
        resid = np.where(masks, resid, 0.0)
    value = float(np.sum(resid * resid))
    if params.alpha != 0.0:
        value += params.alpha * float(np.sum(kernel.quad_inv_columns(Xhat)))
    if params.beta != 0.0:
        value += params.beta * float(np.sum(Xhat * (graph.laplacian @ Xhat)))
    return value + gamma * graph.frobenius_sq()


def bcd_inner_loop(
    signals: np.ndarray,
    kernel: KernelOperator,
    params: FilterParams,
    gamma: float,
    epsilon: float = 1e-4,
    max_outer: int = 100,
    masks: np.ndarray | None = None,
    w0: np.ndarray | None = None,
    qp_max_iter: int = 5000,
    qp_tol: float = 1e-8,
) -> tuple[LaplacianGraph, np.ndarray]:
    """Alternate filtering and Laplacian learning for one cluster.

    Starting from ``w0`` (uniform complete graph when omitted), each round
    filters every signal against the current graph and then re-solves the
    learning problem, until the Laplacian moves by at most ``epsilon`` in
    Frobenius norm.  A final filter pass makes the returned signals exact
    filter outputs of the returned graph.

    The Frobenius penalty enters the cluster subproblem once per signal, so
    the learning problem is solved with the effective weight
    ``gamma * m_k``; this keeps the smoothness/regularization balance
    independent of the cluster size.

    Returns the learned graph and the filtered signals (one column each).
    """
    X = np.asarray(signals, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] == 0:
        raise DegenerateClusteringError("cannot run the inner loop on an empty cluster")
    n = X.shape[0]
    gamma_eff = gamma * X.shape[1]
    if w0 is None:
        w0 = np.full(edge_count(n), n / (2.0 * edge_count(n)))
    graph = laplacian_from_weights(project_simplex(np.asarray(w0, dtype=float), n / 2.0), n)
    prev_obj = np.inf
    for _ in range(max_outer):
        Xhat = filter_cluster_columns(X, masks, kernel, graph, params)
        if __debug__:
            obj = _inner_objective(X, Xhat, kernel, params, graph, gamma_eff, masks)
            assert obj <= prev_obj + 1e-8 * max(1.0, abs(prev_obj)), "filter step increased the objective"
            prev_obj = obj
        q = build_qp(Xhat, params.beta, gamma_eff)
        new_graph = solve_laplacian_qp(q, w0=graph.w, max_iter=qp_max_iter, tol=qp_tol)
        if __debug__:
            obj = _inner_objective(X, Xhat, kernel, params, new_graph, gamma_eff, masks)
            assert obj <= prev_obj + 1e-8 * max(1.0, abs(prev_obj)), "learning step increased the objective"
            prev_obj = obj
        delta = float(np.linalg.norm(new_graph.laplacian - graph.laplacian, "fro"))
        graph = new_graph
        if delta <= epsilon:
            break
    Xhat = filter_cluster_columns(X, masks, kernel, graph, params)
    return graph, Xhat
