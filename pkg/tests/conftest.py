"""Shared test helpers: independent dense-algebra oracles."""

import numpy as np

import kmgl


def dense_filter_matrix(kernel, graph, alpha, beta):
    """Filter system assembled through the dense inverse, independent of the library path."""
    n = graph.n
    A = np.eye(n) + beta * graph.laplacian
    if alpha != 0.0:
        A = A + alpha * np.linalg.inv(kernel.matrix)
    return A


def dense_lowpass(x, kernel, graph, alpha, beta):
    return np.linalg.solve(dense_filter_matrix(kernel, graph, alpha, beta), x)


def dense_masked(x, observed, kernel, graph, alpha, beta):
    n = graph.n
    A = np.diag(observed.astype(float)) + beta * graph.laplacian
    if alpha != 0.0:
        A = A + alpha * np.linalg.inv(kernel.matrix)
    return np.linalg.solve(A, np.where(observed, x, 0.0))


def quadratic_form_loop(graph, x):
    """Brute-force smoothness sum over node pairs."""
    total = 0.0
    e = 0
    for i in range(graph.n):
        for j in range(i + 1, graph.n):
            total += graph.w[e] * (x[i] - x[j]) ** 2
            e += 1
    return total


def aligned_aps_mean(state, dataset):
    """Mean APS after aligning learned clusters to true clusters via the CAR map."""
    mapping = kmgl.best_label_map(state.assignment, dataset.truth_assignment)
    inverse = {int(t): p for p, t in enumerate(mapping)}
    values = [
        kmgl.aps(state.laplacians[inverse[c]], dataset.truth_graphs[c])
        for c in range(len(dataset.truth_graphs))
    ]
    return float(np.mean(values))
