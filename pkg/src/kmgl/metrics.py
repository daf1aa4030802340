"""Clustering and graph-recovery metrics, plus the K-means baseline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DimensionError
from .graphs import LaplacianGraph
from .signals import SignalSet


@dataclass
class MetricsRecord:
    """One evaluation row: clustering accuracy, edge recovery, and metadata."""

    seed: int
    n_clusters: int
    n: int
    m: int
    snr_db: float
    missing_rate: float
    car: float
    aps_per_cluster: list[float] = field(default_factory=list)
    aps_mean: float = float("nan")
    rounds: int = 0
    converged: bool = False

    @staticmethod
    def csv_header(n_clusters: int) -> str:
        aps_cols = ",".join(f"aps_c{i}" for i in range(n_clusters))
        return f"seed,K,n,m,snr_db,missing_rate,car,aps_mean,{aps_cols},rounds,converged"

    def csv_row(self) -> str:
        cells = [
            str(self.seed),
            str(self.n_clusters),
            str(self.n),
            str(self.m),
            repr(float(self.snr_db)),
            repr(float(self.missing_rate)),
            repr(float(self.car)),
            repr(float(self.aps_mean)),
        ]
        cells += [repr(float(a)) for a in self.aps_per_cluster]
        cells += [str(self.rounds), "1" if self.converged else "0"]
        return ",".join(cells)


def _check_labels(pred, truth):
    pred = np.asarray(pred, dtype=int).ravel()
    truth = np.asarray(truth, dtype=int).ravel()
    if pred.size != truth.size:
        raise DimensionError(f"label vectors differ in length: {pred.size} vs {truth.size}")
    if pred.size == 0:
        raise DimensionError("empty label vectors")
    if pred.min() < 0 or truth.min() < 0:
        raise ValueError("labels must be nonnegative")
    return pred, truth


def best_label_map(pred, truth) -> np.ndarray:
    """Accuracy-maximizing injective map from predicted to true labels.

    Solved as a linear assignment on the confusion matrix; ``map[p]`` is the
    true label matched to predicted label ``p``.
    """
    pred, truth = _check_labels(pred, truth)
    k = int(max(pred.max(), truth.max())) + 1
    confusion = np.zeros((k, k))
    np.add.at(confusion, (pred, truth), 1.0)
    rows, cols = linear_sum_assignment(confusion, maximize=True)
    mapping = np.empty(k, dtype=int)
    mapping[rows] = cols
    return mapping


def car(pred, truth) -> float:
    """Clustering accuracy ratio: accuracy under the best label map."""
    pred, truth = _check_labels(pred, truth)
    mapping = best_label_map(pred, truth)
    return float(np.mean(mapping[pred] == truth))


def aps(predicted: LaplacianGraph, truth: LaplacianGraph) -> float:
    """Average precision of edge detection.

    All node pairs are ranked by predicted weight (descending); a pair is a
    positive when the true weight is strictly greater than zero.  Tied scores
    form a single threshold group, so the value is invariant to strictly
    monotone transformations of the predicted weights.
    """
    if predicted.n != truth.n:
        raise DimensionError(f"graphs differ in size: {predicted.n} vs {truth.n}")
    scores = predicted.w
    positives = truth.w > 0
    total_pos = int(positives.sum())
    if total_pos == 0:
        raise ValueError("true graph has no edges; average precision is undefined")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    hits = positives[order].astype(float)
    # Inclusive index of the last element of each tie group.
    boundaries = np.flatnonzero(np.diff(sorted_scores))
    group_ends = np.append(boundaries, sorted_scores.size - 1)
    tp = np.cumsum(hits)[group_ends]
    precision = tp / (group_ends + 1.0)
    recall = tp / total_pos
    recall_prev = np.concatenate(([0.0], recall[:-1]))
    return float(np.sum((recall - recall_prev) * precision))


def snr_db(kernels, sigma_eps: float, n: int) -> float:
    """Signal-to-noise ratio in dB: mean kernel trace power over noise variance."""
    if sigma_eps <= 0:
        raise ValueError(f"noise level must be positive, got {sigma_eps}")
    kernels = list(kernels)
    trace_sum = sum(k.trace() for k in kernels)
    return float(10.0 * np.log10(trace_sum / (len(kernels) * n * sigma_eps**2)))


def sigma_for_snr(kernels, target_db: float, n: int) -> float:
    """Noise level that realizes a target SNR for the given kernels."""
    if not np.isfinite(target_db):
        raise ValueError(f"target SNR must be finite, got {target_db}")
    kernels = list(kernels)
    trace_sum = sum(k.trace() for k in kernels)
    return float(np.sqrt(trace_sum / (len(kernels) * n * 10.0 ** (target_db / 10.0))))


def _lloyd(points, n_clusters: int, rng: np.random.Generator, max_iter: int, wcss_history=None):
    m = points.shape[0]
    centers = points[rng.choice(m, size=n_clusters, replace=False)].copy()
    dists = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=-1)
    labels = np.argmin(dists, axis=1)
    for _ in range(max_iter):
        for k in range(n_clusters):
            members = labels == k
            if members.any():
                centers[k] = points[members].mean(axis=0)
            else:
                # Reseed an empty cluster with the point farthest from its center.
                worst = int(np.argmax(np.sum((points - centers[labels]) ** 2, axis=1)))
                centers[k] = points[worst]
                labels[worst] = k
        dists = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=-1)
        new_labels = np.argmin(dists, axis=1)
        if wcss_history is not None:
            wcss_history.append(float(np.sum(np.min(dists, axis=1))))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    inertia = float(np.sum(np.min(dists, axis=1)))
    return labels, inertia


def kmeans_baseline(data, n_clusters: int, seed: int, max_iter: int = 300, restarts: int = 1):
    """Plain Lloyd K-means on the signals, used as a graph-agnostic baseline.

    Signals are points in R^n; missing values (when the data carries masks)
    enter as zeros.  With ``restarts > 1`` the run with the lowest
    within-cluster sum of squares wins, using seeds ``seed, seed+1, ...``.
    """
    if not isinstance(data, SignalSet):
        data = SignalSet(np.asarray(data, dtype=float))
    if data.m < n_clusters:
        raise DimensionError(f"cannot split {data.m} signals into {n_clusters} clusters")
    points = data.zero_filled().T
    best_labels, best_inertia = None, np.inf
    for r in range(restarts):
        labels, inertia = _lloyd(points, n_clusters, np.random.default_rng(seed + r), max_iter)
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return best_labels
