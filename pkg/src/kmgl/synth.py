"""Synthetic datasets: planted graphs, diffusion kernels, Gaussian signals.

One dataset holds K independently drawn Erdos-Renyi graphs, their diffusion
kernels, and ``m`` signals split as evenly as possible across the clusters.
Cluster ``k``'s signals are zero-mean Gaussian with covariance
``K_k + sigma^2 I`` where ``sigma`` is calibrated so a target SNR holds
exactly.  Optional Bernoulli observation masks model missing data.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import ioutil
from .graphs import LaplacianGraph, erdos_renyi, load_adjacency_csv, save_adjacency_csv
from .kernels import KernelOperator, diffusion_kernel, load_kernel_csv, save_kernel_csv
from .metrics import sigma_for_snr
from .signals import SignalSet, load_masks_csv, load_signals_csv, save_masks_csv, save_signals_csv


@dataclass(frozen=True, eq=False)
class SyntheticDataset:
    truth_graphs: tuple[LaplacianGraph, ...]
    kernels: tuple[KernelOperator, ...]
    signals: SignalSet
    truth_assignment: np.ndarray
    meta: dict

    @property
    def n_clusters(self) -> int:
        return len(self.truth_graphs)


def cluster_sizes(m: int, n_clusters: int) -> list[int]:
    """Split m signals as evenly as possible; earlier clusters get the extras."""
    base, extra = divmod(m, n_clusters)
    return [base + (1 if k < extra else 0) for k in range(n_clusters)]


def _sample_cluster_signals(rng: np.random.Generator, kernel: KernelOperator, sigma: float, count: int):
    """Draw the smooth component and the noise component of one cluster's signals.

    The smooth part is ``C z`` with ``C C^T`` the (jittered) kernel matrix, so
    the sum has covariance ``K + sigma^2 I`` while the two parts stay separable
    for empirical SNR checks.
    """
    factor = kernel.sampling_factor()
    clean = factor @ rng.standard_normal((kernel.n, count))
    noise = sigma * rng.standard_normal((kernel.n, count))
    return clean, noise


def generate(
    n: int,
    m: int,
    n_clusters: int,
    p: float,
    eta: float,
    snr_target_db: float,
    missing_rate: float = 0.0,
    seed: int = 0,
) -> SyntheticDataset:
    """Generate one synthetic dataset; bitwise deterministic per seed.

    Sub-seeds for graphs, per-cluster signals, and masks are derived from the
    base seed through ``numpy.random.SeedSequence(seed).generate_state``, in
    that fixed order, so per-cluster generation could run in any order.
    """
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got {n}")
    if m < n_clusters:
        raise ValueError(f"need at least {n_clusters} signals, got {m}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"edge probability must be in (0, 1], got {p}")
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if not 0.0 <= missing_rate < 1.0:
        raise ValueError(f"missing rate must be in [0, 1), got {missing_rate}")

    state = np.random.SeedSequence(seed).generate_state(2 * n_clusters + 1)
    graphs = [erdos_renyi(n, p, int(state[k])) for k in range(n_clusters)]
    kernels = [diffusion_kernel(g, eta) for g in graphs]
    sigma = sigma_for_snr(kernels, snr_target_db, n)

    sizes = cluster_sizes(m, n_clusters)
    columns = []
    labels = []
    for k, count in enumerate(sizes):
        rng_k = np.random.default_rng(int(state[n_clusters + k]))
        clean, noise = _sample_cluster_signals(rng_k, kernels[k], sigma, count)
        columns.append(clean + noise)
        labels.append(np.full(count, k, dtype=int))
    X = np.concatenate(columns, axis=1)
    assignment = np.concatenate(labels)

    masks = None
    if missing_rate > 0.0:
        rng_m = np.random.default_rng(int(state[2 * n_clusters]))
        masks = rng_m.random(X.shape) < (1.0 - missing_rate)

    meta = {
        "n": n,
        "m": m,
        "clusters": n_clusters,
        "p": p,
        "eta": eta,
        "snr_db": snr_target_db,
        "sigma_eps": sigma,
        "missing_rate": missing_rate,
        "seed": seed,
    }
    assignment.setflags(write=False)
    return SyntheticDataset(
        truth_graphs=tuple(graphs),
        kernels=tuple(kernels),
        signals=SignalSet(X, masks),
        truth_assignment=assignment,
        meta=meta,
    )


def export_dataset(ds: SyntheticDataset, directory) -> None:
    """Write a dataset directory: graphs, kernels, signals, labels, meta.

    Files: ``graph_<k>.csv`` (adjacency), ``kernel_<k>.csv``, ``signals.csv``,
    ``assignment.csv``, ``masks.csv`` (only when masks exist), ``meta.json``.
    All writes are atomic.
    """
    directory = os.fspath(directory)
    os.makedirs(directory, exist_ok=True)
    for k, g in enumerate(ds.truth_graphs):
        ioutil.atomic_savetxt(
            os.path.join(directory, f"graph_{k}.csv"), lambda tmp, g=g: save_adjacency_csv(g, tmp)
        )
    for k, kern in enumerate(ds.kernels):
        ioutil.atomic_savetxt(
            os.path.join(directory, f"kernel_{k}.csv"), lambda tmp, kern=kern: save_kernel_csv(kern, tmp)
        )
    ioutil.atomic_savetxt(
        os.path.join(directory, "signals.csv"), lambda tmp: save_signals_csv(ds.signals.values, tmp)
    )
    ioutil.atomic_write_text(
        os.path.join(directory, "assignment.csv"),
        "\n".join(str(int(a)) for a in ds.truth_assignment) + "\n",
    )
    if ds.signals.masks is not None:
        ioutil.atomic_savetxt(
            os.path.join(directory, "masks.csv"), lambda tmp: save_masks_csv(ds.signals.masks, tmp)
        )
    ioutil.atomic_write_text(
        os.path.join(directory, "meta.json"), json.dumps(ds.meta, indent=2, sort_keys=True) + "\n"
    )


def load_dataset(directory) -> SyntheticDataset:
    """Read back a dataset directory written by ``export_dataset``."""
    directory = os.fspath(directory)
    with open(os.path.join(directory, "meta.json")) as fh:
        meta = json.load(fh)
    n_clusters = int(meta["clusters"])
    graphs = tuple(load_adjacency_csv(os.path.join(directory, f"graph_{k}.csv")) for k in range(n_clusters))
    kernels = tuple(load_kernel_csv(os.path.join(directory, f"kernel_{k}.csv")) for k in range(n_clusters))
    X = load_signals_csv(os.path.join(directory, "signals.csv"))
    assignment = np.loadtxt(os.path.join(directory, "assignment.csv"), dtype=int, ndmin=1)
    masks_path = os.path.join(directory, "masks.csv")
    masks = load_masks_csv(masks_path) if os.path.exists(masks_path) else None
    return SyntheticDataset(
        truth_graphs=graphs,
        kernels=kernels,
        signals=SignalSet(X, masks),
        truth_assignment=assignment,
        meta=meta,
    )
