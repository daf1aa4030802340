"""Command-line interface: dataset generation, fitting, evaluation, sweeps.

Subcommands
-----------
synth        generate a synthetic dataset directory
fit          cluster a dataset and learn one graph per cluster
eval         score fit results against the dataset's ground truth
experiment   sweep one axis (clusters, snr, missing-rate) and aggregate a CSV

Every flag can also be supplied through a JSON config file (``--config``),
with underscores in place of dashes; explicit flags win over the file.  Exit
codes: 0 success, 2 configuration error, 3 numerical/degenerate error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import ioutil
from .clustering import fit, fit_masked
from .errors import (
    ConfigurationError,
    DegenerateClusteringError,
    DegenerateGraphError,
    InconsistentStateError,
    InvalidKernelError,
    KmglError,
    SingularFilterError,
)
from .filtering import FilterParams
from .graphs import load_adjacency_csv, save_adjacency_csv
from .kernels import diffusion_kernel, load_kernel_csv, rbf_kernel, save_kernel_csv
from .metrics import MetricsRecord, aps, best_label_map, car, kmeans_baseline
from .signals import SignalSet, load_masks_csv, load_signals_csv, save_signals_csv
from .synth import export_dataset, generate

_DEFAULTS = {
    "synth": {
        "n": 20,
        "m": 500,
        "clusters": 3,
        "p": 0.3,
        "eta": 10.0,
        "snr": 15.0,
        "missing_rate": 0.0,
        "seed": 0,
        "out": "dataset",
    },
    "fit": {
        "alpha": 1e-2,
        "beta": 1e-2,
        "gamma": 1e-4,
        "epsilon": 1e-4,
        "clusters": None,
        "restarts": 1,
        "kernel": None,
        "seed": 0,
        "out": "results",
        "max_rounds": 200,
        "tied_alpha_beta": False,
    },
    "eval": {"out": None},
    "experiment": {
        "n": 20,
        "m": 500,
        "clusters": 3,
        "p": 0.3,
        "eta": 10.0,
        "snr": 15.0,
        "missing_rate": 0.0,
        "alpha": 1e-2,
        "beta": 1e-2,
        "gamma": 1e-4,
        "epsilon": 1e-4,
        "axis": None,
        "grid": None,
        "realizations": 10,
        "seeds": None,
        "seed": 0,
        "jobs": 1,
        "kmeans_restarts": 10,
        "max_rounds": 200,
        "tied_alpha_beta": False,
        "out": "experiment.csv",
    },
}


def _resolve_config(args: argparse.Namespace, command: str) -> dict:
    cfg = dict(_DEFAULTS[command])
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {args.config} is not valid JSON: {exc}") from exc
        unknown = set(file_cfg) - set(cfg)
        if unknown:
            raise ConfigurationError(f"unknown config keys for '{command}': {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in cfg:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            cfg[key] = value
    return cfg


def _parse_grid(grid, axis: str) -> list:
    if grid is None:
        raise ConfigurationError("experiment requires --grid")
    if isinstance(grid, str):
        grid = [g for g in grid.split(",") if g.strip()]
    try:
        values = [float(g) for g in grid]
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"grid entries must be numeric: {grid}") from exc
    if not values:
        raise ConfigurationError("grid is empty")
    if axis == "clusters":
        ints = [int(v) for v in values]
        if any(i != v for i, v in zip(ints, values)) or any(i < 1 for i in ints):
            raise ConfigurationError(f"clusters grid must hold positive integers: {grid}")
        return ints
    return values


def _resolve_kernels(dataset_dir: str, spec, n_clusters: int, n: int) -> list:
    if spec is None:
        paths = [os.path.join(dataset_dir, f"kernel_{k}.csv") for k in range(n_clusters)]
        if all(os.path.exists(p) for p in paths):
            return [load_kernel_csv(p) for p in paths]
        raise ConfigurationError(
            "dataset has no kernel files; pass --kernel diffusion:<eta>|file:<path>|rbf:<bandwidth>"
        )
    kind, _, arg = str(spec).partition(":")
    if kind == "diffusion":
        eta = float(arg)
        graphs = []
        for k in range(n_clusters):
            path = os.path.join(dataset_dir, f"graph_{k}.csv")
            if not os.path.exists(path):
                raise ConfigurationError(f"diffusion kernel needs prior graph file {path}")
            graphs.append(load_adjacency_csv(path))
        return [diffusion_kernel(g, eta) for g in graphs]
    if kind == "file":
        if os.path.isdir(arg):
            return [load_kernel_csv(os.path.join(arg, f"kernel_{k}.csv")) for k in range(n_clusters)]
        k = load_kernel_csv(arg)
        return [k] * n_clusters
    if kind == "rbf":
        bandwidth = float(arg)
        coords_path = os.path.join(dataset_dir, "coords.csv")
        if not os.path.exists(coords_path):
            raise ConfigurationError(f"rbf kernel needs node coordinates at {coords_path}")
        coords = np.loadtxt(coords_path, delimiter=",", ndmin=2)
        if coords.shape[0] != n:
            raise ConfigurationError(f"coords.csv has {coords.shape[0]} rows, signals have {n} nodes")
        k = rbf_kernel(coords, bandwidth)
        return [k] * n_clusters
    raise ConfigurationError(f"unknown kernel spec '{spec}'")


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args, "synth")
    ds = generate(
        n=int(cfg["n"]),
        m=int(cfg["m"]),
        n_clusters=int(cfg["clusters"]),
        p=float(cfg["p"]),
        eta=float(cfg["eta"]),
        snr_target_db=float(cfg["snr"]),
        missing_rate=float(cfg["missing_rate"]),
        seed=int(cfg["seed"]),
    )
    export_dataset(ds, cfg["out"])
    print(f"wrote dataset to {cfg['out']}")
    print(json.dumps(ds.meta, indent=2, sort_keys=True))
    return 0


def _load_fit_inputs(dataset_dir: str):
    signals_path = os.path.join(dataset_dir, "signals.csv")
    if not os.path.exists(signals_path):
        raise ConfigurationError(f"no signals.csv in {dataset_dir}")
    X = load_signals_csv(signals_path)
    masks_path = os.path.join(dataset_dir, "masks.csv")
    masks = load_masks_csv(masks_path) if os.path.exists(masks_path) else None
    meta = {}
    meta_path = os.path.join(dataset_dir, "meta.json")
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            meta = json.load(fh)
    return SignalSet(X, masks), meta


def cmd_fit(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args, "fit")
    data, meta = _load_fit_inputs(args.dataset)
    n_clusters = cfg["clusters"] if cfg["clusters"] is not None else meta.get("clusters")
    if n_clusters is None:
        raise ConfigurationError("number of clusters not given and absent from dataset meta.json")
    n_clusters = int(n_clusters)
    alpha = float(cfg["alpha"])
    beta = alpha if cfg["tied_alpha_beta"] else float(cfg["beta"])
    params = FilterParams(alpha=alpha, beta=beta)
    kernels = _resolve_kernels(args.dataset, cfg["kernel"], n_clusters, data.n)
    gamma = float(cfg["gamma"])
    epsilon = float(cfg["epsilon"])
    base_seed = int(cfg["seed"])
    restarts = int(cfg["restarts"])
    if restarts < 1:
        raise ConfigurationError(f"restarts must be at least 1, got {restarts}")

    fitter = fit_masked if data.masks is not None else fit
    best, best_seed = None, base_seed
    for r in range(restarts):
        state = fitter(
            data,
            kernels,
            params,
            gamma,
            n_clusters,
            epsilon=epsilon,
            seed=base_seed + r,
            max_outer_rounds=int(cfg["max_rounds"]),
        )
        if best is None or state.objective > best.objective:
            best, best_seed = state, base_seed + r

    out = os.fspath(cfg["out"])
    os.makedirs(out, exist_ok=True)
    ioutil.atomic_write_text(
        os.path.join(out, "assignment.csv"),
        "\n".join(str(int(a)) for a in best.assignment) + "\n",
    )
    for k, g in enumerate(best.laplacians):
        ioutil.atomic_savetxt(
            os.path.join(out, f"learned_graph_{k}.csv"),
            lambda tmp, g=g: save_adjacency_csv(g, tmp),
        )
    ioutil.atomic_savetxt(
        os.path.join(out, "filtered_signals.csv"),
        lambda tmp: save_signals_csv(best.filtered, tmp),
    )
    trace_lines = ["round,objective"]
    trace_lines += [f"{i + 1},{float(v)!r}" for i, v in enumerate(best.objective_trace)]
    ioutil.atomic_write_text(os.path.join(out, "objective_trace.csv"), "\n".join(trace_lines) + "\n")
    results_meta = {
        "dataset": os.fspath(args.dataset),
        "clusters": n_clusters,
        "alpha": alpha,
        "beta": beta,
        "gamma": gamma,
        "epsilon": epsilon,
        "kernel": cfg["kernel"] if cfg["kernel"] is not None else "dataset",
        "seed": best_seed,
        "base_seed": base_seed,
        "restarts": restarts,
        "masked": data.masks is not None,
        "objective": best.objective,
        "rounds": int(best.iteration),
        "converged": bool(best.converged),
    }
    ioutil.atomic_write_text(
        os.path.join(out, "results_meta.json"), json.dumps(results_meta, indent=2, sort_keys=True) + "\n"
    )
    print(
        f"fit: K={n_clusters} objective={best.objective!r} rounds={best.iteration} "
        f"converged={best.converged}"
    )
    return 0


def _aps_by_true_cluster(pred, truth, learned, truth_graphs) -> list[float]:
    mapping = best_label_map(pred, truth)
    inverse = {int(t): p for p, t in enumerate(mapping)}
    values = []
    for c in range(len(truth_graphs)):
        p = inverse.get(c)
        if p is None or p >= len(learned):
            values.append(float("nan"))
        else:
            values.append(aps(learned[p], truth_graphs[c]))
    return values


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args, "eval")
    with open(os.path.join(args.dataset, "meta.json")) as fh:
        meta = json.load(fh)
    with open(os.path.join(args.results, "results_meta.json")) as fh:
        results_meta = json.load(fh)
    n_clusters = int(meta["clusters"])
    truth = np.loadtxt(os.path.join(args.dataset, "assignment.csv"), dtype=int, ndmin=1)
    pred = np.loadtxt(os.path.join(args.results, "assignment.csv"), dtype=int, ndmin=1)
    truth_graphs = [
        load_adjacency_csv(os.path.join(args.dataset, f"graph_{k}.csv")) for k in range(n_clusters)
    ]
    learned = [
        load_adjacency_csv(os.path.join(args.results, f"learned_graph_{k}.csv"))
        for k in range(int(results_meta["clusters"]))
    ]
    aps_list = _aps_by_true_cluster(pred, truth, learned, truth_graphs)
    record = MetricsRecord(
        seed=int(results_meta["seed"]),
        n_clusters=n_clusters,
        n=int(meta["n"]),
        m=int(meta["m"]),
        snr_db=float(meta["snr_db"]),
        missing_rate=float(meta["missing_rate"]),
        car=car(pred, truth),
        aps_per_cluster=aps_list,
        aps_mean=float(np.mean(aps_list)),
        rounds=int(results_meta["rounds"]),
        converged=bool(results_meta["converged"]),
    )
    text = record.csv_header(n_clusters) + "\n" + record.csv_row() + "\n"
    out = cfg["out"] if cfg["out"] is not None else os.path.join(args.results, "metrics.csv")
    ioutil.atomic_write_text(out, text)
    print(text, end="")
    return 0


def _experiment_cell(cfg, axis: str, grid_index: int, value, realization: int, seed_i: int):
    """One (grid value, realization) cell: synth, KMGL fit, K-means, metrics."""
    n_clusters = int(value) if axis == "clusters" else int(cfg["clusters"])
    snr = float(value) if axis == "snr" else float(cfg["snr"])
    missing = float(value) if axis == "missing-rate" else float(cfg["missing_rate"])
    mix = np.random.SeedSequence([int(seed_i), int(grid_index)]).generate_state(3)
    rows = []

    def row(method, carv, apsv, failed):
        car_cell = "" if carv is None else repr(float(carv))
        aps_cell = "" if apsv is None else repr(float(apsv))
        return (method, car_cell, aps_cell, failed)

    try:
        ds = generate(
            n=int(cfg["n"]),
            m=int(cfg["m"]),
            n_clusters=n_clusters,
            p=float(cfg["p"]),
            eta=float(cfg["eta"]),
            snr_target_db=snr,
            missing_rate=missing,
            seed=int(mix[0]),
        )
    except KmglError:
        return [row("kmgl", None, None, 1), row("kmeans", None, None, 1)]

    alpha = float(cfg["alpha"])
    beta = alpha if cfg["tied_alpha_beta"] else float(cfg["beta"])
    params = FilterParams(alpha=alpha, beta=beta)
    try:
        fitter = fit_masked if ds.signals.masks is not None else fit
        state = fitter(
            ds.signals,
            list(ds.kernels),
            params,
            float(cfg["gamma"]),
            n_clusters,
            epsilon=float(cfg["epsilon"]),
            seed=int(mix[1]),
            max_outer_rounds=int(cfg["max_rounds"]),
        )
        aps_list = _aps_by_true_cluster(
            state.assignment, ds.truth_assignment, list(state.laplacians), list(ds.truth_graphs)
        )
        rows.append(row("kmgl", car(state.assignment, ds.truth_assignment), float(np.mean(aps_list)), 0))
    except KmglError:
        rows.append(row("kmgl", None, None, 1))

    try:
        labels = kmeans_baseline(
            ds.signals, n_clusters, seed=int(mix[2]), restarts=int(cfg["kmeans_restarts"])
        )
        rows.append(row("kmeans", car(labels, ds.truth_assignment), None, 0))
    except KmglError:
        rows.append(row("kmeans", None, None, 1))
    return rows


def cmd_experiment(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args, "experiment")
    axis = cfg["axis"]
    if axis not in ("clusters", "snr", "missing-rate"):
        raise ConfigurationError("experiment requires --axis clusters|snr|missing-rate")
    grid = _parse_grid(cfg["grid"], axis)
    realizations = int(cfg["realizations"])
    if cfg["seeds"] is not None:
        seeds = [int(s) for s in cfg["seeds"]]
        if len(seeds) != realizations:
            raise ConfigurationError(
                f"seed list has {len(seeds)} entries for {realizations} realizations"
            )
    else:
        seeds = [int(cfg["seed"]) + i for i in range(realizations)]
    jobs = max(1, int(cfg["jobs"]))

    tasks = [(gi, ri) for gi in range(len(grid)) for ri in range(realizations)]

    def run(task):
        gi, ri = task
        return task, _experiment_cell(cfg, axis, gi, grid[gi], ri, seeds[ri])

    results = {}
    if jobs == 1:
        for task in tasks:
            key, rows = run(task)
            results[key] = rows
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for key, rows in pool.map(run, tasks):
                results[key] = rows

    lines = ["axis,value,realization,method,car,aps_mean,failed"]
    for gi, value in enumerate(grid):
        value_cell = str(value) if axis == "clusters" else repr(float(value))
        for ri in range(realizations):
            for method, car_cell, aps_cell, failed in results[(gi, ri)]:
                lines.append(f"{axis},{value_cell},{ri},{method},{car_cell},{aps_cell},{failed}")
    ioutil.atomic_write_text(cfg["out"], "\n".join(lines) + "\n")
    print(f"wrote {len(lines) - 1} rows to {cfg['out']}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kmgl",
        description="Joint clustering of graph signals with per-cluster graph learning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_shared(p):
        p.add_argument("--config", help="JSON config file; flags override its fields")
        p.add_argument("--seed", type=int, help="base random seed")
        p.add_argument("--out", help="output directory or file")
        p.add_argument("--jobs", type=int, help="parallel workers (experiment only)")

    p_synth = sub.add_parser("synth", help="generate a synthetic dataset directory")
    add_shared(p_synth)
    p_synth.add_argument("--n", type=int, help="number of nodes")
    p_synth.add_argument("--m", type=int, help="number of signals")
    p_synth.add_argument("--clusters", type=int, help="number of planted clusters")
    p_synth.add_argument("--p", type=float, help="edge probability of the planted graphs")
    p_synth.add_argument("--eta", type=float, help="diffusion kernel strength")
    p_synth.add_argument("--snr", type=float, help="target signal-to-noise ratio in dB")
    p_synth.add_argument("--missing-rate", dest="missing_rate", type=float, help="per-entry missing probability")
    p_synth.set_defaults(func=cmd_synth)

    p_fit = sub.add_parser("fit", help="cluster a dataset and learn one graph per cluster")
    add_shared(p_fit)
    p_fit.add_argument("dataset", help="dataset directory (from 'synth' or hand-built)")
    p_fit.add_argument("--alpha", type=float, help="side-information weight")
    p_fit.add_argument("--beta", type=float, help="smoothness weight")
    p_fit.add_argument("--gamma", type=float, help="Frobenius regularizer of learned graphs")
    p_fit.add_argument("--epsilon", type=float, help="inner-loop convergence threshold")
    p_fit.add_argument("--clusters", type=int, help="number of clusters (default: dataset meta)")
    p_fit.add_argument("--restarts", type=int, help="random restarts, best objective wins")
    p_fit.add_argument("--max-rounds", dest="max_rounds", type=int, help="outer round cap")
    p_fit.add_argument(
        "--kernel", help="kernel source: diffusion:<eta> | file:<path> | rbf:<bandwidth>"
    )
    p_fit.add_argument(
        "--tied-alpha-beta",
        dest="tied_alpha_beta",
        action="store_true",
        default=None,
        help="use the alpha value for beta as well",
    )
    p_fit.set_defaults(func=cmd_fit)

    p_eval = sub.add_parser("eval", help="score fit results against dataset ground truth")
    add_shared(p_eval)
    p_eval.add_argument("results", help="results directory written by 'fit'")
    p_eval.add_argument("dataset", help="dataset directory with ground truth")
    p_eval.set_defaults(func=cmd_eval)

    p_exp = sub.add_parser("experiment", help="sweep one axis and aggregate metrics")
    add_shared(p_exp)
    p_exp.add_argument("--axis", choices=["clusters", "snr", "missing-rate"], help="sweep axis")
    p_exp.add_argument("--grid", help="comma-separated grid values")
    p_exp.add_argument("--realizations", type=int, help="independent realizations per grid value")
    p_exp.add_argument("--n", type=int, help="number of nodes")
    p_exp.add_argument("--m", type=int, help="number of signals")
    p_exp.add_argument("--clusters", type=int, help="number of clusters (off-axis default)")
    p_exp.add_argument("--p", type=float, help="edge probability")
    p_exp.add_argument("--eta", type=float, help="diffusion kernel strength")
    p_exp.add_argument("--snr", type=float, help="SNR in dB (off-axis default)")
    p_exp.add_argument("--missing-rate", dest="missing_rate", type=float, help="missing rate (off-axis default)")
    p_exp.add_argument("--alpha", type=float, help="side-information weight")
    p_exp.add_argument("--beta", type=float, help="smoothness weight")
    p_exp.add_argument("--gamma", type=float, help="Frobenius regularizer")
    p_exp.add_argument("--epsilon", type=float, help="inner-loop convergence threshold")
    p_exp.add_argument("--kmeans-restarts", dest="kmeans_restarts", type=int, help="K-means restarts")
    p_exp.add_argument("--max-rounds", dest="max_rounds", type=int, help="outer round cap")
    p_exp.add_argument(
        "--tied-alpha-beta",
        dest="tied_alpha_beta",
        action="store_true",
        default=None,
        help="use the alpha value for beta as well",
    )
    p_exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (
        DegenerateGraphError,
        InvalidKernelError,
        SingularFilterError,
        DegenerateClusteringError,
        InconsistentStateError,
        np.linalg.LinAlgError,
    ) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
