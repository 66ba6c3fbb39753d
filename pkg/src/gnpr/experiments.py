"""Benchmark, consistency and stability harnesses.

Everything here is driven by the library modules and returns plain
dicts / row lists so the CLI can serialize them and tests can assert on
them directly.
"""

from __future__ import annotations

import time
from dataclasses import replace

import numpy as np

from . import metrics
from .cluster import affinity_propagation, ari, hc_cluster, kmeanspp
from .panel import Panel
from .representation import DEFAULT_BIN_COUNT, build_representation
from .synth import generate, preset

SCHEMA_VERSION = 1

DISTANCE_KINDS = ("pearson", "l2", "gpr", "gnpr")
ALGORITHMS = ("hc-average", "hc-ward", "kmeanspp", "ap")


def compute_distance_matrix(panel: Panel, kind: str, theta: float = 0.5,
                            bins: int = DEFAULT_BIN_COUNT, threads: int = 1,
                            rep=None) -> metrics.DistanceMatrix:
    """Distance matrix of the requested kind over a panel."""
    if kind == "gnpr":
        rep = build_representation(panel, bins) if rep is None else rep
        return metrics.distance_matrix(rep, theta, threads)
    if kind == "gpr":
        return metrics.gpr_distance_matrix(panel, theta, threads)
    if kind == "l2":
        return metrics.l2_distance_matrix(panel, threads)
    if kind == "pearson":
        return metrics.pearson_distance_matrix(panel, threads)
    raise ValueError(f"unknown distance kind {kind!r}, expected one of {DISTANCE_KINDS}")


def compute_embedding(panel: Panel, kind: str, theta: float = 0.5,
                      bins: int = DEFAULT_BIN_COUNT, rep=None) -> metrics.Embedding:
    """Coordinate embedding for k-means, where one exists."""
    if kind == "gnpr":
        rep = build_representation(panel, bins) if rep is None else rep
        return metrics.gnpr_embedding(rep, theta)
    if kind == "l2":
        return metrics.l2_embedding(panel)
    if kind == "pearson":
        return metrics.pearson_embedding(panel)
    raise ValueError(f"no coordinate embedding for distance kind {kind!r}")


def run_clustering(algo: str, *, dm=None, embedding=None, n_clusters=None, seed=0,
                   restarts: int = 10, damping: float = 0.9, preference=None,
                   max_iter: int = 1000):
    """Dispatch one clustering algorithm; returns (labels, info dict)."""
    if algo in ("hc-average", "hc-ward"):
        if dm is None:
            raise ValueError(f"{algo} needs a distance matrix")
        if n_clusters is None:
            raise ValueError(f"{algo} needs a cluster count")
        part, _ = hc_cluster(dm, algo.removeprefix("hc-"), n_clusters)
        return part.labels, {}
    if algo == "kmeanspp":
        if embedding is None:
            raise ValueError("kmeanspp needs a coordinate embedding, not a distance matrix")
        if n_clusters is None:
            raise ValueError("kmeanspp needs a cluster count")
        res = kmeanspp(embedding, n_clusters, seed=seed, restarts=restarts)
        return res.partition.labels, {"inertia": res.inertia}
    if algo == "ap":
        if dm is None:
            raise ValueError("ap needs a distance matrix")
        res = affinity_propagation(dm, preference=preference, damping=damping,
                                   max_iter=max_iter)
        return res.partition.labels, {"converged": res.converged,
                                      "n_clusters": res.partition.n_clusters}
    raise ValueError(f"unknown algorithm {algo!r}, expected one of {ALGORITHMS}")


def _needs_theta(kind: str) -> bool:
    return kind in ("gnpr", "gpr")


def run_benchmark(presets, distances, thetas, algos, seeds, *, bins=DEFAULT_BIN_COUNT,
                  restarts=10, damping=0.9, preference=None, threads=1,
                  beta=None, n_override=None, t_override=None) -> dict:
    """Full cross-product of datasets x distances x thetas x algorithms.

    Returns a report dict with one cell per combination, each holding
    per-seed ARI values against the generated ground truth, their
    mean/std, and the wall-clock seconds spent on the cell.  A failing
    cell records its error and the run continues.
    """
    cells = {}
    for name in presets:
        spec = preset(name, n=n_override, t=t_override)
        if beta is not None:
            spec = replace(spec, beta=beta)
        for seed in seeds:
            labeled = generate(spec, seed)
            panel = labeled.panel
            truth = labeled.labels
            rep = build_representation(panel, bins) if "gnpr" in distances else None
            dep_sq = metrics.pairwise_dep_sq(rep, threads) if rep is not None else None
            dist_sq = metrics.pairwise_dist_sq(rep, threads) if rep is not None else None

            for kind in distances:
                for theta in (thetas if _needs_theta(kind) else [None]):
                    dm = None
                    emb = None
                    for algo in algos:
                        key = (name, kind, theta, algo)
                        cell = cells.setdefault(key, {
                            "dataset": name, "distance": kind, "theta": theta,
                            "algorithm": algo, "ari_values": [],
                            "runtime_seconds": 0.0, "error": None,
                        })
                        if cell["error"] is not None:
                            continue
                        start = time.perf_counter()
                        try:
                            if algo == "kmeanspp":
                                if emb is None:
                                    emb = compute_embedding(panel, kind, theta or 0.0,
                                                            bins, rep=rep)
                                labels, _ = run_clustering(
                                    algo, embedding=emb, n_clusters=spec.Q, seed=seed,
                                    restarts=restarts)
                            else:
                                if dm is None:
                                    if kind == "gnpr":
                                        dm = metrics.combine_components(
                                            dep_sq, dist_sq, theta, panel.series_ids)
                                    else:
                                        dm = compute_distance_matrix(
                                            panel, kind, theta or 0.0, bins, threads)
                                labels, _ = run_clustering(
                                    algo, dm=dm, n_clusters=spec.Q, seed=seed,
                                    damping=damping, preference=preference)
                            cell["ari_values"].append(ari(labels, truth))
                        except ValueError as exc:
                            cell["error"] = str(exc)
                        cell["runtime_seconds"] += time.perf_counter() - start

    for cell in cells.values():
        vals = cell["ari_values"]
        if cell["error"] is None and vals:
            cell["ari_mean"] = float(np.mean(vals))
            cell["ari_std"] = float(np.std(vals))
        else:
            cell["ari_mean"] = None
            cell["ari_std"] = None
        cell["runtime_seconds"] = round(cell["runtime_seconds"], 3)

    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "benchmark",
        "config": {
            "presets": list(presets), "distances": list(distances),
            "thetas": list(thetas), "algorithms": list(algos),
            "seeds": list(seeds), "bins": bins, "restarts": restarts,
            "damping": damping,
            "preference": "median" if preference is None else preference,
            "threads": threads, "beta_override": beta,
            "n_override": n_override, "t_override": t_override,
        },
        "cells": [cells[k] for k in sorted(cells, key=str)],
    }


def _distance_label(kind: str, theta) -> str:
    if kind == "pearson":
        return "(1-rho)/2"
    if kind == "l2":
        return "E[(X-Y)^2]"
    return f"{kind.upper()} theta={theta:g}"


def render_benchmark_markdown(report: dict) -> str:
    """Markdown tables, one per algorithm: distances x datasets."""
    cfg = report["config"]
    datasets = cfg["presets"]
    lines = ["# Clustering benchmark (mean ARI over seeds)", ""]
    lines.append(f"seeds={cfg['seeds']} bins={cfg['bins']} restarts={cfg['restarts']} "
                 f"damping={cfg['damping']} preference={cfg['preference']}")
    by_algo: dict[str, dict] = {}
    for cell in report["cells"]:
        by_algo.setdefault(cell["algorithm"], {})[
            (cell["distance"], cell["theta"], cell["dataset"])] = cell
    for algo in cfg["algorithms"]:
        rows = by_algo.get(algo, {})
        lines += ["", f"## {algo}", ""]
        lines.append("| Distance | " + " | ".join(datasets) + " |")
        lines.append("|" + "---|" * (len(datasets) + 1))
        for kind in cfg["distances"]:
            for theta in (cfg["thetas"] if _needs_theta(kind) else [None]):
                out = [f"| {_distance_label(kind, theta)} "]
                for ds in datasets:
                    cell = rows.get((kind, theta, ds))
                    if cell is None:
                        out.append("| ")
                    elif cell["error"] is not None:
                        out.append("| error ")
                    else:
                        out.append(f"| {cell['ari_mean']:.2f} ± {cell['ari_std']:.2f} ")
                lines.append("".join(out) + "|")
    return "\n".join(lines) + "\n"


def run_consistency(n_list, t_list, theta, algo, seeds, *, bins=DEFAULT_BIN_COUNT,
                    restarts=10, damping=0.9, preference=None, threads=1) -> list[dict]:
    """Mean ARI on the convergence-study preset over an (N, T) grid."""
    rows = []
    for n in n_list:
        for t in t_list:
            spec = preset("G", n=n, t=t)
            values = []
            for seed in seeds:
                labeled = generate(spec, seed)
                rep = build_representation(labeled.panel, bins)
                dm = metrics.distance_matrix(rep, theta, threads)
                if algo == "kmeanspp":
                    emb = metrics.gnpr_embedding(rep, theta)
                    labels, _ = run_clustering(algo, embedding=emb, n_clusters=spec.Q,
                                               seed=seed, restarts=restarts)
                else:
                    labels, _ = run_clustering(algo, dm=dm, n_clusters=spec.Q, seed=seed,
                                               damping=damping, preference=preference)
                values.append(ari(labels, labeled.labels))
            rows.append({"N": n, "T": t, "mean_ari": float(np.mean(values))})
    return rows


def split_even_odd(panel: Panel) -> tuple[Panel, Panel]:
    """Sub-panels on even and odd time indices (0-based)."""
    if panel.length < 4:
        raise ValueError(f"need at least 4 observations to split, got {panel.length}")
    even = Panel(panel.values[:, 0::2], panel.series_ids)
    odd = Panel(panel.values[:, 1::2], panel.series_ids)
    return even, odd


def parse_method(token: str) -> tuple[str, str]:
    """Split a method token like 'gnpr+hc-ward' into (distance, algo)."""
    try:
        kind, algo = token.split("+", 1)
    except ValueError:
        raise ValueError(f"method {token!r} is not of the form <distance>+<algorithm>") from None
    if kind not in DISTANCE_KINDS:
        raise ValueError(f"unknown distance kind {kind!r} in method {token!r}")
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r} in method {token!r}")
    return kind, algo


def run_stability(panel: Panel, methods, theta: float, n_clusters: int, *,
                  bins=DEFAULT_BIN_COUNT, seed=0, restarts=10, damping=0.9,
                  preference=None, threads=1) -> dict:
    """Cluster even and odd halves independently; report their agreement.

    methods is a list of '<distance>+<algorithm>' tokens; gnpr and gpr
    use the given theta.
    """
    even, odd = split_even_odd(panel)
    results = {}
    for token in methods:
        kind, algo = parse_method(token)
        halves = []
        for half in (even, odd):
            if algo == "kmeanspp":
                emb = compute_embedding(half, kind, theta, bins)
                labels, _ = run_clustering(algo, embedding=emb, n_clusters=n_clusters,
                                           seed=seed, restarts=restarts)
            else:
                dm = compute_distance_matrix(half, kind, theta, bins, threads)
                labels, _ = run_clustering(algo, dm=dm, n_clusters=n_clusters, seed=seed,
                                           damping=damping, preference=preference)
            halves.append(labels)
        results[token] = {
            "ari_even_odd": ari(halves[0], halves[1]),
            "even_cluster_sizes": sorted(np.bincount(halves[0]).tolist(), reverse=True),
            "odd_cluster_sizes": sorted(np.bincount(halves[1]).tolist(), reverse=True),
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "stability",
        "config": {"theta": theta, "n_clusters": n_clusters, "bins": bins, "seed": seed,
                   "methods": list(methods), "even_length": even.length,
                   "odd_length": odd.length},
        "methods": results,
    }
