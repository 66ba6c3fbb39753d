"""Command-line interface.

Subcommands: generate | ingest | distance | cluster | benchmark |
consistency | stability.  Exit codes: 0 success, 1 validation error,
2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments, metrics, synth
from .cluster import write_dendrogram_csv, write_partition_csv
from .cluster import ari as ari_score
from .cluster import hc_cluster
from .panel import Panel, read_labels_csv, read_panel_csv, write_labels_csv, write_panel_csv
from .representation import DEFAULT_BIN_COUNT, build_representation

log = logging.getLogger("gnpr")

_MISSING_TOKENS = {"", "na", "nan", "null", "none"}


class CliError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; we reserve 2 for I/O
    def error(self, message):
        raise CliError(message)


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _str_list(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def _preference(text: str):
    return None if text == "median" else float(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gnpr", description=__doc__)
    parser.add_argument("--threads", type=int, default=1,
                        help="worker cap for pairwise distance computation; "
                             "the output does not depend on it")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a labeled synthetic panel")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=synth.PRESET_NAMES)
    src.add_argument("--spec", help="JSON spec document")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--out-panel", required=True)
    p.add_argument("--out-labels", required=True)

    p = sub.add_parser("ingest", help="turn a price-level CSV into a panel")
    p.add_argument("prices")
    p.add_argument("--diff", action="store_true",
                   help="emit first differences of each column")
    p.add_argument("--out", required=True)

    p = sub.add_parser("distance", help="pairwise distance matrix of a panel")
    p.add_argument("panel")
    p.add_argument("--kind", choices=experiments.DISTANCE_KINDS, default="gnpr")
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--bins", type=int, default=DEFAULT_BIN_COUNT)
    p.add_argument("--out", required=True)

    p = sub.add_parser("cluster", help="cluster a panel or distance matrix")
    p.add_argument("input")
    p.add_argument("--matrix", action="store_true",
                   help="input is a precomputed distance-matrix CSV")
    p.add_argument("--algo", choices=experiments.ALGORITHMS, required=True)
    p.add_argument("--Q", type=int, default=None, help="cluster count (hc/kmeanspp)")
    p.add_argument("--kind", choices=experiments.DISTANCE_KINDS, default="gnpr")
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--bins", type=int, default=DEFAULT_BIN_COUNT)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--damping", type=float, default=0.9)
    p.add_argument("--preference", type=_preference, default=None,
                   help="AP preference value or 'median' (default)")
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--labels", default=None, help="ground-truth labels CSV; prints ARI")
    p.add_argument("--dendrogram", default=None, help="write the hc merge table here")
    p.add_argument("--out", required=True)

    p = sub.add_parser("benchmark", help="ARI table over presets x distances x algorithms")
    p.add_argument("--presets", type=_str_list, default=["A", "B", "C"])
    p.add_argument("--distances", type=_str_list, default=["pearson", "l2", "gpr", "gnpr"])
    p.add_argument("--thetas", type=_float_list, default=[0.0, 1.0, 0.5])
    p.add_argument("--algos", type=_str_list, default=["hc-average", "kmeanspp", "ap"])
    p.add_argument("--seeds", type=_int_list, default=[0, 1, 2, 3, 4])
    p.add_argument("--bins", type=int, default=DEFAULT_BIN_COUNT)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--damping", type=float, default=0.9)
    p.add_argument("--preference", type=_preference, default=None)
    p.add_argument("--beta", type=float, default=None,
                   help="override the factor loading of every preset")
    p.add_argument("--N", type=int, default=None, help="override every preset's N")
    p.add_argument("--T", type=int, default=None, help="override every preset's T")
    p.add_argument("--out", required=True, help="JSON report path; a .md sibling is written too")

    p = sub.add_parser("consistency", help="ARI vs (N, T) grid on the convergence preset")
    p.add_argument("--N-list", type=_int_list, default=[64])
    p.add_argument("--T-list", type=_int_list, default=[10, 50, 200, 500, 2000])
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--algo", choices=experiments.ALGORITHMS, default="hc-average")
    p.add_argument("--seeds", type=_int_list, default=[0, 1, 2, 3, 4])
    p.add_argument("--bins", type=int, default=DEFAULT_BIN_COUNT)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--damping", type=float, default=0.9)
    p.add_argument("--preference", type=_preference, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("stability", help="odd/even split agreement per method")
    p.add_argument("panel")
    p.add_argument("--methods", type=_str_list, default=["gnpr+hc-ward", "l2+hc-ward"])
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--Q", type=int, required=True)
    p.add_argument("--bins", type=int, default=DEFAULT_BIN_COUNT)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--damping", type=float, default=0.9)
    p.add_argument("--preference", type=_preference, default=None)
    p.add_argument("--out", required=True)

    return parser


def _write_json(doc: dict, path) -> None:
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def cmd_generate(args) -> None:
    if args.preset is not None:
        spec = synth.preset(args.preset, n=args.N, t=args.T)
        seed = args.seed if args.seed is not None else 0
    else:
        with open(args.spec) as f:
            spec, json_seed = synth.spec_from_json(json.load(f))
        if args.N is not None or args.T is not None:
            spec = replace(spec, N=args.N or spec.N, T=args.T or spec.T)
        seed = args.seed if args.seed is not None else (json_seed if json_seed is not None else 0)
    if args.beta is not None:
        spec = replace(spec, beta=args.beta)
    labeled = synth.generate(spec, seed)
    write_panel_csv(labeled.panel, args.out_panel)
    write_labels_csv(labeled.panel.series_ids, labeled.labels, args.out_labels)
    echo_path = Path(args.out_panel).with_suffix(".spec.json")
    _write_json(synth.spec_to_json(spec, seed=seed), echo_path)
    log.info("wrote %s (%d series x %d), labels %s, spec %s",
             args.out_panel, spec.N, spec.T, args.out_labels, echo_path)


def _parse_price_cell(cell: str, path: str, lineno: int) -> float:
    token = cell.strip()
    if token.lower() in _MISSING_TOKENS:
        return np.nan
    try:
        value = float(token)
    except ValueError:
        raise CliError(f"{path}:{lineno}: non-numeric cell {cell!r}") from None
    return value if np.isfinite(value) else np.nan


def cmd_ingest(args) -> None:
    with open(args.prices, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise CliError(f"{args.prices}: empty file")
        rows = []
        dropped = 0
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CliError(f"{args.prices}:{lineno}: expected {len(header)} columns")
            parsed = [_parse_price_cell(c, args.prices, lineno) for c in row]
            if any(np.isnan(v) for v in parsed):
                dropped += 1
                continue
            rows.append(parsed)
    if dropped:
        log.warning("%d row%s dropped (missing values)", dropped, "s" if dropped > 1 else "")
    if len(rows) < 3:
        raise CliError(f"{args.prices}: fewer than 3 usable rows ({len(rows)})")
    values = np.array(rows, dtype=np.float64).T
    if args.diff:
        values = np.diff(values, axis=1)
    write_panel_csv(Panel(values, tuple(header)), args.out)
    log.info("wrote %s (%d series x %d)", args.out, values.shape[0], values.shape[1])


def cmd_distance(args) -> None:
    panel = read_panel_csv(args.panel)
    start = time.perf_counter()
    dm = experiments.compute_distance_matrix(panel, args.kind, args.theta, args.bins,
                                             args.threads)
    elapsed = time.perf_counter() - start
    metrics.write_distance_csv(dm, args.out)
    pairs = panel.n_series * (panel.n_series - 1) // 2
    log.info("%s distance matrix %dx%d in %.2fs (%.0f pairs/s) -> %s",
             args.kind, dm.n_series, dm.n_series, elapsed,
             pairs / elapsed if elapsed > 0 else float("inf"), args.out)


def cmd_cluster(args) -> None:
    if args.algo in ("hc-average", "hc-ward", "kmeanspp") and args.Q is None:
        raise CliError(f"--Q is required for {args.algo}")
    dendrogram = None
    if args.matrix:
        if args.algo == "kmeanspp":
            raise CliError("kmeanspp needs a panel input to build coordinates, "
                           "not a precomputed matrix")
        dm = metrics.read_distance_csv(args.input)
        ids = dm.series_ids
        emb = None
    else:
        panel = read_panel_csv(args.input)
        ids = panel.series_ids
        rep = build_representation(panel, args.bins) if args.kind == "gnpr" else None
        if args.algo == "kmeanspp":
            emb = experiments.compute_embedding(panel, args.kind, args.theta, args.bins,
                                                rep=rep)
            dm = None
        else:
            emb = None
            dm = experiments.compute_distance_matrix(panel, args.kind, args.theta,
                                                     args.bins, args.threads, rep=rep)

    if args.algo in ("hc-average", "hc-ward") and args.dendrogram is not None:
        part, dendrogram = hc_cluster(dm, args.algo.removeprefix("hc-"), args.Q)
        labels, info = part.labels, {}
    else:
        labels, info = experiments.run_clustering(
            args.algo, dm=dm, embedding=emb, n_clusters=args.Q, seed=args.seed,
            restarts=args.restarts, damping=args.damping, preference=args.preference,
            max_iter=args.max_iter)

    if info.get("converged") is False:
        log.warning("affinity propagation did not converge within --max-iter")
    write_partition_csv(ids, labels, args.out)
    if dendrogram is not None:
        write_dendrogram_csv(dendrogram, args.dendrogram)
    log.info("wrote %s (%d clusters)", args.out, int(labels.max()) + 1)
    if args.labels is not None:
        truth_ids, truth = read_labels_csv(args.labels)
        if truth_ids != tuple(ids):
            raise CliError(f"{args.labels}: series ids do not match the input")
        print(f"ARI = {ari_score(labels, truth):.2f}")


def cmd_benchmark(args) -> None:
    for kind in args.distances:
        if kind not in experiments.DISTANCE_KINDS:
            raise CliError(f"unknown distance kind {kind!r}")
    for algo in args.algos:
        if algo not in experiments.ALGORITHMS:
            raise CliError(f"unknown algorithm {algo!r}")
    report = experiments.run_benchmark(
        args.presets, args.distances, args.thetas, args.algos, args.seeds,
        bins=args.bins, restarts=args.restarts, damping=args.damping,
        preference=args.preference, threads=args.threads, beta=args.beta,
        n_override=args.N, t_override=args.T)
    _write_json(report, args.out)
    markdown = experiments.render_benchmark_markdown(report)
    md_path = Path(args.out).with_suffix(".md")
    md_path.write_text(markdown)
    sys.stdout.write(markdown)
    log.info("wrote %s and %s", args.out, md_path)


def cmd_consistency(args) -> None:
    rows = experiments.run_consistency(
        args.N_list, args.T_list, args.theta, args.algo, args.seeds,
        bins=args.bins, restarts=args.restarts, damping=args.damping,
        preference=args.preference, threads=args.threads)
    with open(args.out, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["N", "T", "mean_ari"])
        for row in rows:
            writer.writerow([row["N"], row["T"], f"{row['mean_ari']:.17g}"])
    log.info("wrote %s (%d grid cells)", args.out, len(rows))


def cmd_stability(args) -> None:
    panel = read_panel_csv(args.panel)
    report = experiments.run_stability(
        panel, args.methods, args.theta, args.Q, bins=args.bins, seed=args.seed,
        restarts=args.restarts, damping=args.damping, preference=args.preference,
        threads=args.threads)
    _write_json(report, args.out)
    for token, res in report["methods"].items():
        print(f"{token}: even/odd ARI = {res['ari_even_odd']:.2f}")
    log.info("wrote %s", args.out)


_COMMANDS = {
    "generate": cmd_generate,
    "ingest": cmd_ingest,
    "distance": cmd_distance,
    "cluster": cmd_cluster,
    "benchmark": cmd_benchmark,
    "consistency": cmd_consistency,
    "stability": cmd_stability,
}


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.threads < 1:
            raise CliError("--threads must be >= 1")
        _COMMANDS[args.command](args)
    except (CliError, ValueError, IndexError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
