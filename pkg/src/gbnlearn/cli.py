"""Command line interface.

Subcommands: ``generate`` (emit a random DAG, model, and samples),
``fit`` (estimate a model from a DAG file and a samples CSV), ``eval``
(score an estimated model against a true one), and ``bench`` (run a
config-driven sweep). Exit codes: 0 success, 1 usage error, 2 data or
config error, 3 numerical failure during a single fit.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

import numpy as np

from . import bench, estimators, gbn
from .dag import random_er_dag, random_tree_dag, read_dag_file, write_dag_file
from .errors import ConfigInvalid, GbnError, NumericalError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

OUTPUT_DIR_ENV = "GBNLEARN_OUT_DIR"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gbnlearn",
        description="Learn and evaluate linear-Gaussian network parameters on a known DAG.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="emit a random DAG, model, and samples")
    g.add_argument("--graph", choices=("tree", "er"), required=True)
    g.add_argument("--nodes", type=int, required=True)
    g.add_argument("--degree", type=float, default=None, help="expected degree (er only)")
    g.add_argument("--samples", type=int, required=True, help="number of rows to draw")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--weight-range", nargs=2, type=float, default=(1.0, 2.0), metavar=("LO", "HI"))
    g.add_argument(
        "--variances",
        default="unit",
        help="unit | uniform:LO,HI | ill:NODE,NODE,...:SIGMA2",
    )
    g.add_argument("--out", default=".", help="output directory (dag.txt, model.txt, samples.csv)")

    f = sub.add_parser("fit", help="estimate a model from samples")
    f.add_argument("--dag", required=True, help="DAG file")
    f.add_argument("--samples", required=True, help="samples CSV")
    f.add_argument("--method", choices=estimators.COEFFICIENT_METHODS, required=True)
    f.add_argument("--batch-extra", type=int, default=20)
    f.add_argument("--split", type=float, default=0.5)
    f.add_argument("--variance-method", choices=estimators.VARIANCE_METHODS, default="empirical")
    f.add_argument("--out", required=True, help="output model file")

    e = sub.add_parser("eval", help="score an estimated model against the truth")
    e.add_argument("truth", help="true model file")
    e.add_argument("estimate", help="estimated model file")
    e.add_argument("--per-node", action="store_true", help="also print each node's KL term")

    b = sub.add_parser("bench", help="run a config-driven sweep")
    b.add_argument("--config", required=True, help="experiment config JSON")
    b.add_argument("--out", default=None, help="output directory")
    b.add_argument("--seed", type=int, default=None, help="override the config's base_seed")
    return parser


def _parse_variances(text: str):
    if text == "unit":
        return gbn.UnitVariances()
    if text.startswith("uniform:"):
        parts = text[len("uniform:") :].split(",")
        if len(parts) != 2:
            raise ConfigInvalid(f"bad variances spec {text!r}; expected uniform:LO,HI")
        return gbn.UniformVariances(low=float(parts[0]), high=float(parts[1]))
    if text.startswith("ill:"):
        parts = text[len("ill:") :].split(":")
        if len(parts) != 2:
            raise ConfigInvalid(f"bad variances spec {text!r}; expected ill:NODES:SIGMA2")
        nodes = tuple(int(v) for v in parts[0].split(",") if v)
        return gbn.IllConditionedVariances(nodes=nodes, sigma2=float(parts[1]))
    raise ConfigInvalid(f"bad variances spec {text!r}")


def _cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.graph == "er":
        if args.degree is None:
            raise ConfigInvalid("--degree is required for er graphs")
        dag = random_er_dag(args.nodes, args.degree, rng)
    else:
        if args.degree is not None:
            raise ConfigInvalid("--degree only applies to er graphs")
        dag = random_tree_dag(args.nodes, rng)
    model = gbn.random_gbn(dag, tuple(args.weight_range), _parse_variances(args.variances), rng)
    data = gbn.sample(model, args.samples, rng)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_dag_file(dag, outdir / "dag.txt")
    gbn.save_model(model, outdir / "model.txt")
    gbn.save_samples(data, outdir / "samples.csv")
    print(f"wrote {outdir / 'dag.txt'}, {outdir / 'model.txt'}, {outdir / 'samples.csv'}")
    return EXIT_OK


def _cmd_fit(args) -> int:
    dag = read_dag_file(args.dag)
    data = gbn.load_samples(args.samples)
    config = estimators.FitConfig(
        method=args.method,
        batch_extra=args.batch_extra,
        split_fraction=args.split,
        variance_method=args.variance_method,
    )
    model = estimators.fit(dag, data, config)
    gbn.save_model(model, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    truth = gbn.load_model(args.truth)
    estimate = gbn.load_model(args.estimate)
    report = gbn.kl_divergence(truth, estimate)
    print(f"kl_total {report.kl_total:.17g}")
    print(f"tv_upper {report.tv_upper:.17g}")
    if args.per_node:
        for i, v in enumerate(report.per_node_dcp):
            print(f"dcp {i} {v:.17g}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    config = bench.load_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, base_seed=args.seed)
        bench.validate_config(config)
    outdir = Path(args.out or os.environ.get(OUTPUT_DIR_ENV) or "bench_out")
    outdir.mkdir(parents=True, exist_ok=True)
    rows = bench.run_experiment(config)
    summary = bench.summarize(rows)
    bench.write_results_csv(rows, outdir / "results.csv")
    bench.write_summary_csv(summary, outdir / "summary.csv")
    curve_paths = bench.write_curve_files(summary, outdir)
    print(f"wrote {len(rows)} rows to {outdir / 'results.csv'}")
    print(f"wrote {outdir / 'summary.csv'} and {len(curve_paths)} curve files")
    return EXIT_OK


def cli(argv) -> int:
    """Run the CLI on ``argv`` (without the program name); returns an exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "eval":
            return _cmd_eval(args)
        return _cmd_bench(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (GbnError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(cli(sys.argv[1:]))
