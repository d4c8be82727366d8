"""Command-line interface.

Subcommands: ``synth`` (generate a world), ``solve`` (align two matrix
files), ``sweep`` (robustness sweeps), ``baseline`` (train the contrastive
baseline), ``align-embeddings`` (align externally produced features) and
``boundary`` (the linear-boundary suite).

Exit codes: 0 success, 1 usage/configuration error, 2 data error,
3 numerical error. Every run prints its resolved configuration (defaults
and seeds included) to stderr before computing; result files and ``--json``
reports are deterministic for fixed flags.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import matio
from .contrastive import ContrastiveConfig, train_linear_contrastive
from .errors import DataError, NumericalError
from .experiments import (
    SweepAxis,
    SweepConfig,
    SweepFixed,
    align_embeddings,
    load_embedding_pairs,
    run_boundary_suite,
    run_sweep,
    run_synthetic_suite,
)
from .metrics import make_report
from .solver import AlignmentProblem, SvdMode, encode, solve_alignment
from .synthetic import make_boundary_world, make_gmm_world, save_world


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so main() owns exit codes."""

    def error(self, message):
        raise _UsageError(message)


def _print_config(name: str, values: dict) -> None:
    print(f"config {name}:", file=sys.stderr)
    for key in sorted(values):
        print(f"  {key} = {values[key]}", file=sys.stderr)


def _write_report(out_dir: str, report, filename: str = "report.csv") -> None:
    matio.atomic_write_text(
        os.path.join(out_dir, filename),
        report.csv_header() + "\n" + report.csv_row() + "\n")


def _emit_report(report, as_json: bool) -> None:
    if as_json:
        print(json.dumps(report.to_dict(), sort_keys=True))
    else:
        print(report.format_block())


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="palign",
                     description="Two-modality latent alignment via SVD null-space extraction")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic world directory")
    p.add_argument("--family", choices=["gmm", "boundary"], default="gmm",
                   help="latent distribution family")
    p.add_argument("--n", type=int, default=2000, help="sample count")
    p.add_argument("--k", type=int, default=2, help="latent dimension")
    p.add_argument("--d1", type=int, default=2, help="modality-1 dimension")
    p.add_argument("--d2", type=int, default=2, help="modality-2 dimension")
    p.add_argument("--noise-sigma", type=float, default=0.0,
                   help="additive Gaussian noise level")
    p.add_argument("--margin", type=float, default=10.0,
                   help="boundary family: maximum perpendicular offset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--suite", action="store_true",
                   help="also solve the canonical gmm suite and write "
                        "latent scatter data plus a report")
    p.add_argument("--json", action="store_true",
                   help="with --suite, print the report as JSON")

    p = sub.add_parser("solve", help="solve alignment for two matrix CSVs")
    p.add_argument("--x1", required=True, help="modality-1 matrix CSV (d1 x n)")
    p.add_argument("--x2", required=True, help="modality-2 matrix CSV (d2 x n)")
    p.add_argument("--k", type=int, required=True, help="latent dimension")
    p.add_argument("--rank-tolerance", type=float, default=1e-10,
                   help="relative singular-value cutoff for rank counting")
    p.add_argument("--svd-mode", choices=["full", "truncated"], default="full")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--json", action="store_true", help="print the report as JSON")

    p = sub.add_parser("sweep", help="robustness sweep over n, d or k")
    p.add_argument("--axis", choices=["n", "d", "k"], required=True)
    p.add_argument("--values", default=None,
                   help="comma-separated axis values (default: built-in grid)")
    p.add_argument("--n", type=int, default=1000, help="fixed sample count")
    p.add_argument("--d1", type=int, default=8, help="fixed modality-1 dimension")
    p.add_argument("--d2", type=int, default=8, help="fixed modality-2 dimension")
    p.add_argument("--k", type=int, default=2, help="fixed latent dimension")
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--seeds", default=None,
                   help="comma-separated seeds (default 0,1,2,3,4)")
    p.add_argument("--seed", type=int, default=None,
                   help="single seed (shorthand for --seeds SEED)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="parallel workers")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("baseline", help="train the linear contrastive baseline")
    p.add_argument("--x1", required=True)
    p.add_argument("--x2", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--temperature", type=float, default=0.5)
    p.add_argument("--learning-rate", type=float, default=0.03)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch-size", type=int, default=512,
                   help="mini-batch size; 0 means full batch")
    p.add_argument("--lr-schedule", choices=["constant", "linear"], default="linear")
    p.add_argument("--init-scale", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("align-embeddings",
                       help="solve alignment on externally produced feature files")
    p.add_argument("--z1", required=True, help="modality-1 feature matrix CSV")
    p.add_argument("--z2", required=True, help="modality-2 feature matrix CSV")
    p.add_argument("--manifest", default=None, help="producer manifest JSON")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--rank-tolerance", type=float, default=1e-10)
    p.add_argument("--svd-mode", choices=["full", "truncated"], default="full")
    p.add_argument("--holdout", type=float, default=0.0,
                   help="fraction of pairs withheld from the solve, "
                        "reported separately")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("boundary", help="run the linear-boundary suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output directory (optional)")
    p.add_argument("--json", action="store_true")

    return parser


def _cmd_synth(args) -> int:
    _print_config("synth", {
        "family": args.family, "n": args.n, "k": args.k, "d1": args.d1,
        "d2": args.d2, "noise_sigma": args.noise_sigma, "margin": args.margin,
        "seed": args.seed, "out": args.out, "suite": args.suite,
    })
    if args.suite:
        if args.family != "gmm":
            raise ValueError("--suite runs the canonical gmm configuration")
        result = run_synthetic_suite(seed=args.seed, out_dir=args.out)
        save_world(result.world, os.path.join(args.out, "world"))
        _emit_report(result.report, args.json)
        return 0
    if args.family == "gmm":
        world = make_gmm_world(n=args.n, d=(args.d1, args.d2), k=args.k,
                               noise_sigma=args.noise_sigma, seed=args.seed)
    else:
        world = make_boundary_world(n=args.n, d=(args.d1, args.d2),
                                    margin=args.margin,
                                    noise_sigma=args.noise_sigma, seed=args.seed)
    save_world(world, args.out)
    print(f"world written to {args.out}", file=sys.stderr)
    return 0


def _cmd_solve(args) -> int:
    _print_config("solve", {
        "x1": args.x1, "x2": args.x2, "k": args.k,
        "rank_tolerance": args.rank_tolerance, "svd_mode": args.svd_mode,
        "out": args.out,
    })
    x1 = matio.load_matrix_csv(args.x1)
    x2 = matio.load_matrix_csv(args.x2)
    mode = SvdMode.FULL if args.svd_mode == "full" else SvdMode.TRUNCATED_SMALLEST_K
    problem = AlignmentProblem(x1, x2, args.k,
                               rank_tolerance=args.rank_tolerance, svd_mode=mode)
    solution = solve_alignment(problem)
    z1_hat = encode(solution.a1, x1)
    z2_hat = encode(solution.a2, x2)
    report = make_report(z1_hat, z2_hat, solution.residual_frobenius)
    os.makedirs(args.out, exist_ok=True)
    matio.save_matrix_csv(os.path.join(args.out, "A1.csv"), solution.a1)
    matio.save_matrix_csv(os.path.join(args.out, "A2.csv"), solution.a2)
    matio.save_matrix_csv(os.path.join(args.out, "Z1hat.csv"), z1_hat)
    matio.save_matrix_csv(os.path.join(args.out, "Z2hat.csv"), z2_hat)
    _write_report(args.out, report)
    _emit_report(report, args.json)
    return 0


def _parse_int_list(text: str):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise _UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _cmd_sweep(args) -> int:
    if args.seed is not None and args.seeds is not None:
        raise _UsageError("pass either --seed or --seeds, not both")
    if args.seed is not None:
        seeds = (args.seed,)
    elif args.seeds is not None:
        seeds = _parse_int_list(args.seeds)
    else:
        seeds = (0, 1, 2, 3, 4)
    values = _parse_int_list(args.values) if args.values is not None else None
    config = SweepConfig(
        axis=SweepAxis(args.axis),
        axis_values=values,
        fixed=SweepFixed(n=args.n, d1=args.d1, d2=args.d2, k=args.k),
        noise_sigma=args.noise_sigma,
        seeds=seeds,
        output_path=args.out,
    )
    _print_config("sweep", {
        "axis": args.axis, "values": config.axis_values,
        "n": args.n, "d1": args.d1, "d2": args.d2, "k": args.k,
        "noise_sigma": args.noise_sigma, "seeds": config.seeds,
        "jobs": args.jobs, "out": args.out,
    })
    records = run_sweep(config, jobs=args.jobs)
    failures = sum(1 for r in records if r.error)
    print(f"{len(records)} records written to {args.out} "
          f"({failures} failed)", file=sys.stderr)
    return 0


def _cmd_baseline(args) -> int:
    x1 = matio.load_matrix_csv(args.x1)
    x2 = matio.load_matrix_csv(args.x2)
    batch = None if args.batch_size == 0 else args.batch_size
    config = ContrastiveConfig(
        k=args.k, temperature=args.temperature,
        learning_rate=args.learning_rate, epochs=args.epochs,
        batch_size=batch, seed=args.seed, init_scale=args.init_scale,
        lr_schedule=args.lr_schedule)
    _print_config("baseline", dict(config.to_dict(), x1=args.x1, x2=args.x2,
                                   out=args.out))
    a1, a2, history = train_linear_contrastive(x1, x2, config)
    z1_hat = a1 @ x1
    z2_hat = a2 @ x2
    report = make_report(z1_hat, z2_hat, float(np.linalg.norm(z1_hat - z2_hat)))
    os.makedirs(args.out, exist_ok=True)
    matio.save_matrix_csv(os.path.join(args.out, "A1.csv"), a1)
    matio.save_matrix_csv(os.path.join(args.out, "A2.csv"), a2)
    matio.save_matrix_csv(os.path.join(args.out, "Z1hat.csv"), z1_hat)
    matio.save_matrix_csv(os.path.join(args.out, "Z2hat.csv"), z2_hat)
    matio.atomic_write_text(
        os.path.join(args.out, "loss_history.csv"),
        "epoch,loss\n" + "".join(f"{e},{matio.format_float(v)}\n"
                                 for e, v in enumerate(history)))
    matio.save_manifest(os.path.join(args.out, "manifest.json"),
                        dict(config.to_dict(), producer="palign-baseline",
                             d1=x1.shape[0], d2=x2.shape[0], n=x1.shape[1]))
    _write_report(args.out, report)
    _emit_report(report, args.json)
    return 0


def _cmd_align_embeddings(args) -> int:
    _print_config("align-embeddings", {
        "z1": args.z1, "z2": args.z2, "manifest": args.manifest, "k": args.k,
        "rank_tolerance": args.rank_tolerance, "svd_mode": args.svd_mode,
        "holdout": args.holdout, "split_seed": args.split_seed, "out": args.out,
    })
    pairs = load_embedding_pairs(args.z1, args.z2, manifest_path=args.manifest)
    mode = SvdMode.FULL if args.svd_mode == "full" else SvdMode.TRUNCATED_SMALLEST_K
    result = align_embeddings(pairs, args.k,
                              rank_tolerance=args.rank_tolerance,
                              svd_mode=mode,
                              holdout_fraction=args.holdout,
                              split_seed=args.split_seed,
                              out_dir=args.out)
    _emit_report(result.report, args.json)
    if result.holdout_report is not None and not args.json:
        print("holdout split:")
        print(result.holdout_report.format_block())
    return 0


def _cmd_boundary(args) -> int:
    _print_config("boundary", {"seed": args.seed, "out": args.out})
    result = run_boundary_suite(seed=args.seed, out_dir=args.out)
    _emit_report(result.report, args.json)
    if not args.json:
        print(f"classes linearly separable in estimated latents: {result.separable}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "baseline": _cmd_baseline,
    "align-embeddings": _cmd_align_embeddings,
    "boundary": _cmd_boundary,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
