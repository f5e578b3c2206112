"""Command-line front end: `rcgprune reduce|eval|compare`.

Every run writes a manifest (command line, seed, config snapshot, dataset
content hash, tool version) next to its results, and all randomness flows
from the single --seed through named substreams, so identical invocations
produce byte-identical structured output.  Wall-clock timings are printed
to standard error only; they never enter the persisted files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .data_model import (
    DataError,
    DegenerateClassDistribution,
    HoldoutScheme,
    InstanceMask,
    KFoldScheme,
    NoiseSpec,
    load_csv,
    save_csv,
    substream_seed,
)
from .evaluation import ComparisonTable, compare_table, format_comparison, run_experiment
from .knn_graph import build_graph
from .metric import DistanceSpec, pairwise_matrix
from .reduction import ALGORITHMS, AlgorithmConfig, ReductionTrace, run_reduction
from .uncertainty import SignificanceSpec

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DEGENERATE = 3

RESULTS_SCHEMA = "rcgprune-results/1"
MANIFEST_SCHEMA = "rcgprune-manifest/1"

REDUCE_ALGOS = ("fsrcg", "psrcg", "fsps", "cnn", "rnn")
OUT_ENV_VAR = "RCGPRUNE_OUT"


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a run byte for byte."""

    argv: tuple[str, ...]
    seed: int
    config: dict
    dataset_sha256: str
    version: str

    def as_dict(self) -> dict:
        return {
            "schema": MANIFEST_SCHEMA,
            "argv": list(self.argv),
            "seed": self.seed,
            "config": self.config,
            "dataset_sha256": self.dataset_sha256,
            "version": self.version,
        }


class _Parser(argparse.ArgumentParser):
    """argparse, but usage errors exit with code 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_common(p: argparse.ArgumentParser, with_stratify: bool) -> None:
    p.add_argument("--data", required=True, help="input CSV file (header row required)")
    p.add_argument("--class-col", required=True, help="name of the class column")
    p.add_argument("--k", type=int, default=None, help="neighborhood size (default 5; 1 for fsrcg/cnn/rnn)")
    sig = p.add_mutually_exclusive_group()
    sig.add_argument("--alpha", type=float, default=None, help="chi-square significance level (default 0.05)")
    sig.add_argument("--epsilon", type=float, default=None, help="use the epsilon-margin test instead")
    p.add_argument("--seed", type=int, default=0, help="master seed for all randomness (default 0)")
    p.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV_VAR} or ./rcgprune_out)")
    p.add_argument("--no-normalize", action="store_true", help="skip range normalization of numeric features")
    p.add_argument("--no-rollback", action="store_true", help="keep the deletion that triggers the halt")
    p.add_argument("--final-centers-pass", action="store_true",
                   help="append the (k+1) center sweep after the joint algorithm")
    p.add_argument("--literal-min", action="store_true",
                   help="joint stage A picks the gain-minimizing feature drop (published pseudocode)")
    if with_stratify:
        p.add_argument("--no-stratify", action="store_true", help="draw splits without class stratification")


def _add_split_flags(p: argparse.ArgumentParser) -> None:
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--cv", type=int, default=None, help="k-fold cross-validation (default 5)")
    grp.add_argument("--holdout", type=float, default=None, help="single split with this test fraction")
    p.add_argument("--noise", type=float, default=0.0,
                   help="flip this fraction of training-fold labels (default 0)")


def build_parser() -> _Parser:
    parser = _Parser(prog="rcgprune", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rcgprune {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    reduce_p = sub.add_parser("reduce", help="reduce one dataset and write the surviving rows/columns")
    reduce_p.add_argument("--algo", required=True, choices=REDUCE_ALGOS)
    _add_common(reduce_p, with_stratify=False)
    reduce_p.add_argument("--dump-graph", action="store_true",
                          help="also write the initial neighborhood graph as an edge list")
    reduce_p.set_defaults(func=cmd_reduce)

    eval_p = sub.add_parser("eval", help="cross-validated accuracy/storage of one algorithm")
    eval_p.add_argument("--algo", required=True, choices=ALGORITHMS)
    _add_common(eval_p, with_stratify=True)
    _add_split_flags(eval_p)
    eval_p.set_defaults(func=cmd_eval)

    cmp_p = sub.add_parser("compare", help="run several algorithms over identical splits")
    cmp_p.add_argument("--algos", required=True, help="comma-separated algorithm names")
    _add_common(cmp_p, with_stratify=True)
    _add_split_flags(cmp_p)
    cmp_p.set_defaults(func=cmd_compare)
    return parser


def _default_k(algo: str) -> int:
    return 1 if algo in ("fsrcg", "cnn", "rnn") else 5


def _significance(args) -> SignificanceSpec:
    if args.epsilon is not None:
        return SignificanceSpec.epsilon_margin(args.epsilon)
    return SignificanceSpec.chi_square_mode(args.alpha if args.alpha is not None else 0.05)


def _config(args, algo: str) -> AlgorithmConfig:
    return AlgorithmConfig(
        k=args.k if args.k is not None else _default_k(algo),
        significance=_significance(args),
        rollback_last_deletion=not args.no_rollback,
        stage_a_literal_min=args.literal_min,
        final_centers_pass=args.final_centers_pass,
    )


def _config_snapshot(args, algos: list[str]) -> dict:
    sig = _significance(args)
    snap = {
        "algorithms": {
            a: {"k": args.k if args.k is not None else _default_k(a)} for a in algos
        },
        "significance": {"mode": sig.mode, "alpha": sig.alpha, "epsilon": sig.epsilon},
        "rollback_last_deletion": not args.no_rollback,
        "literal_min": args.literal_min,
        "final_centers_pass": args.final_centers_pass,
        "normalize": not args.no_normalize,
        "seed": args.seed,
    }
    if hasattr(args, "no_stratify"):
        snap["stratified"] = not args.no_stratify
    if hasattr(args, "cv"):
        if args.holdout is not None:
            snap["split"] = {"scheme": "holdout", "test_fraction": args.holdout}
        else:
            snap["split"] = {"scheme": "kfold", "folds": args.cv if args.cv is not None else 5}
        snap["noise_fraction"] = args.noise
    return snap


def _out_dir(args) -> Path:
    out = args.out or os.environ.get(OUT_ENV_VAR) or "rcgprune_out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True))
        fh.write("\n")


def _dataset_section(args, ds) -> dict:
    return {
        "path": str(args.data),
        "sha256": _sha256_file(args.data),
        "rows": ds.n,
        "features": ds.p,
        "classes": ds.c,
    }


def _manifest(args, algos: list[str]) -> RunManifest:
    return RunManifest(
        argv=tuple(args._argv),
        seed=args.seed,
        config=_config_snapshot(args, algos),
        dataset_sha256=_sha256_file(args.data),
        version=__version__,
    )


def _render_trace(trace: ReductionTrace, feature_names) -> str:
    lines = [
        f"algorithm: {trace.algorithm}",
        f"graph builds: {trace.graph_builds}",
        f"halt: {trace.halt_reason}",
    ]
    for i, s in enumerate(trace.steps, start=1):
        if s.action in ("add_feature", "remove_feature"):
            what = "cols=" + ",".join(f"{t}({feature_names[t]})" for t in s.target)
        else:
            what = "rows=" + ",".join(str(t) for t in s.target)
        lines.append(
            f"step {i}: {s.action} {what} rcg {s.rcg_before!r} -> {s.rcg_after!r}"
            f" alive={s.alive_count} selected={s.selected_count}"
        )
    return "\n".join(lines) + "\n"


def _fold_dicts(res) -> list[dict]:
    return [
        {
            "fold": f.fold,
            "n_train": f.n_train,
            "n_test": f.n_test,
            "accuracy": f.accuracy,
            "retained_instances_pct": f.retained_instances_pct,
            "retained_features_pct": f.retained_features_pct,
            "size_times_dim_pct": f.size_times_dim_pct,
            "graph_builds": f.graph_builds,
            "halt_reason": f.halt_reason,
        }
        for f in res.per_fold
    ]


def _result_dicts(results: dict) -> dict:
    return {
        name: {
            "summary": {
                "accuracy": r.accuracy,
                "retained_instances_pct": r.retained_instances_pct,
                "retained_features_pct": r.retained_features_pct,
                "size_times_dim_pct": r.size_times_dim_pct,
                "graph_builds": r.graph_builds,
            },
            "folds": _fold_dicts(r),
        }
        for name, r in results.items()
    }


def _comparison_dict(table: ComparisonTable) -> dict:
    return {
        "rows": [
            {
                "algorithm": r.algorithm,
                "retained_instances_pct": r.retained_instances_pct,
                "retained_features_pct": r.retained_features_pct,
                "size_times_dim_pct": r.size_times_dim_pct,
                "accuracy": r.accuracy,
            }
            for r in table.rows
        ],
        "t_tests": [
            {
                "a": t.algo_a,
                "b": t.algo_b,
                "t": t.t,
                "p_two_sided": t.p_two_sided,
                "p_one_sided": t.p_one_sided,
            }
            for t in table.t_tests
        ],
    }


def _scheme(args):
    if args.holdout is not None:
        return HoldoutScheme(
            args.holdout,
            seed=substream_seed(args.seed, "split"),
            stratified=not args.no_stratify,
        )
    folds = args.cv if args.cv is not None else 5
    return KFoldScheme(
        folds, seed=substream_seed(args.seed, "split"), stratified=not args.no_stratify
    )


def cmd_reduce(args) -> int:
    ds = load_csv(args.data, args.class_col)
    cfg = _config(args, args.algo)
    train = InstanceMask.full(ds.n)
    dspec = DistanceSpec.for_training(ds, train, normalize=not args.no_normalize)
    fmask, imask, trace = run_reduction(args.algo, ds, train, cfg, dspec)

    out = _out_dir(args)
    save_csv(ds, out / "reduced.csv", imask, fmask)
    names = [m.name for m in ds.feature_meta]
    with open(out / "trace.txt", "w", encoding="utf-8") as fh:
        fh.write(_render_trace(trace, names))
    if args.dump_graph:
        matrix = pairwise_matrix(ds, train, fmask, dspec)
        g = build_graph(matrix, ds.labels, cfg.k, ds.c)
        with open(out / "graph.txt", "w", encoding="utf-8") as fh:
            g.write_edge_list(fh)

    payload = {
        "schema": RESULTS_SCHEMA,
        "command": "reduce",
        "config": _config_snapshot(args, [args.algo]),
        "dataset": _dataset_section(args, ds),
        "reduction": {
            "algorithm": args.algo,
            "retained_instances": imask.alive_count,
            "retained_features": fmask.selected_count,
            "retained_instances_pct": 100.0 * imask.alive_count / ds.n,
            "retained_features_pct": 100.0 * fmask.selected_count / ds.p,
            "selected_feature_names": [names[j] for j in fmask.indices()],
            "halt_reason": trace.halt_reason,
            "graph_builds": trace.graph_builds,
            "steps": len(trace.steps),
        },
    }
    _write_json(out / "results.json", payload)
    _write_json(out / "manifest.json", _manifest(args, [args.algo]).as_dict())
    print(
        f"{args.algo}: kept {imask.alive_count}/{ds.n} instances,"
        f" {fmask.selected_count}/{ds.p} features -> {out}"
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    ds = load_csv(args.data, args.class_col)
    noise = NoiseSpec(args.noise, substream_seed(args.seed, "noise")) if args.noise else None
    res = run_experiment(
        ds, args.algo, _scheme(args), _config(args, args.algo), noise,
        normalize=not args.no_normalize,
    )
    table = compare_table({args.algo: res})
    print(format_comparison(table))
    print(f"runtime: {res.runtime_ms:.0f} ms", file=sys.stderr)

    out = _out_dir(args)
    payload = {
        "schema": RESULTS_SCHEMA,
        "command": "eval",
        "config": _config_snapshot(args, [args.algo]),
        "dataset": _dataset_section(args, ds),
        "results": _result_dicts({args.algo: res}),
    }
    _write_json(out / "results.json", payload)
    _write_json(out / "manifest.json", _manifest(args, [args.algo]).as_dict())
    return EXIT_OK


def cmd_compare(args) -> int:
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    if not algos:
        raise DataError("no algorithms given")
    for a in algos:
        if a not in ALGORITHMS:
            build_parser().error(f"unknown algorithm {a!r}; choose from {', '.join(ALGORITHMS)}")
    ds = load_csv(args.data, args.class_col)
    scheme = _scheme(args)
    noise = NoiseSpec(args.noise, substream_seed(args.seed, "noise")) if args.noise else None
    results = {}
    for a in algos:
        results[a] = run_experiment(
            ds, a, scheme, _config(args, a), noise, normalize=not args.no_normalize
        )
    table = compare_table(results)
    print(format_comparison(table))
    total_ms = sum(r.runtime_ms for r in results.values())
    print(f"runtime: {total_ms:.0f} ms", file=sys.stderr)

    out = _out_dir(args)
    payload = {
        "schema": RESULTS_SCHEMA,
        "command": "compare",
        "config": _config_snapshot(args, algos),
        "dataset": _dataset_section(args, ds),
        "results": _result_dicts(results),
        "comparison": _comparison_dict(table),
    }
    _write_json(out / "results.json", payload)
    _write_json(out / "manifest.json", _manifest(args, algos).as_dict())
    return EXIT_OK


def main(argv=None) -> int:
    raw_argv = list(argv) if argv is not None else sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(raw_argv)
    except SystemExit as e:
        return int(e.code or 0)
    args._argv = raw_argv
    try:
        return args.func(args)
    except DegenerateClassDistribution as e:
        print(f"rcgprune: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    except DataError as e:
        print(f"rcgprune: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        print(f"rcgprune: {e}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit as e:
        return int(e.code or 0)


if __name__ == "__main__":
    sys.exit(main())
