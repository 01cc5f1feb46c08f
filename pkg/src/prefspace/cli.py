"""Command-line entry point: ``prefspace {generate,estimate,score,bench}``.

Exit codes: 0 success, 2 usage, 3 I/O or malformed input, 4 internal error.
``PREFSPACE_SEED`` supplies the seed when ``--seed`` is not given.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import datagen
from .errors import FormatError
from .evaluation import (
    METHODS,
    SweepConfig,
    estimate_sigma,
    load_dataset,
    read_config,
    model_kinds_for,
    roc_auc,
    run_sweep,
    write_report,
    write_run_scores,
    write_scores_csv,
)
from .embedding import EmbeddingConfig, embed_dataset
from .forest import ForestConfig, build_forest, score_all
from .models import sample_pool

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INTERNAL = 0, 2, 3, 4

logger = logging.getLogger("prefspace")


class UsageError(Exception):
    pass


def default_seed() -> int:
    raw = os.environ.get("PREFSPACE_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"PREFSPACE_SEED must be an integer, got {raw!r}") from None


def _ratio(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"ratio must lie in (0, 1), got {value}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prefspace", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic dataset CSV")
    gen.add_argument("--kind", choices=["lines", "circles", "mixed"], default="lines")
    gen.add_argument("--structures", type=_positive_int, default=2)
    gen.add_argument("--per-structure", type=_positive_int, default=125)
    gen.add_argument("--sigma", type=float, default=0.05)
    gen.add_argument("--ratio", type=_ratio, default=0.5)
    gen.add_argument("--bbox", type=float, nargs=4, metavar=("X0", "Y0", "X1", "Y1"), default=(-5.0, -5.0, 5.0, 5.0))
    gen.add_argument("--seed", type=int)
    gen.add_argument("-o", "--output", required=True)

    est = sub.add_parser("estimate", help="estimate the noise sigma from labeled data")
    est.add_argument("data")
    est.add_argument("--structures", help="structures JSON (default: the CSV's sidecar)")

    score = sub.add_parser("score", help="score every point of a dataset CSV")
    score.add_argument("data")
    score.add_argument("-o", "--output", required=True)
    score.add_argument("--method", choices=sorted(METHODS), default="rhf")
    score.add_argument("--trees", type=_positive_int, default=100)
    score.add_argument("--psi", type=_positive_int, default=256)
    score.add_argument("--branching", type=_positive_int, default=4)
    score.add_argument("--pool-mult", type=_positive_float, default=10.0)
    score.add_argument("--k", type=_positive_float, default=3.0)
    score.add_argument("--sigma", type=_positive_float, help="noise sigma (default: estimated)")
    score.add_argument("--structures", help="structures JSON (default: the CSV's sidecar)")
    score.add_argument("--models", choices=["line", "circle", "mixed"], help="model family of the pool")
    score.add_argument("--seed", type=int)

    bench = sub.add_parser("bench", help="run a benchmark sweep from a JSON config")
    bench.add_argument("config")
    bench.add_argument("-o", "--output", required=True, help="JSON report path")
    bench.add_argument("--scores-dir", help="directory for per-run scores CSVs")
    bench.add_argument("--seed", type=int, help="override the config seed")
    return parser


def _with_structures(data_path: str, structures_path):
    data = load_dataset(data_path)
    if structures_path is not None:
        data = datagen.Dataset(data.points, data.labels, datagen.load_structures(structures_path))
    return data


def cmd_generate(args) -> int:
    if args.sigma < 0:
        raise UsageError(f"sigma must be >= 0, got {args.sigma}")
    seed = args.seed if args.seed is not None else default_seed()
    try:
        spec = datagen.SyntheticSpec(
            kind=args.kind,
            structures=args.structures,
            points_per_structure=args.per_structure,
            sigma=args.sigma,
            anomaly_ratio=args.ratio,
            bbox=tuple(args.bbox),
            seed=seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    data = datagen.generate(spec)
    datagen.save_csv(data, args.output)
    datagen.save_structures(data.structures, datagen.structures_path(args.output))
    print(f"n={data.n} anomalies={int(data.is_anomaly.sum())} seed={seed} -> {args.output}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    data = _with_structures(args.data, args.structures)
    if not data.structures:
        raise UsageError("no structures: pass --structures or keep the .structures.json sidecar")
    print(f"{estimate_sigma(data):.17g}")
    return EXIT_OK


def cmd_score(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    data = _with_structures(args.data, args.structures)
    if args.sigma is not None:
        sigma = args.sigma
    elif data.structures:
        sigma = estimate_sigma(data)
    else:
        raise UsageError("cannot estimate sigma: pass --sigma or --structures")
    if not sigma > 0:
        raise UsageError("estimated sigma is zero; pass --sigma")
    if args.models is not None:
        kinds = ("line", "circle") if args.models == "mixed" else (args.models,)
    else:
        kinds = model_kinds_for(data.structures)
    method = METHODS[args.method]
    if args.branching < 2 or args.branching > args.psi:
        raise UsageError(f"--branching must lie in [2, psi={args.psi}]")
    m = max(1, int(round(args.pool_mult * data.n)))
    pool = sample_pool(data.points, m, np.random.default_rng(seed), kinds)
    P = embed_dataset(data, pool, EmbeddingConfig(sigma, args.k, method.mode))
    try:
        fcfg = ForestConfig(
            t=args.trees, psi=args.psi, b=args.branching, method=method.split, distance=method.distance, seed=seed
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    scores = score_all(P, build_forest(P, fcfg))
    write_scores_csv(args.output, scores, data.labels)
    if 0 < data.is_anomaly.sum() < data.n:
        print(f"method={method.name} b={args.branching} m={m} auc={roc_auc(scores, data.labels):.4f}")
    else:
        print(f"method={method.name} b={args.branching} m={m}")
    return EXIT_OK


def cmd_bench(args) -> int:
    raw = read_config(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    elif "seed" not in raw:
        raw["seed"] = default_seed()
    try:
        cfg = SweepConfig.from_dict(raw)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"{args.config}: {exc}") from None
    data = load_dataset(cfg.dataset)

    def progress(rec):
        print(
            f"{rec.method} b={rec.b} run={rec.run} auc={rec.auc:.4f} "
            f"train={rec.train_time:.3f}s test={rec.test_time:.3f}s",
            file=sys.stderr,
        )

    reports = run_sweep(cfg, data, progress=progress)
    write_report(args.output, cfg, reports)
    if args.scores_dir:
        write_run_scores(args.scores_dir, reports, data.labels)
    for rep in reports:
        print(f"{rep.method:6s} b={rep.b:<4d} auc={rep.auc:.4f} test_time={rep.test_time:.3f}s")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "estimate": cmd_estimate, "score": cmd_score, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"prefspace: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FormatError) as exc:
        print(f"prefspace: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001
        logger.exception("internal error")
        print(f"prefspace: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
