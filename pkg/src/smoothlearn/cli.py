"""Command-line entry points for experiments and replication suites.

Exit codes: 0 on success, 1 on configuration/validation errors, 2 when a
replication suite ran but failed its pinned threshold.
"""

from __future__ import annotations

import argparse
import sys


from .brackets import bracket_thresholds, verify_bracketing
from .covers import build_cover
from .domains import Domain
from .harness import (
    ConfigError,
    ExperimentConfig,
    SUITE_NAMES,
    replicate_suite,
    rng_for,
    run_experiment,
)
from .hypotheses import ThresholdClass

_ADVERSARY_ALIASES = {
    "uncertainty": "uncertainty_region",
    "binary-search": "worst_case_binary_search",
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--N", type=int, default=1024, help="domain grid size")
    p.add_argument("--seeds", type=int, default=1, help="number of independent seeds")
    p.add_argument("--base-seed", type=int, default=0, help="base seed for stream splitting")
    p.add_argument("--out", type=str, default="", help="CSV output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smoothlearn",
        description="Smoothed-adversary online learning and private query answering experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("online-run", help="Hedge-over-cover game against an adversary")
    p.add_argument("--class", dest="class_spec", default="threshold1d")
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--T", type=int, default=1000)
    p.add_argument("--adversary", default="uncertainty_region")
    _add_common(p)

    for name in ("dp-answer", "dp-release"):
        p = sub.add_parser(
            name,
            help=(
                "private query answering on a smooth dataset"
                if name == "dp-answer"
                else "private data release (projected variant, emits the synthetic distribution)"
            ),
        )
        p.add_argument("--queries", default="thresholds:64")
        p.add_argument("--sigma", type=float, default=0.1)
        p.add_argument("--T", type=int, default=10)
        p.add_argument("--eps", type=float, default=1.0)
        p.add_argument("--n", type=int, default=500)
        p.add_argument(
            "--transcript-out",
            dest="transcript_out",
            default="",
            help="write per-round mechanism records (one JSON line per round)",
        )
        _add_common(p)

    p = sub.add_parser("smalldb", help="subsampled small-dataset release")
    p.add_argument("--M", type=int, default=8, help="subsample size")
    p.add_argument("--k", type=int, default=6, help="released dataset size")
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--queries", default="thresholds:8")
    _add_common(p)

    p = sub.add_parser("cover-build", help="build a cover and write its member tokens")
    p.add_argument("--class", dest="class_spec", default="threshold1d")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--m", type=int, default=None, help="sample size override")
    _add_common(p)

    p = sub.add_parser("bracket-verify", help="build and audit a threshold bracketing")
    p.add_argument("--epsilon", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("replicate", help="run a pinned replication suite")
    p.add_argument("suite", choices=SUITE_NAMES)

    p = sub.add_parser("run", help="run an experiment described by a config file")
    p.add_argument("--config", required=True, help="path to a smoothlearn config file")

    return parser


def _experiment_config(args: argparse.Namespace, kind: str) -> ExperimentConfig:
    cfg = ExperimentConfig(kind=kind)
    cfg.n_atoms = args.N
    cfg.seeds = args.seeds
    cfg.base_seed = args.base_seed
    cfg.out = args.out
    if kind == "online":
        cfg.class_spec = args.class_spec
        cfg.sigma = args.sigma
        cfg.horizon = args.T
        cfg.adversary = _ADVERSARY_ALIASES.get(args.adversary, args.adversary)
    elif kind in ("dp-answer", "dp-release"):
        cfg.queries = args.queries
        cfg.sigma = args.sigma
        cfg.horizon = args.T
        cfg.eps = args.eps
        cfg.n_records = args.n
        cfg.transcript_out = args.transcript_out
    elif kind == "smalldb":
        cfg.subsample_size = args.M
        cfg.release_size = args.k
        cfg.eps = args.eps
        cfg.n_records = args.n
        cfg.queries = args.queries
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "online-run":
            run_experiment(_experiment_config(args, "online"))
            return 0
        if args.command in ("dp-answer", "dp-release", "smalldb"):
            run_experiment(_experiment_config(args, args.command))
            return 0
        if args.command == "cover-build":
            if args.class_spec != "threshold1d":
                raise ConfigError("class", "cover-build supports the threshold1d class")
            domain = Domain.unit_interval_grid(args.N)
            cover = build_cover(
                ThresholdClass(domain),
                args.gamma,
                m=args.m,
                rng=rng_for(args.base_seed, 0),
            )
            lines = [m.token() for m in cover.members]
            text = "\n".join(lines) + "\n"
            if args.out:
                with open(args.out, "w", encoding="ascii") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            print(f"cover size {len(cover)} at gamma {args.gamma}", file=sys.stderr)
            return 0
        if args.command == "bracket-verify":
            domain = Domain.unit_interval_grid(args.N)
            bracketing = bracket_thresholds(args.epsilon, domain.uniform())
            report = verify_bracketing(
                bracketing, ThresholdClass(domain).enumerate_hypotheses()
            )
            print(
                f"brackets={len(bracketing)} worst_gap={report.worst_gap:.17g} "
                f"passed={report.passed}"
            )
            return 0 if report.passed else 2
        if args.command == "replicate":
            report = replicate_suite(args.suite)
            print(report.to_json())
            return 0 if report.passed else 2
        if args.command == "run":
            with open(args.config, "r", encoding="ascii") as fh:
                cfg = ExperimentConfig.from_text(fh.read())
            run_experiment(cfg)
            return 0
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable command dispatch")


if __name__ == "__main__":
    sys.exit(main())
