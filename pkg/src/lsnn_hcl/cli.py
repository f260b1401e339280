"""Command-line entry point.

    lsnn-hcl run   [CONFIG] [--preset NAME] [--seed N] [--out DIR]
    lsnn-hcl study [CONFIG] [--case NAME] [--rule RULE] [--out DIR]
    lsnn-hcl report RUN_DIR

Exit codes: 0 success, 2 config error, 3 training divergence, 4 oracle
failure.  Set LSNN_HCL_WORKERS to cap the BLAS thread pool.
"""

from __future__ import annotations

import argparse
import os
import sys

import yaml

from .experiments import (
    ConfigError,
    OracleFailure,
    STUDY_CASES,
    load_config,
    preset_names,
    report_run,
    run_divergence_study,
    run_experiment,
)
from .trainer import TrainingDivergence

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRAINING = 3
EXIT_ORACLE = 4


def _limit_workers() -> None:
    workers = os.environ.get("LSNN_HCL_WORKERS")
    if not workers:
        return
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(int(workers))
    except Exception:
        pass  # best effort; determinism does not depend on the thread count


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lsnn-hcl", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train an experiment and emit reports")
    run.add_argument("config", nargs="?", help="YAML config file (overlays the preset if both given)")
    run.add_argument("--preset", help=f"builtin preset; one of {preset_names()}")
    run.add_argument("--seed", type=int, help="override the experiment seed")
    run.add_argument("--out", help="override the output directory")

    study = sub.add_parser("study", help="divergence-operator convergence study")
    study.add_argument("config", nargs="?", help="YAML study config")
    study.add_argument("--case", choices=STUDY_CASES, help="manufactured solution")
    study.add_argument("--rule", default=None, choices=["midpoint", "trapezoidal"])
    study.add_argument("--out", help="output directory")

    report = sub.add_parser("report", help="re-derive error tables from a run's checkpoints")
    report.add_argument("run_dir")
    return parser


def main(argv=None) -> int:
    _limit_workers()
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            if args.config is None and args.preset is None:
                print("error: pass a config file, --preset, or both", file=sys.stderr)
                return EXIT_CONFIG
            config = load_config(args.config, preset=args.preset)
            if args.seed is not None:
                config.seed = args.seed
            summary = run_experiment(config, out_dir=args.out)
            print(f"wrote {len(summary['files'])} files to {summary['output_dir']}")
            return EXIT_OK
        if args.command == "study":
            spec = {}
            if args.config:
                with open(args.config) as fh:
                    spec = yaml.safe_load(fh) or {}
            case = args.case or spec.get("case")
            if case is None:
                print("error: pass --case or a config with a 'case' field", file=sys.stderr)
                return EXIT_CONFIG
            rule = args.rule or spec.get("rule", "midpoint")
            out = run_divergence_study(
                case,
                ladder=spec.get("ladder"),
                rule=rule,
                cell=_cell_from_spec(spec),
                out_dir=args.out or spec.get("output_dir", f"runs/study_{case}"),
            )
            print(f"{case} ({rule}): fitted order {out['fitted_order']:.3f}")
            for (m, n), err in zip(out["rules"], out["errors"]):
                print(f"  m_hat={m:3d} n_hat={n:3d} error={err:.6e}")
            return EXIT_OK
        if args.command == "report":
            report_run(args.run_dir)
            return EXIT_OK
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDivergence as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except OracleFailure as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return EXIT_ORACLE


def _cell_from_spec(spec: dict):
    cell = spec.get("cell")
    if cell is None:
        return ((0.0, 1.0), (0.0, 1.0))
    return (tuple(float(v) for v in cell["x"]), tuple(float(v) for v in cell["t"]))


if __name__ == "__main__":
    sys.exit(main())
