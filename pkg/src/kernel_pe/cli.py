"""Command-line entry point ``kernel-pe``.

::

    kernel-pe run experiment.cfg [--output DIR] [--workers N]
    kernel-pe verify [--only 1,3,8] [--tolerance X]
    kernel-pe export-dict runs/seed_0.npz [-o centers.csv]

The number of worker processes is capped by ``$KERNEL_PE_WORKERS``.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .experiment import WORKERS_ENV, run_experiment
from .snapshot import SnapshotError, load_dictionary

__all__ = ["main", "build_parser"]


def _criteria(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.replace(" ", "").split(",") if tok]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated criterion numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kernel-pe", description=__doc__.split("\n\n")[0],
                                epilog=f"Set {WORKERS_ENV} to cap the number of worker processes.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run every seed of a configuration and write CSVs")
    r.add_argument("config", help="key = value configuration file")
    r.add_argument("--output", help="output directory (overrides the config's output key)")
    r.add_argument("--workers", type=int, help="parallel seeds (default: one per CPU)")

    v = sub.add_parser("verify", help="run the oracle cross-checks and print a pass/fail table")
    v.add_argument("--only", type=_criteria, help="comma-separated criteria to run")
    v.add_argument("--tolerance", type=float,
                   help="replace every numerical tolerance (0 forces failure)")
    v.add_argument("--workers", type=int)

    e = sub.add_parser("export-dict", help="write the dictionary of a snapshot as CSV")
    e.add_argument("snapshot", help=".npz file written by `run`")
    e.add_argument("-o", "--output", help="CSV path (default: stdout)")
    return p


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except FileNotFoundError:
        print(f"error: no such config file: {args.config}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return 2
    out = args.output or cfg.output
    results = run_experiment(cfg, out, workers=args.workers)
    for r in results:
        print(f"seed {r['seed']}: {r['episodes']} episodes, dictionary {r['dict_size']}, "
              f"skipped {r['skipped']} -> {r['csv']}")
    print(f"aggregate -> {out}/aggregate.csv")
    return 0


def _cmd_verify(args) -> int:
    from .verify import format_table, run_checks

    try:
        results = run_checks(args.only, tolerance=args.tolerance, workers=args.workers,
                             progress=lambda r: print(r.line(), flush=True))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print()
    print(format_table(results))
    return 0 if all(r.passed for r in results) else 1


def _cmd_export(args) -> int:
    try:
        d = load_dictionary(args.snapshot)
    except FileNotFoundError:
        print(f"error: no such snapshot: {args.snapshot}", file=sys.stderr)
        return 2
    except SnapshotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    d.to_csv(args.output or sys.stdout)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": _cmd_run, "verify": _cmd_verify, "export-dict": _cmd_export}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
