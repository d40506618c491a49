"""Seeded multi-run execution and artifact writing."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ExperimentConfig
from .control import run
from .results import aggregate, read_episodes, write_aggregate, write_episodes
from .snapshot import save_snapshot

__all__ = ["WORKERS_ENV", "worker_cap", "map_seeds", "run_seed", "run_experiment"]

WORKERS_ENV = "KERNEL_PE_WORKERS"


def worker_cap(requested: int | None = None) -> int:
    """Number of worker processes: ``requested``, capped by ``$KERNEL_PE_WORKERS``.

    Without either, one worker per CPU.
    """
    n = requested or os.cpu_count() or 1
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
        if cap < 1:
            raise ValueError(f"{WORKERS_ENV} must be at least 1")
        n = min(n, cap)
    return max(1, n)


def map_seeds(fn, args: list, workers: int | None = None) -> list:
    """``[fn(*a) for a in args]``, in worker processes when more than one is allowed."""
    n = min(worker_cap(workers), len(args))
    if n <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=n) as pool:
        futures = [pool.submit(fn, *a) for a in args]
        return [f.result() for f in futures]


def run_seed(cfg: ExperimentConfig, seed: int, outdir) -> dict:
    """One seeded run: per-seed CSV plus a snapshot of the final evaluator."""
    outdir = Path(outdir)
    log = run(cfg, seed)
    csv_path = write_episodes(outdir / f"seed_{seed}.csv", log.episodes)
    snap = None
    if log.evaluator is not None:
        snap = save_snapshot(outdir / f"seed_{seed}.npz", log.evaluator)
    return {"seed": seed, "csv": str(csv_path), "snapshot": str(snap) if snap else None,
            "episodes": len(log.episodes), "dict_size": log.evaluator.m if log.evaluator else 0,
            "skipped": log.skipped}


def run_experiment(cfg: ExperimentConfig, outdir=None, workers: int | None = None) -> list[dict]:
    """Run every seed of ``cfg`` and write ``aggregate.csv`` next to the per-seed files."""
    outdir = Path(outdir if outdir is not None else cfg.output)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "config.txt").write_text(cfg.to_text())
    results = map_seeds(run_seed, [(cfg, s, outdir) for s in cfg.seeds], workers)
    rows = aggregate([read_episodes(r["csv"]) for r in results], cfg.bucket)
    write_aggregate(outdir / "aggregate.csv", rows)
    return results
