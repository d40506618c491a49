"""Learning-curve CSV files and their cross-seed aggregate.

Per-seed files have one row per finished episode::

    transitions_seen,episode_index,episode_return,mean_return_window,dict_size,cost_xi,wallclock_ms_per_step

Floats are written with ``repr`` so identical runs give identical bytes;
quantities that were not measured are written as ``nan``.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = ["EPISODE_COLUMNS", "AGGREGATE_COLUMNS", "write_episodes", "read_episodes",
           "aggregate", "write_aggregate"]

EPISODE_COLUMNS = ("transitions_seen", "episode_index", "episode_return", "mean_return_window",
                   "dict_size", "cost_xi", "wallclock_ms_per_step")
AGGREGATE_COLUMNS = ("bucket_end", "n_seeds", "mean_return", "std_return",
                     "mean_dict_size", "std_dict_size")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_episodes(path, episodes: Iterable) -> Path:
    """Write episode records (objects with the :data:`EPISODE_COLUMNS` attributes)."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EPISODE_COLUMNS)
        for e in episodes:
            w.writerow([_fmt(getattr(e, c)) for c in EPISODE_COLUMNS])
    return path


def read_episodes(path) -> dict[str, np.ndarray]:
    """Column arrays of a per-seed file (empty arrays for a header-only file)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != EPISODE_COLUMNS:
        raise ValueError(f"{path}: unexpected header {rows[0] if rows else None}")
    body = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64).reshape(-1, len(EPISODE_COLUMNS))
    return {c: body[:, j] for j, c in enumerate(EPISODE_COLUMNS)}


def aggregate(per_seed: Sequence[dict], bucket: int) -> list[tuple]:
    """Mean and std across seeds of the per-bucket episode return and dict size.

    Each seed contributes the mean over its episodes that ended in the bucket
    ``(bucket_end - bucket, bucket_end]`` of transitions seen; seeds without
    such an episode are left out of that bucket.
    """
    if bucket < 1:
        raise ValueError("bucket must be at least 1")
    ends = set()
    per = []
    for cols in per_seed:
        b = np.ceil(cols["transitions_seen"] / bucket).astype(np.int64) * bucket
        per.append(b)
        ends.update(int(x) for x in b)
    out = []
    for end in sorted(ends):
        rets, sizes = [], []
        for cols, b in zip(per_seed, per):
            sel = b == end
            if sel.any():
                rets.append(float(np.mean(cols["episode_return"][sel])))
                sizes.append(float(np.mean(cols["dict_size"][sel])))
        out.append((end, len(rets), float(np.mean(rets)), float(np.std(rets)),
                    float(np.mean(sizes)), float(np.std(sizes))))
    return out


def write_aggregate(path, rows: Iterable[tuple]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_COLUMNS)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path
