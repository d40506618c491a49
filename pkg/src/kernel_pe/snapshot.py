"""Save and restore a trained evaluator as a single ``.npz`` file."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dictionary import Dictionary
from .evaluator import Hyper, PolicyEvaluator, make_evaluator
from .kernel import KernelSpec

__all__ = ["SNAPSHOT_VERSION", "SnapshotError", "save_snapshot", "load_snapshot", "load_dictionary"]

SNAPSHOT_VERSION = 1


class SnapshotError(ValueError):
    """The file is not a snapshot this version can read."""


def save_snapshot(path, ev: PolicyEvaluator) -> Path:
    """Write dictionary, weights and method state of ``ev`` to ``path``."""
    d = ev.dictionary
    meta = {
        "version": SNAPSHOT_VERSION,
        "method": ev.method,
        "h": ev.spec.h,
        "kind": ev.spec.kind,
        "tol1": d.tol1,
        "tol2": ev.tol2,
        "t": ev.t,
        "xi": ev.xi if ev.m else 0.0,
        "hyper": vars(ev.hyper),
    }
    arrays = {f"ev_{k}": v for k, v in ev.snapshot_arrays().items()} if ev.m else {}
    path = Path(path)
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta, sort_keys=True)),
                 states=d.states, actions=d.actions, steps=np.asarray(d.steps, dtype=np.int64),
                 kmm_inv=d.kmm_inv, **arrays)
    return path


def _read(path):
    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise SnapshotError(f"{path}: not a snapshot ({exc})") from None
    if "meta" not in data:
        raise SnapshotError(f"{path}: missing metadata")
    meta = json.loads(str(data["meta"]))
    if meta.get("version") != SNAPSHOT_VERSION:
        raise SnapshotError(f"{path}: unsupported snapshot version {meta.get('version')!r}")
    return meta, data


def load_dictionary(path) -> Dictionary:
    """Only the dictionary part of a snapshot."""
    meta, data = _read(path)
    d = Dictionary(KernelSpec(h=meta["h"], kind=meta["kind"]), meta["tol1"])
    d.states = data["states"]
    d.actions = data["actions"].astype(np.int64)
    d.steps = [int(s) for s in data["steps"]]
    d.kmm_inv = data["kmm_inv"]
    return d


def load_snapshot(path) -> PolicyEvaluator:
    """Rebuild the evaluator saved by :func:`save_snapshot`.

    The restored object predicts identically and can keep learning.
    """
    meta, data = _read(path)
    d = load_dictionary(path)
    ev = make_evaluator(meta["method"], d.spec, Hyper(**meta["hyper"]), tol1=meta["tol1"],
                        tol2=meta["tol2"], dictionary=d)
    if ev.m:
        ev.restore_arrays({k[3:]: data[k] for k in data.files if k.startswith("ev_")})
        ev.t = int(meta["t"])
        ev.xi = float(meta["xi"])
    return ev
