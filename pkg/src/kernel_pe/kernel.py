"""Kernels over state-action tuples.

The only kernel kind is the product of a Gaussian RBF on the continuous
state and a Kronecker delta on the discrete action::

    k((s, a), (s', a')) = exp(-h * ||s - s'||^2) * [a == a']
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "StateAction",
    "KernelSpec",
    "DimensionMismatchError",
    "EmptyDictionaryError",
    "eval_kernel",
    "eval_kernel_vector",
    "kernel_row",
    "gram_matrix",
]

KERNEL_KINDS = ("gaussian-rbf-product",)


class DimensionMismatchError(ValueError):
    """Two states of different dimension were passed to a kernel."""


class EmptyDictionaryError(ValueError):
    """A kernel vector was requested against an empty set of centers."""


class StateAction(NamedTuple):
    """A continuous state vector paired with a discrete action id."""

    state: np.ndarray
    action: int

    @classmethod
    def make(cls, state, action) -> "StateAction":
        s = np.atleast_1d(np.asarray(state, dtype=np.float64))
        return cls(s, int(action))


@dataclass(frozen=True)
class KernelSpec:
    """Product kernel parameters.

    Parameters
    ----------
    h : float
        Inverse squared lengthscale of the state RBF, ``exp(-h ||s-s'||^2)``.
    kind : str
        Kernel kind; only ``"gaussian-rbf-product"`` is supported.
    """

    h: float = 5.0
    kind: str = "gaussian-rbf-product"

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")


def eval_kernel(spec: KernelSpec, x: StateAction, y: StateAction) -> float:
    """Evaluate the product kernel on a single pair."""
    if x.action != y.action:
        if x.state.shape != y.state.shape:
            raise DimensionMismatchError(f"{x.state.shape} vs {y.state.shape}")
        return 0.0
    if x.state.shape != y.state.shape:
        raise DimensionMismatchError(f"{x.state.shape} vs {y.state.shape}")
    d = x.state - y.state
    return float(np.exp(-spec.h * np.dot(d, d)))


def kernel_row(h: float, states: np.ndarray, actions: np.ndarray,
               s: np.ndarray, a: int) -> np.ndarray:
    """Kernel vector between stacked centers ``(states, actions)`` and ``(s, a)``.

    ``states`` is ``(m, d)``, ``actions`` is ``(m,)``. Entries whose action
    differs from ``a`` are exactly zero.
    """
    if states.shape[1] != s.shape[0]:
        raise DimensionMismatchError(f"centers have dim {states.shape[1]}, query has {s.shape[0]}")
    diff = states - s
    diff *= diff
    return np.exp(-h * diff.sum(axis=1)) * (actions == a)


def eval_kernel_vector(spec: KernelSpec, centers: Sequence[StateAction],
                       x: StateAction) -> np.ndarray:
    """Return ``k_m(x)``, the kernel between each center and ``x``."""
    if len(centers) == 0:
        raise EmptyDictionaryError("kernel vector against an empty center set")
    states = np.stack([c.state for c in centers])
    actions = np.fromiter((c.action for c in centers), dtype=np.int64, count=len(centers))
    return kernel_row(spec.h, states, actions, x.state, x.action)


def gram_matrix(spec: KernelSpec, points: Sequence[StateAction],
                others: Sequence[StateAction] | None = None) -> np.ndarray:
    """Dense kernel matrix ``[k(p_i, q_j)]``; ``others`` defaults to ``points``."""
    others = points if others is None else others
    P = np.stack([p.state for p in points])
    Q = np.stack([q.state for q in others])
    if P.shape[1] != Q.shape[1]:
        raise DimensionMismatchError(f"{P.shape[1]} vs {Q.shape[1]}")
    pa = np.array([p.action for p in points])
    qa = np.array([q.action for q in others])
    sq = ((P[:, None, :] - Q[None, :, :]) ** 2).sum(-1)
    return np.exp(-spec.h * sq) * (pa[:, None] == qa[None, :])
