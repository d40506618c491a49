"""Growing dictionary of basis centers with an ALD novelty test."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .kernel import EmptyDictionaryError, KernelSpec, StateAction, gram_matrix, kernel_row
from .linalg import DEFAULT_FLOOR, NumericalDriftError, SingularGrowthError, border_inverse, inverse_drift

__all__ = ["Projection", "Dictionary", "is_novel"]


@dataclass
class Projection:
    """Projection of a candidate onto the span of the dictionary.

    ``a = K_mm^-1 k_m(x)`` and ``delta = k(x, x) - k_m(x)^T a``, clamped at 0.
    ``k`` keeps ``k_m(x)`` so the caller does not recompute it.
    """

    a: np.ndarray
    delta: float
    k: np.ndarray


def is_novel(proj: Projection, tol1: float) -> bool:
    """Strict novelty test ``delta > tol1``."""
    return proj.delta > tol1


class Dictionary:
    """Ordered set of basis centers and the inverse of their Gram matrix.

    Parameters
    ----------
    spec : KernelSpec
        Kernel the centers live in.
    tol1 : float
        Novelty threshold on the ALD residual.
    floor : float
        Smallest residual accepted by :meth:`grow`.
    """

    def __init__(self, spec: KernelSpec, tol1: float = 0.1, floor: float = DEFAULT_FLOOR):
        self.spec = spec
        self.tol1 = float(tol1)
        self.floor = float(floor)
        self.states = np.empty((0, 0))
        self.actions = np.empty(0, dtype=np.int64)
        self.steps: list[int] = []
        self.kmm_inv = np.empty((0, 0))

    def __len__(self) -> int:
        return self.actions.shape[0]

    @property
    def m(self) -> int:
        return len(self)

    @property
    def centers(self) -> list[StateAction]:
        return [StateAction(self.states[i].copy(), int(self.actions[i])) for i in range(self.m)]

    def kernel_vector(self, x: StateAction) -> np.ndarray:
        """``k_m(x)`` against the current centers."""
        if self.m == 0:
            raise EmptyDictionaryError("dictionary has no centers")
        return kernel_row(self.spec.h, self.states, self.actions, x.state, x.action)

    def project(self, x: StateAction, k: np.ndarray | None = None) -> Projection:
        """ALD projection of ``x``; pass ``k`` if ``k_m(x)`` is already known."""
        if self.m == 0:
            raise EmptyDictionaryError("dictionary has no centers")
        if k is None:
            k = self.kernel_vector(x)
        a = self.kmm_inv @ k
        # k(x, x) = 1 for the product kernel
        delta = max(1.0 - float(k @ a), 0.0)
        return Projection(a, delta, k)

    def is_novel(self, proj: Projection) -> bool:
        return is_novel(proj, self.tol1)

    def seed(self, x: StateAction, step: int = 0) -> None:
        """Insert the first center."""
        if self.m:
            raise ValueError("dictionary already seeded")
        self.states = x.state[None, :].astype(np.float64)
        self.actions = np.array([x.action], dtype=np.int64)
        self.steps = [int(step)]
        self.kmm_inv = np.ones((1, 1))

    def grow(self, x: StateAction, proj: Projection | None = None, step: int = 0) -> None:
        """Append ``x`` and border-update ``K_mm^-1``.

        Raises
        ------
        SingularGrowthError
            If the projection residual does not exceed ``floor``.
        """
        if self.m == 0:
            self.seed(x, step)
            return
        if proj is None:
            proj = self.project(x)
        if proj.delta <= self.floor:
            raise SingularGrowthError(f"ALD residual {proj.delta:.3e} at or below floor")
        self.kmm_inv = border_inverse(self.kmm_inv, proj.a, proj.a, proj.delta)
        self.states = np.vstack([self.states, x.state[None, :]])
        self.actions = np.append(self.actions, x.action)
        self.steps.append(int(step))

    def gram(self) -> np.ndarray:
        """Directly computed ``K_mm``."""
        return gram_matrix(self.spec, self.centers)

    def rebuild_check(self, tol: float = 1e-6) -> float:
        """Compare ``kmm_inv`` with ``inv(K_mm)``; raise if they drift apart."""
        drift = inverse_drift(self.kmm_inv, self.gram())
        if drift > tol:
            raise NumericalDriftError(f"K_mm^-1 drift {drift:.3e} exceeds {tol:.1e}")
        return drift

    def copy(self) -> "Dictionary":
        out = Dictionary(self.spec, self.tol1, self.floor)
        out.states = self.states.copy()
        out.actions = self.actions.copy()
        out.steps = list(self.steps)
        out.kmm_inv = self.kmm_inv.copy()
        return out

    def to_csv(self, target) -> None:
        """Write one row per center: insertion step, action, state coordinates.

        ``target`` is a path or an open text file.
        """
        if hasattr(target, "write"):
            self._write_csv(target)
            return
        with open(target, "w", newline="") as fh:
            self._write_csv(fh)

    def _write_csv(self, fh) -> None:
        d = self.states.shape[1] if self.m else 0
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "step", "action"] + [f"s{j}" for j in range(d)])
        for i in range(self.m):
            w.writerow([i, self.steps[i], int(self.actions[i])]
                       + [repr(float(v)) for v in self.states[i]])
