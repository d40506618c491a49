"""Rank-1 inverse updates.

Two identities carry every recursion in the package:

* Sherman-Morrison for a rank-1 term ``B + u v^T`` (``u != v`` is allowed,
  which the LSTD cross-product matrix needs since it is not symmetric).
* The partitioned inverse for a bordered matrix
  ``[[B, b_col], [b_row^T, b_star]]``.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "SingularUpdateError",
    "SingularGrowthError",
    "NumericalDriftError",
    "DEFAULT_FLOOR",
    "singularity_floor",
    "sm_update",
    "grow_inverse",
    "grow_inverse_asym",
    "border_inverse",
    "inverse_drift",
]

DEFAULT_FLOOR = 1e-12


class SingularUpdateError(ArithmeticError):
    """``1 + v^T B^-1 u`` is too close to zero for a Sherman-Morrison step."""


class SingularGrowthError(ArithmeticError):
    """The Schur complement of a bordered matrix is too close to zero."""


class NumericalDriftError(ArithmeticError):
    """A propagated inverse drifted away from the directly computed one."""


def singularity_floor(B_inv: np.ndarray, rel: float = DEFAULT_FLOOR) -> float:
    """Floor ``rel * (1 + |trace(B_inv)|)`` used to reject near-singular steps."""
    if B_inv.size == 0:
        return rel
    return rel * (1.0 + abs(B_inv.trace()))


def sm_update(B_inv: np.ndarray, u: np.ndarray, v: np.ndarray | None = None,
              floor: float = DEFAULT_FLOOR) -> np.ndarray:
    """Inverse of ``B + u v^T`` given ``B^-1`` (``v`` defaults to ``u``).

    Raises
    ------
    SingularUpdateError
        If ``|1 + v^T B^-1 u|`` does not exceed the singularity floor.
    """
    if v is None:
        v = u
    if B_inv.shape[0] != u.shape[0] or B_inv.shape[0] != v.shape[0]:
        raise ValueError(f"shape mismatch: {B_inv.shape}, {u.shape}, {v.shape}")
    Bu = B_inv @ u
    vB = v @ B_inv
    denom = 1.0 + vB @ u
    if abs(denom) <= singularity_floor(B_inv, floor):
        raise SingularUpdateError(f"Sherman-Morrison denominator {denom:.3e}")
    return B_inv - Bu[:, None] * (vB / denom)


def grow_inverse(B_inv: np.ndarray, b: np.ndarray, b_star: float,
                 floor: float = DEFAULT_FLOOR) -> tuple[np.ndarray, float]:
    """Inverse of the symmetric bordered matrix ``[[B, b], [b^T, b_star]]``.

    Returns the ``(m+1, m+1)`` inverse and ``Delta_b = b_star - b^T B^-1 b``.
    """
    return grow_inverse_asym(B_inv, b, b, b_star, floor)


def grow_inverse_asym(B_inv: np.ndarray, b_col: np.ndarray, b_row: np.ndarray,
                      b_star: float, floor: float = DEFAULT_FLOOR) -> tuple[np.ndarray, float]:
    """Inverse of ``[[B, b_col], [b_row^T, b_star]]`` given ``B^-1``."""
    m = B_inv.shape[0]
    if b_col.shape != (m,) or b_row.shape != (m,):
        raise ValueError(f"border shapes {b_col.shape}, {b_row.shape} do not match m={m}")
    left = B_inv @ b_col
    right = b_row @ B_inv
    delta_b = float(b_star - b_row @ left)
    if abs(delta_b) <= singularity_floor(B_inv, floor):
        raise SingularGrowthError(f"Schur complement {delta_b:.3e}")
    return border_inverse(B_inv, left, right, delta_b), delta_b


def border_inverse(B_inv: np.ndarray, left: np.ndarray, right: np.ndarray,
                   delta_b: float) -> np.ndarray:
    """Assemble ``[[B^-1, 0], [0, 0]] + [-left; 1][-right, 1] / delta_b``.

    ``left = B^-1 b_col`` and ``right = b_row^T B^-1`` are passed in so callers
    that already have them (the evaluator caches them) skip the products.
    """
    m = B_inv.shape[0]
    out = np.empty((m + 1, m + 1))
    out[:m, :m] = B_inv + left[:, None] * (right / delta_b)
    out[:m, m] = -left / delta_b
    out[m, :m] = -right / delta_b
    out[m, m] = 1.0 / delta_b
    return out


def inverse_drift(B_inv: np.ndarray, B: np.ndarray) -> float:
    """Max-abs difference between a propagated inverse and ``inv(B)``."""
    return float(np.max(np.abs(B_inv - np.linalg.inv(B)))) if B.size else 0.0
