"""Non-recursive reference solutions.

Everything here materializes the full data matrices and solves dense systems,
so it shares no code path with the rank-1 recursions in
:mod:`kernel_pe.evaluator`. It also holds the tabular side: finite MDPs,
exact ``Q^pi`` by a linear solve, and exact policy iteration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .evaluator import Hyper, TrajectoryLog
from .kernel import KernelSpec, StateAction, gram_matrix

__all__ = [
    "OracleSingularError",
    "FiniteMDP",
    "DataMatrices",
    "data_matrices",
    "batch_solve",
    "brm_cost",
    "exact_q",
    "bellman_residual",
    "policy_iteration",
    "full_rn_solve",
    "sr_solve",
    "MAX_ORACLE_ROWS",
]

MAX_ORACLE_ROWS = 5000


class OracleSingularError(np.linalg.LinAlgError):
    """A dense reference system is singular."""


def _solve(M: np.ndarray, y: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(M, y)
    except np.linalg.LinAlgError as exc:
        raise OracleSingularError(str(exc)) from exc


@dataclass
class DataMatrices:
    """Rows ``k_m(x_i)``, ``k_m(x_{i+1})``, rewards, discounts and the basis."""

    K: np.ndarray
    K_next: np.ndarray
    r: np.ndarray
    gamma: np.ndarray
    centers: list
    n_at: np.ndarray
    gram: np.ndarray

    @property
    def H(self) -> np.ndarray:
        return self.K - self.gamma[:, None] * self.K_next

    def trace_matrix(self, lam: float) -> np.ndarray:
        """Upper-triangular ``Lambda`` with ``Lambda[i, j] = prod_{l=i+1..j} lam*gamma_l``.

        With a constant discount this is the usual ``(lam*gamma)^(j-i)``.
        """
        t = self.r.shape[0]
        decay = lam * self.gamma
        L = np.zeros((t, t))
        for i in range(t):
            L[i, i] = 1.0
            if i + 1 < t:
                L[i, i + 1:] = np.cumprod(decay[i + 1:])
        return L

    def Z(self, lam: float) -> np.ndarray:
        return self.trace_matrix(lam).T @ self.K


def data_matrices(log: TrajectoryLog, spec: KernelSpec) -> DataMatrices:
    """Materialize the data matrices on the final dictionary.

    A center inserted after ``n`` processed transitions contributes exact
    kernel values to rows ``n-1`` onward. Earlier rows never saw it, so their
    entries are built from the subset-of-regressors approximation against the
    dictionary as it stood at insertion time.
    """
    trs = log.transitions
    t = len(trs)
    if t > MAX_ORACLE_ROWS:
        raise ValueError(f"oracle capped at {MAX_ORACLE_ROWS} rows, got {t}")
    X = [tr.x for tr in trs]
    Xn = [tr.x_next for tr in trs]
    centers = [c for _, c in log.insertions]
    m = len(centers)
    K = np.zeros((t, m))
    Kn = np.zeros((t, m))
    for j, (n, c) in enumerate(log.insertions):
        exact_from = max(n - 1, 0)
        if t > exact_from:
            K[exact_from:, j] = gram_matrix(spec, X[exact_from:], [c])[:, 0]
            Kn[exact_from:, j] = gram_matrix(spec, Xn[exact_from:], [c])[:, 0]
        if exact_from > 0:
            if j == 0:
                raise ValueError("first center inserted after data rows")
            G_old = gram_matrix(spec, centers[:j])
            a = _solve(G_old, gram_matrix(spec, centers[:j], [c])[:, 0])
            K[:exact_from, j] = K[:exact_from, :j] @ a
            Kn[:exact_from, j] = Kn[:exact_from, :j] @ a
    r = np.array([tr.reward for tr in trs], dtype=np.float64)
    g = np.array([tr.gamma_eff for tr in trs], dtype=np.float64)
    n_at = np.array([n for n, _ in log.insertions], dtype=np.int64)
    G = gram_matrix(spec, centers) if m else np.zeros((0, 0))
    return DataMatrices(K, Kn, r, g, centers, n_at, G)


def batch_solve(method: str, log: TrajectoryLog, spec: KernelSpec, hyper: Hyper) -> np.ndarray:
    """Weights from the closed-form solution of ``method`` on the whole log.

    ``brm``: ``(H^T H + s2 K_mm)^-1 H^T r``. ``lstd``:
    ``(Z^T H + s2 K_mm)^-1 Z^T r``. ``lspe`` replays the damped iterate
    step by step, each step solving on the prefix of the data matrices and
    the dictionary as it stood then.
    """
    dm = data_matrices(log, spec)
    s2 = hyper.sigma2
    H = dm.H
    if method == "brm":
        return _solve(H.T @ H + s2 * dm.gram, H.T @ dm.r)
    if method == "lstd":
        Z = dm.Z(hyper.lam)
        return _solve(Z.T @ H + s2 * dm.gram, Z.T @ dm.r)
    if method == "lspe":
        return _lspe_iterate(dm, hyper)
    raise ValueError(f"unknown method {method!r}")


def _lspe_iterate(dm: DataMatrices, hyper: Hyper) -> np.ndarray:
    K, H, r = dm.K, dm.H, dm.r
    Z = dm.Z(hyper.lam)
    t, m_final = K.shape
    # prefix sums of the per-row outer products
    KK = np.cumsum(np.einsum("ti,tj->tij", K, K), axis=0)
    ZH = np.cumsum(np.einsum("ti,tj->tij", Z, H), axis=0)
    Zr = np.cumsum(Z * r[:, None], axis=0)
    w = np.zeros(int(np.sum(dm.n_at == 0)))
    for j in range(1, t + 1):
        m = int(np.sum(dm.n_at <= j))
        w = np.concatenate([w, np.zeros(m - w.shape[0])])
        P = KK[j - 1, :m, :m] + hyper.sigma2 * dm.gram[:m, :m]
        d = Zr[j - 1, :m] - ZH[j - 1, :m, :m] @ w
        w = w + hyper.step_size(j - 1) * _solve(P, d)
    return w


def brm_cost(log: TrajectoryLog, spec: KernelSpec, hyper: Hyper, w: np.ndarray) -> float:
    """``||r - H w||^2 + s2 w^T K_mm w`` evaluated directly."""
    dm = data_matrices(log, spec)
    res = dm.r - dm.H @ w
    return float(res @ res + hyper.sigma2 * w @ dm.gram @ w)


@dataclass
class FiniteMDP:
    """Tabular MDP with ``P[s, a, s']`` and ``R[s, a, s']``."""

    P: np.ndarray
    R: np.ndarray
    gamma: float

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=np.float64)
        self.R = np.asarray(self.R, dtype=np.float64)
        if self.P.ndim != 3 or self.P.shape != self.R.shape or self.P.shape[0] != self.P.shape[2]:
            raise ValueError(f"bad tensor shapes P{self.P.shape} R{self.R.shape}")
        if np.any(self.P < 0) or not np.allclose(self.P.sum(-1), 1.0, atol=1e-12, rtol=0):
            raise ValueError("transition rows must be distributions")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")

    @property
    def n_states(self) -> int:
        return self.P.shape[0]

    @property
    def n_actions(self) -> int:
        return self.P.shape[1]

    def expected_reward(self) -> np.ndarray:
        return np.einsum("sax,sax->sa", self.P, self.R)

    def bellman(self, Q: np.ndarray, policy: Sequence[int]) -> np.ndarray:
        """``(T_pi Q)(s, a) = E[R + gamma Q(s', pi(s'))]``."""
        policy = np.asarray(policy)
        q_next = Q[np.arange(self.n_states), policy]
        return self.expected_reward() + self.gamma * self.P @ q_next


def exact_q(mdp: FiniteMDP, policy: Sequence[int]) -> np.ndarray:
    """Solve ``(I - gamma P_pi) q = R_bar`` for the ``|S| x |A|`` table ``Q^pi``."""
    policy = np.asarray(policy, dtype=np.int64)
    S, A = mdp.n_states, mdp.n_actions
    n = S * A
    M = np.zeros((n, n))
    # column index of (s', pi(s')) in the flattened table
    cols = np.arange(S) * A + policy
    M[:, cols] = mdp.P.reshape(n, S)
    q = _solve(np.eye(n) - mdp.gamma * M, mdp.expected_reward().reshape(n))
    return q.reshape(S, A)


def bellman_residual(mdp: FiniteMDP, Q: np.ndarray, policy: Sequence[int]) -> float:
    return float(np.max(np.abs(Q - mdp.bellman(Q, policy))))


def policy_iteration(mdp: FiniteMDP, max_iter: int = 1000) -> tuple[np.ndarray, np.ndarray]:
    """Exact policy iteration; ties go to the lowest action id.

    Returns the final policy and its ``Q`` table.
    """
    policy = np.zeros(mdp.n_states, dtype=np.int64)
    for _ in range(max_iter):
        Q = exact_q(mdp, policy)
        best = Q.max(axis=1, keepdims=True)
        # keep the current action on (numerical) ties so the loop terminates
        tied = np.abs(Q - best) <= 1e-12 * (1.0 + np.abs(best))
        new = np.where(tied[np.arange(mdp.n_states), policy], policy, np.argmax(tied, axis=1))
        if np.array_equal(new, policy):
            return policy, Q
        policy = new
    raise RuntimeError("policy iteration did not converge")


def full_rn_solve(points: Sequence[StateAction], targets, spec: KernelSpec,
                  sigma2: float) -> np.ndarray:
    """Full regularization network weights ``(K + s2 I)^-1 y``."""
    y = np.asarray(targets, dtype=np.float64)
    if len(points) > 500:
        raise ValueError("full problem limited to 500 points")
    K = gram_matrix(spec, points)
    return _solve(K + sigma2 * np.eye(len(points)), y)


def sr_solve(points: Sequence[StateAction], targets, centers: Sequence[StateAction],
             spec: KernelSpec, sigma2: float) -> np.ndarray:
    """Subset-of-regressors weights ``(K_tm^T K_tm + s2 K_mm)^-1 K_tm^T y``.

    Solved as the stacked least-squares problem ``[K_tm; s L^T] w ~ [y; 0]``
    with ``K_mm = L L^T``, which avoids squaring the condition number.
    """
    y = np.asarray(targets, dtype=np.float64)
    Ktm = gram_matrix(spec, points, centers)
    Kmm = gram_matrix(spec, centers)
    try:
        L = np.linalg.cholesky(Kmm)
    except np.linalg.LinAlgError as exc:
        raise OracleSingularError(str(exc)) from exc
    stacked = np.vstack([Ktm, np.sqrt(sigma2) * L.T])
    rhs = np.concatenate([y, np.zeros(len(centers))])
    w, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)
    return w
