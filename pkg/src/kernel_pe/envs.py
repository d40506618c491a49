"""Small episodic benchmark environments and the episode-joining adapter."""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence

import numpy as np

from .evaluator import Transition
from .kernel import StateAction
from .oracle import FiniteMDP

__all__ = [
    "ChainEnv",
    "NoisyNav2D",
    "EpisodeJoiner",
    "adapt_episodic",
    "as_finite_mdp",
    "make_env",
]


class ChainEnv:
    """Chain of ``n`` states; reaching the right end pays +1 and terminates.

    State ``i`` is observed as the scalar ``i / (n - 1)`` so the RBF kernel has
    a meaningful metric. Action 0 moves left, 1 moves right; with probability
    ``slip`` the move goes the other way. Moving left from state 0 stays put.

    Parameters
    ----------
    n : int
        Number of states, the last one terminal.
    slip : float
        Probability of reversing the intended move; 0 gives the
        deterministic variant.
    random_start : bool
        Start episodes uniformly over non-terminal states instead of state 0.
    seed : int, optional
        Seed of the environment's own generator.
    """

    n_actions = 2
    state_dim = 1

    def __init__(self, n: int = 5, slip: float = 0.0, random_start: bool = True,
                 seed: int | None = None):
        if n < 2:
            raise ValueError("chain needs at least two states")
        if not (slip == 0.0 or 0.0 < slip < 0.5):
            raise ValueError(f"slip must be 0 or in (0, 0.5), got {slip}")
        self.n = n
        self.slip = float(slip)
        self.random_start = random_start
        self.rng = np.random.default_rng(seed)
        self.pos: int | None = None

    @property
    def deterministic(self) -> bool:
        return self.slip == 0.0

    def observe(self, i: int) -> np.ndarray:
        return np.array([i / (self.n - 1)])

    def index_of(self, state: np.ndarray) -> int:
        return int(round(float(state[0]) * (self.n - 1)))

    def reset(self) -> np.ndarray:
        self.pos = int(self.rng.integers(self.n - 1)) if self.random_start else 0
        return self.observe(self.pos)

    def step(self, action: int):
        if self.pos is None:
            raise RuntimeError("step() called before reset() or after a terminal step")
        if action not in (0, 1):
            raise ValueError(f"invalid action {action}")
        move = 1 if action == 1 else -1
        if self.slip and self.rng.random() < self.slip:
            move = -move
        self.pos = min(max(self.pos + move, 0), self.n - 1)
        s = self.observe(self.pos)
        if self.pos == self.n - 1:
            self.pos = None
            return s, 1.0, True
        return s, 0.0, False


class NoisyNav2D:
    """Point navigation on the unit square with noisy compass moves.

    Each step costs -1 until the agent is within ``goal_radius`` of ``goal``.
    Moves are ``step_size`` in the chosen direction (N, E, S, W) plus
    isotropic Gaussian noise of std ``noise``; positions are clipped to the
    square.
    """

    n_actions = 4
    state_dim = 2
    _dirs = np.array([[0.0, 1.0], [1.0, 0.0], [0.0, -1.0], [-1.0, 0.0]])

    def __init__(self, noise: float = 0.03, goal_radius: float = 0.15, step_size: float = 0.1,
                 goal=(0.85, 0.85), seed: int | None = None):
        if not noise > 0:
            raise ValueError("noise std must be positive")
        self.noise = float(noise)
        self.goal_radius = float(goal_radius)
        self.step_size = float(step_size)
        self.goal = np.asarray(goal, dtype=np.float64)
        self.rng = np.random.default_rng(seed)
        self.pos: np.ndarray | None = None

    deterministic = False

    def _at_goal(self, p) -> bool:
        return float(np.linalg.norm(p - self.goal)) <= self.goal_radius

    def reset(self) -> np.ndarray:
        while True:
            p = self.rng.uniform(0.0, 1.0, size=2)
            if not self._at_goal(p):
                self.pos = p
                return p.copy()

    def step(self, action: int):
        if self.pos is None:
            raise RuntimeError("step() called before reset() or after a terminal step")
        move = self._dirs[action] * self.step_size + self.rng.normal(0.0, self.noise, size=2)
        self.pos = np.clip(self.pos + move, 0.0, 1.0)
        s = self.pos.copy()
        if self._at_goal(s):
            self.pos = None
            return s, -1.0, True
        return s, -1.0, False


def as_finite_mdp(env, gamma: float) -> FiniteMDP:
    """Exact tabular model of a :class:`ChainEnv`; the end state is absorbing with zero reward."""
    if not isinstance(env, ChainEnv):
        raise TypeError(f"no tabular model for {type(env).__name__}")
    n = env.n
    P = np.zeros((n, 2, n))
    R = np.zeros((n, 2, n))
    last = n - 1
    for s in range(last):
        for a, move in ((0, -1), (1, 1)):
            to = min(max(s + move, 0), last)
            back = min(max(s - move, 0), last)
            P[s, a, to] += 1.0 - env.slip
            P[s, a, back] += env.slip
        R[s, :, last] = 1.0
    P[last, :, last] = 1.0
    return FiniteMDP(P, R, gamma)


class EpisodeJoiner:
    """Turn episodes into one unbroken stream of transitions.

    Inside an episode each step becomes an ordinary transition with discount
    ``gamma``. When an episode ends, the next call to :meth:`start` emits a
    zero-reward, zero-discount transition from the last state-action of the
    finished episode to the first one of the new episode.
    """

    def __init__(self, gamma: float):
        self.gamma = gamma
        self.x: StateAction | None = None
        self.ended = False

    def start(self, x0: StateAction) -> list[Transition]:
        out = []
        if self.x is not None and self.ended:
            out.append(Transition(self.x, 0.0, x0, 0.0))
        self.x = x0
        self.ended = False
        return out

    def step(self, reward: float, x_next: StateAction, terminal: bool) -> Transition:
        if self.x is None or self.ended:
            raise RuntimeError("step() outside an episode")
        tr = Transition(self.x, float(reward), x_next, self.gamma)
        self.x = x_next
        self.ended = bool(terminal)
        return tr


def adapt_episodic(episodes: Iterable[tuple[Sequence[StateAction], Sequence[float]]],
                   gamma: float) -> Iterator[Transition]:
    """Stream transitions from ``(state_actions, rewards)`` episodes.

    An episode with state-actions ``x_0..x_T`` carries rewards ``r_1..r_T``.
    """
    joiner = EpisodeJoiner(gamma)
    for xs, rs in episodes:
        if len(xs) != len(rs) + 1:
            raise ValueError("an episode needs one more state-action than rewards")
        yield from joiner.start(xs[0])
        for i, r in enumerate(rs):
            yield joiner.step(r, xs[i + 1], terminal=(i == len(rs) - 1))


def make_env(name: str, seed: int | None = None, **params):
    """Build an environment by config key (``chain`` or ``nav2d``)."""
    if name == "chain":
        return ChainEnv(seed=seed, **params)
    if name == "nav2d":
        return NoisyNav2D(seed=seed, **params)
    raise ValueError(f"unknown environment {name!r}")
