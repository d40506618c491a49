"""Approximate policy iteration on top of the online evaluators.

Two architectures:

* optimistic policy iteration (OPI): act epsilon-greedily on the live
  evaluator, which is updated after every transition;
* actor-critic: a frozen actor network acts while an LSTD critic replays
  the ever-growing list of stored transitions in small batches; after a
  full pass the critic becomes the new actor.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dictionary import Dictionary
from .envs import EpisodeJoiner, make_env
from .evaluator import Hyper, PolicyEvaluator, Transition, make_evaluator
from .kernel import KernelSpec, StateAction

__all__ = [
    "FrozenActor",
    "select_action",
    "ReplayRecord",
    "ReplayStore",
    "EpisodeRecord",
    "RunLog",
    "run_opi",
    "run_actor_critic",
    "run",
    "greedy_policy",
    "evaluate_policy",
]


class FrozenActor:
    """Immutable copy of a critic: dictionary snapshot plus weights."""

    def __init__(self, evaluator: PolicyEvaluator):
        d = evaluator.dictionary
        self.h = evaluator.spec.h
        self.states = d.states.copy()
        self.actions = d.actions.copy()
        self.w = evaluator.w.copy()
        for arr in (self.states, self.actions, self.w):
            arr.setflags(write=False)

    @property
    def m(self) -> int:
        return self.w.shape[0]

    def q_values(self, state: np.ndarray, n_actions: int) -> np.ndarray:
        if self.m == 0:
            return np.zeros(n_actions)
        diff = self.states - state
        rbf = np.exp(-self.h * np.einsum("ij,ij->i", diff, diff)) * self.w
        return np.bincount(self.actions, weights=rbf, minlength=n_actions)[:n_actions]


def select_action(q_source, state: np.ndarray, n_actions: int, epsilon: float,
                  rng: np.random.Generator) -> int:
    """Epsilon-greedy choice over predicted Q values.

    ``q_source`` is anything with ``q_values(state, n_actions)``, or None for
    a network that does not exist yet (uniform random action). Greedy ties go
    to the lowest action id; random actions are uniform over all actions.
    """
    u = rng.random()
    if q_source is None or getattr(q_source, "m", 1) == 0 or u < epsilon:
        return int(rng.integers(n_actions))
    return int(np.argmax(q_source.q_values(state, n_actions)))


@dataclass(frozen=True)
class ReplayRecord:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    ends_episode: bool
    starts_episode: bool


class ReplayStore:
    """Append-only transition list with a cursor for batched replay."""

    def __init__(self):
        self.records: list[ReplayRecord] = []
        self.cursor = 0

    def __len__(self) -> int:
        return len(self.records)

    def append(self, rec: ReplayRecord) -> None:
        self.records.append(rec)

    def take(self, n: int | None) -> list[ReplayRecord]:
        """Next ``n`` unread records (all of them if ``n`` is None)."""
        end = len(self.records) if n is None else min(self.cursor + n, len(self.records))
        out = self.records[self.cursor:end]
        self.cursor = end
        return out

    @property
    def exhausted(self) -> bool:
        return self.cursor >= len(self.records)


@dataclass
class EpisodeRecord:
    transitions_seen: int
    episode_index: int
    episode_return: float
    mean_return_window: float
    dict_size: int
    cost_xi: float
    wallclock_ms_per_step: float


@dataclass
class RunLog:
    episodes: list = field(default_factory=list)
    evaluator: PolicyEvaluator | None = None
    actor: object = None
    n_improvements: int = 0
    skipped: int = 0

    @property
    def returns(self) -> np.ndarray:
        return np.array([e.episode_return for e in self.episodes])


def _learner(cfg, spec: KernelSpec) -> PolicyEvaluator:
    hyper = Hyper(gamma=cfg.gamma, lam=cfg.lam, sigma2=cfg.sigma2, eta=cfg.eta,
                  eta_schedule=cfg.eta_schedule, eta_c=cfg.eta_c)
    return make_evaluator(cfg.method, spec, hyper, tol1=cfg.tol1, tol2=cfg.tol2)


class _EpisodeTracker:
    def __init__(self, window: int, record_wallclock: bool):
        self.window = window
        self.record_wallclock = record_wallclock
        self.returns: list[float] = []
        self.ret = 0.0
        self.length = 0
        self.t0 = time.perf_counter()

    def step(self, r: float) -> None:
        self.ret += r
        self.length += 1

    def close(self, log: RunLog, seen: int, ev: PolicyEvaluator) -> None:
        self.returns.append(self.ret)
        recent = self.returns[-self.window:]
        ms = float("nan")
        if self.record_wallclock:
            ms = 1000.0 * (time.perf_counter() - self.t0) / max(self.length, 1)
        log.episodes.append(EpisodeRecord(seen, len(self.returns) - 1, self.ret,
                                          float(np.mean(recent)), ev.m, ev.cost, ms))
        self.ret = 0.0
        self.length = 0
        self.t0 = time.perf_counter()


def _env_params(cfg) -> dict:
    if cfg.env == "chain":
        return {"n": cfg.chain_n, "slip": cfg.chain_slip, "random_start": cfg.chain_random_start}
    return {"noise": cfg.nav_noise, "goal_radius": cfg.nav_goal_radius, "step_size": cfg.nav_step}


def run_opi(cfg, seed: int = 0) -> RunLog:
    """Optimistic policy iteration: greedy on the live evaluator every step."""
    if cfg.method not in ("lspe", "brm"):
        raise ValueError("OPI needs an incremental evaluator (lspe, or brm on deterministic tasks)")
    rng = np.random.default_rng(seed)
    env = make_env(cfg.env, seed=int(rng.integers(2**31)), **_env_params(cfg))
    spec = KernelSpec(h=cfg.h)
    ev = _learner(cfg, spec)
    log = RunLog(evaluator=ev)
    joiner = EpisodeJoiner(cfg.gamma)
    track = _EpisodeTracker(cfg.window, cfg.record_wallclock)
    nA = env.n_actions

    def start():
        s = env.reset()
        x = StateAction(s, select_action(ev, s, nA, cfg.epsilon, rng))
        for tr in joiner.start(x):
            ev.observe(tr)
        return x

    if cfg.max_transitions <= 0:
        return log
    x = start()
    for seen in range(1, cfg.max_transitions + 1):
        s_next, r, terminal = env.step(x.action)
        track.step(r)
        x_next = StateAction(s_next, select_action(ev, s_next, nA, cfg.epsilon, rng))
        info = ev.observe(joiner.step(r, x_next, terminal or track.length >= cfg.max_episode_steps))
        log.skipped += info["skipped"]
        x = x_next
        if joiner.ended:
            track.close(log, seen, ev)
            if seen < cfg.max_transitions:
                x = start()
    return log


def run_actor_critic(cfg, seed: int = 0) -> RunLog:
    """Actor-critic policy iteration with an LSTD critic over a replay list."""
    if cfg.method != "lstd":
        raise ValueError("actor-critic runs use the lstd critic")
    rng = np.random.default_rng(seed)
    env = make_env(cfg.env, seed=int(rng.integers(2**31)), **_env_params(cfg))
    critic_rng = np.random.default_rng(int(rng.integers(2**31)))
    spec = KernelSpec(h=cfg.h)
    critic = _learner(cfg, spec)
    log = RunLog(evaluator=critic)
    store = ReplayStore()
    track = _EpisodeTracker(cfg.window, cfg.record_wallclock)
    nA = env.n_actions
    actor: FrozenActor | None = None
    batch = None if cfg.batch_size <= 0 else cfg.batch_size
    prev_end: StateAction | None = None

    def target_action(state):
        # the critic evaluates the actor's greedy policy
        if actor is None or actor.m == 0:
            return int(critic_rng.integers(nA))
        return int(np.argmax(actor.q_values(state, nA)))

    def replay(records):
        nonlocal prev_end
        for rec in records:
            x = StateAction(rec.state, rec.action)
            if rec.starts_episode and prev_end is not None:
                log.skipped += critic.observe(Transition(prev_end, 0.0, x, 0.0))["skipped"]
            prev_end = None
            x_next = StateAction(rec.next_state, target_action(rec.next_state))
            log.skipped += critic.observe(Transition(x, rec.reward, x_next, cfg.gamma))["skipped"]
            if rec.ends_episode:
                prev_end = x_next

    if cfg.max_transitions <= 0:
        return log
    s = env.reset()
    starting = True
    for seen in range(1, cfg.max_transitions + 1):
        a = select_action(actor, s, nA, cfg.epsilon, rng)
        s_next, r, terminal = env.step(a)
        track.step(r)
        ends = terminal or track.length >= cfg.max_episode_steps
        store.append(ReplayRecord(s, a, r, s_next, ends, starting))
        replay(store.take(batch))
        if store.exhausted:
            actor = FrozenActor(critic)
            log.n_improvements += 1
            store.cursor = 0
            prev_end = None
            if critic.m:
                critic.reset()
        if ends:
            track.close(log, seen, critic)
            s = env.reset()
            starting = True
        else:
            s = s_next
            starting = False
    log.actor = actor
    return log


def run(cfg, seed: int = 0) -> RunLog:
    """Dispatch on ``cfg.architecture``."""
    if cfg.architecture == "opi":
        return run_opi(cfg, seed)
    if cfg.architecture == "actor-critic":
        return run_actor_critic(cfg, seed)
    raise ValueError(f"unknown architecture {cfg.architecture!r}")


def greedy_policy(q_source, env) -> np.ndarray:
    """Greedy action in every state of a :class:`~kernel_pe.envs.ChainEnv`."""
    return np.array([int(np.argmax(q_source.q_values(env.observe(i), env.n_actions)))
                     for i in range(env.n)])


def evaluate_policy(q_source, env, episodes: int, max_steps: int) -> float:
    """Mean undiscounted return of the greedy policy over ``episodes`` runs."""
    total = 0.0
    for _ in range(episodes):
        s = env.reset()
        for _ in range(max_steps):
            s, r, done = env.step(int(np.argmax(q_source.q_values(s, env.n_actions))))
            total += r
            if done:
                break
    return total / episodes
