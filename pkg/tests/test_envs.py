import numpy as np
import pytest

from kernel_pe.envs import (
    ChainEnv,
    EpisodeJoiner,
    NoisyNav2D,
    adapt_episodic,
    as_finite_mdp,
    make_env,
)
from kernel_pe.kernel import StateAction


def sa(v, a=0):
    return StateAction.make([v], a)


def test_join_transition_after_episode():
    eps = [([sa(0.0), sa(0.1), sa(0.2)], [0.0, 1.0]), ([sa(0.5), sa(0.6)], [2.0])]
    out = list(adapt_episodic(eps, 0.9))
    assert len(out) == 4
    join = out[2]
    assert join.gamma_eff == 0.0 and join.reward == 0.0
    assert join.x.state[0] == 0.2 and join.x_next.state[0] == 0.5
    assert [t.gamma_eff for t in out] == [0.9, 0.9, 0.0, 0.9]


def test_adapter_rejects_ragged_episode():
    with pytest.raises(ValueError):
        list(adapt_episodic([([sa(0.0)], [1.0])], 0.9))


def test_continuing_stream_keeps_gamma():
    j = EpisodeJoiner(0.95)
    assert j.start(sa(0.0)) == []
    trs = [j.step(1.0, sa(i / 100), False) for i in range(100)]
    assert all(t.gamma_eff == 0.95 for t in trs)
    with pytest.raises(RuntimeError):
        EpisodeJoiner(0.9).step(0.0, sa(0.0), False)


def test_one_join_per_finished_episode():
    env = ChainEnv(5, slip=0.2, seed=4)
    rng = np.random.default_rng(0)
    j = EpisodeJoiner(0.9)
    out = []
    for _ in range(100):
        s = env.reset()
        x = StateAction(s, int(rng.integers(2)))
        out += j.start(x)
        done = False
        while not done:
            s, r, done = env.step(x.action)
            x = StateAction(s, int(rng.integers(2)))
            out.append(j.step(r, x, done))
    out += j.start(StateAction(env.reset(), 0))
    assert sum(t.gamma_eff == 0.0 for t in out) == 100


def test_deterministic_chain_model():
    mdp = as_finite_mdp(ChainEnv(5, slip=0.0), 0.9)
    assert set(np.unique(mdp.P)) <= {0.0, 1.0}
    assert mdp.P[0, 0, 0] == 1.0 and mdp.P[3, 1, 4] == 1.0
    assert mdp.expected_reward()[3, 1] == 1.0


def test_slip_frequencies_match_model():
    env = ChainEnv(5, slip=0.2, random_start=False, seed=11)
    P = as_finite_mdp(env, 0.9).P
    n, hits = 100_000, 0
    for _ in range(n):
        env.pos = 2
        s, _, _ = env.step(1)
        hits += env.index_of(s) == 3
    p = P[2, 1, 3]
    assert p == pytest.approx(0.8)
    assert abs(hits / n - p) <= 3 * np.sqrt(p * (1 - p) / n)


def test_visit_frequencies_match_stationary_distribution():
    env = ChainEnv(5, slip=0.2, seed=3)
    P = as_finite_mdp(env, 0.9).P
    policy = np.array([1, 0, 1, 1, 1])
    # episodic chain over non-terminal states: entering the end restarts uniformly
    T = np.array([P[s, policy[s], :4] + P[s, policy[s], 4] / 4 for s in range(4)])
    vals, vecs = np.linalg.eig(T.T)
    pi = np.real(vecs[:, np.argmin(np.abs(vals - 1))])
    pi /= pi.sum()
    n_batches, per = 100, 1000
    counts = np.zeros((n_batches, 4))
    s = env.reset()
    for b in range(n_batches):
        for _ in range(per):
            i = env.index_of(s)
            counts[b, i] += 1
            s, _, done = env.step(int(policy[i]))
            if done:
                s = env.reset()
    freq = counts / per
    # batch means absorb the autocorrelation of consecutive states
    se = freq.std(axis=0, ddof=1) / np.sqrt(n_batches)
    assert np.all(np.abs(freq.mean(0) - pi) <= 3 * se + 1e-12)


def test_seed_determinism():
    def stream(seed):
        env = ChainEnv(5, slip=0.2, seed=seed)
        out = [env.reset()[0]]
        for a in [1, 1, 0, 1, 1, 1, 0, 1, 1, 1, 1, 1]:
            if env.pos is None:
                out.append(env.reset()[0])
            s, r, d = env.step(a)
            out += [s[0], r, d]
        return out

    assert stream(5) == stream(5)
    a, b = NoisyNav2D(seed=2), NoisyNav2D(seed=2)
    a.reset(), b.reset()
    for _ in range(5):
        sa_, _, da = a.step(0)
        sb, _, db = b.step(0)
        np.testing.assert_array_equal(sa_, sb)
        if da:
            break


def test_chain_rules():
    env = ChainEnv(5, slip=0.0, random_start=False)
    assert env.reset()[0] == 0.0
    assert env.step(0)[0][0] == 0.0
    with pytest.raises(ValueError):
        env.step(2)
    for _ in range(3):
        env.step(1)
    s, r, done = env.step(1)
    assert (s[0], r, done) == (1.0, 1.0, True)
    with pytest.raises(RuntimeError):
        env.step(1)
    with pytest.raises(ValueError):
        ChainEnv(5, slip=0.6)
    assert env.deterministic and not ChainEnv(5, slip=0.2).deterministic


def test_nav_episode():
    env = NoisyNav2D(seed=0)
    s = env.reset()
    assert np.linalg.norm(s - env.goal) > env.goal_radius
    total, done, steps = 0.0, False, 0
    while not done and steps < 500:
        # walk toward the goal, east then north
        a = 1 if env.pos[0] < env.goal[0] else 0
        s, r, done = env.step(a)
        assert np.all((0.0 <= s) & (s <= 1.0))
        total += r
        steps += 1
    assert done and total == -steps
    with pytest.raises(ValueError):
        NoisyNav2D(noise=0.0)


def test_make_env():
    assert isinstance(make_env("chain", seed=1, n=4), ChainEnv)
    assert isinstance(make_env("nav2d", seed=1), NoisyNav2D)
    with pytest.raises(ValueError):
        make_env("keepaway")
    with pytest.raises(TypeError):
        as_finite_mdp(NoisyNav2D(), 0.9)
