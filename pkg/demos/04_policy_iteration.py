"""
Approximate policy iteration
============================

Optimistic policy iteration acts greedily on the live LSPE estimate; the
actor-critic variant freezes a copy of an LSTD critic while the critic
replays all stored transitions in batches of 20. Both are compared with
exact policy iteration on the noisy chain, then the usefulness threshold
is tried on the 2-d navigation task.
"""

import numpy as np

from kernel_pe.control import evaluate_policy, greedy_policy, run
from kernel_pe.envs import ChainEnv, NoisyNav2D, as_finite_mdp
from kernel_pe.oracle import policy_iteration
from kernel_pe.verify import chain_control_config, nav_config

cfg = chain_control_config()
env = ChainEnv(cfg.chain_n, slip=cfg.chain_slip)
best, Q = policy_iteration(as_finite_mdp(env, cfg.gamma))
print("policy iteration:", best, "(the last state is terminal, any action is optimal)")

for arch, method in (("opi", "lspe"), ("actor-critic", "lstd")):
    log = run(cfg.replace(architecture=arch, method=method), seed=0)
    net = log.actor if log.actor is not None else log.evaluator
    print(f"{arch:12s} greedy policy {greedy_policy(net, env)}  "
          f"episodes={len(log.episodes)} centers={log.evaluator.m}")

# %%
# On the navigation task, supervised selection trades a few points of
# return for a noticeably smaller dictionary.

for tol2 in (0.0, 0.01):
    log = run(nav_config(tol2=tol2, max_transitions=5_000), seed=0)
    ret = evaluate_policy(log.evaluator, NoisyNav2D(seed=99), 100, 100)
    print(f"nav2d tol2={tol2:<5} centers={log.evaluator.m:3d} greedy return={ret:.2f}")
