"""
LSTD on the noisy chain versus the exact Q table
================================================

The 5-state chain is small enough to solve exactly, so the kernel estimate
can be compared entry by entry with Q^pi from a linear solve.
"""

import numpy as np

from kernel_pe.envs import ChainEnv, as_finite_mdp
from kernel_pe.evaluator import Hyper, make_evaluator
from kernel_pe.kernel import KernelSpec
from kernel_pe.oracle import exact_q
from kernel_pe.verify import chain_evaluation_stream

policy = np.ones(5, dtype=int)  # always try to move right
hyper = Hyper(gamma=0.99, lam=0.5, sigma2=0.1)
env = ChainEnv(5, slip=0.2)
Q = exact_q(as_finite_mdp(env, hyper.gamma), policy)

ev = make_evaluator("lstd", KernelSpec(5.0), hyper, tol1=1e-6)
checkpoints = {1_000, 5_000, 20_000, 50_000}
for n, tr in enumerate(chain_evaluation_stream(50_000, 0, policy, hyper.gamma), 1):
    ev.observe(tr)
    if n in checkpoints:
        Qt = np.array([ev.q_values(env.observe(i), 2) for i in range(4)])
        print(f"{n:6d} transitions  max |Q~ - Q| over non-terminal states = "
              f"{np.max(np.abs(Qt - Q[:4])):.4f}")

np.set_printoptions(precision=4, suppress=True)
print("exact Q (left, right):\n", Q[:4])
print("LSTD estimate:\n", np.array([ev.q_values(env.observe(i), 2) for i in range(4)]))
