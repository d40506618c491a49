"""
Online recursions against their batch solutions
===============================================

Each evaluator processes one transition at a time with rank-1 updates and
borders its matrices whenever a new center is admitted. The batch module
solves the same least-squares problems densely; the two should agree up to
rounding.
"""

import numpy as np

from kernel_pe.evaluator import Hyper, Transition, make_evaluator
from kernel_pe.kernel import KernelSpec, StateAction
from kernel_pe.oracle import batch_solve, brm_cost

rng = np.random.default_rng(1)
spec = KernelSpec(h=5.0)
hyper = Hyper(gamma=0.9, lam=0.6, sigma2=0.1, eta=0.5)


def stream(n):
    x = StateAction.make(rng.uniform(size=2), rng.integers(3))
    for _ in range(n):
        xn = StateAction.make(rng.uniform(size=2), rng.integers(3))
        # an occasional zero discount stands for an episode boundary
        g = 0.0 if rng.random() < 0.05 else hyper.gamma
        yield Transition(x, float(rng.normal()), xn, g)
        x = xn


data = list(stream(400))
for method in ("brm", "lstd", "lspe"):
    ev = make_evaluator(method, spec, hyper, tol1=0.3, record=True)
    grew = sum(ev.observe(tr)["grew"] for tr in data)
    w_batch = batch_solve(method, ev.log, spec, hyper)
    rel = np.max(np.abs(ev.w - w_batch)) / np.max(np.abs(w_batch))
    line = f"{method:5s} m={ev.m:3d} grow steps={grew:3d}  relative error vs batch={rel:.2e}"
    if method == "brm":
        line += f"  xi={ev.xi:.6f} direct cost={brm_cost(ev.log, spec, hyper, ev.w):.6f}"
    print(line)

# %%
# Supervised selection: with tol2 > 0 a novel center must also lower the
# regularized cost by more than tol2.

for tol2 in (0.0, 0.01, 0.1):
    ev = make_evaluator("lspe", spec, hyper, tol1=0.3, tol2=tol2)
    for tr in data:
        ev.observe(tr)
    print(f"tol2={tol2:<5} centers={ev.m:3d} rejected={ev.n_rejected}")
