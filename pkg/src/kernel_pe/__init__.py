"""Online kernel-based policy evaluation (BRM, LSTD(lambda), LSPE(lambda)) on a
sparse, growing dictionary, with tabular oracles and small control loops."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .control import FrozenActor, ReplayStore, run, run_actor_critic, run_opi, select_action
from .dictionary import Dictionary, Projection, is_novel
from .envs import ChainEnv, EpisodeJoiner, NoisyNav2D, adapt_episodic, as_finite_mdp, make_env
from .evaluator import (
    BRM,
    LSPE,
    LSTD,
    Hyper,
    PolicyEvaluator,
    Transition,
    make_evaluator,
)
from .kernel import KernelSpec, StateAction, eval_kernel, eval_kernel_vector, gram_matrix
from .linalg import NumericalDriftError, SingularGrowthError, SingularUpdateError
from .oracle import FiniteMDP, batch_solve, exact_q, full_rn_solve, policy_iteration, sr_solve
from .snapshot import load_snapshot, save_snapshot

__version__ = "0.1.0"

__all__ = [
    "BRM", "LSPE", "LSTD", "ChainEnv", "ConfigError", "Dictionary", "EpisodeJoiner",
    "ExperimentConfig", "FiniteMDP", "FrozenActor", "Hyper", "KernelSpec", "NoisyNav2D",
    "NumericalDriftError", "PolicyEvaluator", "Projection", "ReplayStore", "SingularGrowthError",
    "SingularUpdateError", "StateAction", "Transition", "adapt_episodic", "as_finite_mdp",
    "batch_solve", "eval_kernel", "eval_kernel_vector", "exact_q", "full_rn_solve",
    "gram_matrix", "is_novel", "load_config", "load_snapshot", "make_env", "make_evaluator",
    "parse_config", "policy_iteration", "run", "run_actor_critic", "run_opi", "save_snapshot",
    "select_action", "sr_solve",
]
