"""
Classic Bayesian policy reuse driven by episodic returns.

The performance model is a Gaussian per (task, policy) pair fitted by
running every source policy on every source task.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from app.core.belief import belief_update
from app.core.types import Belief, DiscountConfig
from app.dynamics.likelihood import gaussian_log_density
from app.environments.base import Environment
from app.environments.rollout import rollout_episode
from app.environments.suites import make_env
from app.utils.exceptions import DimensionMismatchError, InvalidVarianceError

logger = logging.getLogger(__name__)

DEFAULT_TABLE_EPISODES = 100
SPREAD_FRACTION = 0.1


@dataclass(frozen=True, eq=False)
class ReturnObservationTable:
    """``mean[j, p]`` and ``variance[j, p]`` of policy p's return on task j."""

    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        variance = np.array(self.variance, dtype=float)
        if mean.ndim != 2 or mean.shape[0] != mean.shape[1] or mean.shape != variance.shape:
            raise DimensionMismatchError(f"return table must be n x n, got {mean.shape} and {variance.shape}")
        if np.any(~(variance > 0)):
            raise InvalidVarianceError("every return-table variance must be positive")
        mean.setflags(write=False)
        variance.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", variance)

    @property
    def n(self) -> int:
        return int(self.mean.shape[0])


def default_return_variance(mean: np.ndarray) -> float:
    """(10% of the spread of the table means)², or 1 when every mean coincides."""
    spread = float(np.max(mean) - np.min(mean))
    return (SPREAD_FRACTION * spread) ** 2 if spread > 0 else 1.0


def fit_return_table(
    tasks: Sequence,
    policies: Sequence,
    episodes: int = DEFAULT_TABLE_EPISODES,
    variance: Optional[float] = None,
    discount: DiscountConfig = DiscountConfig(),
    rng: Optional[np.random.Generator] = None,
    env_factory: Callable[..., Environment] = make_env,
) -> ReturnObservationTable:
    """
    Mean return of every policy on every task. Deterministic env and policy
    pairs are run once since further episodes repeat the first exactly.
    """
    if len(tasks) != len(policies):
        raise DimensionMismatchError(f"{len(tasks)} source tasks but {len(policies)} source policies")
    if episodes < 1:
        raise ValueError(f"return-table episodes must be >= 1, got {episodes}")
    rng = rng if rng is not None else np.random.default_rng(0)
    n = len(tasks)
    mean = np.zeros((n, n))
    for j, task in enumerate(tasks):
        env = env_factory(task, rng)
        for p, policy in enumerate(policies):
            runs = 1 if (env.deterministic and policy.deterministic) else episodes
            returns = [rollout_episode(env, policy, rng).episode_return(discount) for _ in range(runs)]
            mean[j, p] = float(np.mean(returns))
    eps2 = default_return_variance(mean) if variance is None else float(variance)
    logger.info(f"Fitted {n}x{n} return table, variance {eps2:.4g}")
    return ReturnObservationTable(mean=mean, variance=np.full((n, n), eps2))


def bpr_return_update(belief: Belief, observed_return: float, policy_index: int, table: ReturnObservationTable) -> Belief:
    """posterior_j ∝ N(U; mean[j, p], variance[j, p]) · prior_j"""
    if not 0 <= policy_index < table.n:
        raise IndexError(f"policy index {policy_index} outside table of size {table.n}")
    log_lik = gaussian_log_density(observed_return, table.mean[:, policy_index], table.variance[:, policy_index])
    return belief_update(belief, log_lik)


def bpr_return_select(belief: Belief, table: ReturnObservationTable) -> int:
    """argmax_p Σ_j belief_j · mean[j, p]; ties to the smallest index."""
    expected = belief.weights @ table.mean
    return int(np.argmax(expected))
