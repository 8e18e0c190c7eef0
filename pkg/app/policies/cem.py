"""
Cross-entropy method over linear policy parameters.

Each iteration samples a population from a diagonal Gaussian, scores every
candidate by one episode return and refits the Gaussian to the elite set.
The best candidate seen so far competes for the elite set in every refit,
and an extra variance term that decays linearly to zero over the run keeps
the search from collapsing onto the first basin it finds.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from app.core.types import DiscountConfig, TransitionSample
from app.environments.base import Environment
from app.environments.rollout import rollout_episode
from app.policies.base import Policy
from app.policies.linear import policy_class_for
from app.utils.exceptions import LearnerFailedError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CemConfig:
    population: int = 32
    elite_fraction: float = 0.25
    iterations: int = 30
    init_std: float = 1.0
    min_std: float = 1e-3
    # std of the decaying extra noise added to every refit
    extra_noise: float = 0.5
    stall_inflation: float = 2.0
    seed: int = 0
    # Raise LearnerFailedError when the best return stays below this
    target_return: Optional[float] = None

    def __post_init__(self):
        if self.population < 1 or self.iterations < 1:
            raise ValueError("CEM needs population >= 1 and iterations >= 1")
        if not 0 < self.elite_fraction <= 1:
            raise ValueError(f"elite_fraction must lie in (0, 1], got {self.elite_fraction}")
        if self.extra_noise < 0:
            raise ValueError(f"extra_noise must be >= 0, got {self.extra_noise}")

    def extra_variance(self, iteration: int) -> float:
        """Extra variance for the refit after ``iteration``; zero by the last iteration."""
        remaining = max(0.0, 1.0 - (iteration + 1) / self.iterations)
        return self.extra_noise ** 2 * remaining

    @property
    def n_elite(self) -> int:
        return max(1, int(round(self.population * self.elite_fraction)))


@dataclass
class LearnerResult:
    policy: Policy
    best_return: float
    history: List[float] = field(default_factory=list)
    samples: List[TransitionSample] = field(default_factory=list)


class CrossEntropyLearner:
    name = "cem"

    def __init__(self, config: CemConfig = CemConfig(), discount: DiscountConfig = DiscountConfig(), policy_class=None):
        self.config = config
        self.discount = discount
        self.policy_class = policy_class

    def learn(self, env: Environment, rng: Optional[np.random.Generator] = None) -> LearnerResult:
        cfg = self.config
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        policy_class = self.policy_class or policy_class_for(env)
        dim = policy_class.n_params
        mean = np.zeros(dim)
        std = np.full(dim, cfg.init_std)

        best_theta: Optional[np.ndarray] = None
        best_return = -np.inf
        history: List[float] = []
        final_samples: List[TransitionSample] = []

        for iteration in range(cfg.iterations):
            final = iteration == cfg.iterations - 1
            thetas = mean + std * rng.standard_normal((cfg.population, dim))
            returns = np.empty(cfg.population)
            for i, theta in enumerate(thetas):
                episode = rollout_episode(env, policy_class.build(theta), rng, collect=final)
                returns[i] = episode.episode_return(self.discount)
                if final:
                    final_samples.extend(episode.samples)

            top = int(np.argmax(returns))
            if returns[top] > best_return:
                best_return = float(returns[top])
                best_theta = thetas[top].copy()
            history.append(best_return)

            if np.ptp(returns) == 0.0:
                # stagnation guard: every candidate scored the same, widen the search
                std = std * cfg.stall_inflation
                logger.debug(f"CEM iteration {iteration}: flat returns {returns[0]:.3f}, std inflated")
                continue

            pool = np.vstack([thetas, best_theta[None, :]])
            pool_returns = np.append(returns, best_return)
            elite = pool[np.argsort(-pool_returns, kind="stable")[:cfg.n_elite]]
            mean = elite.mean(axis=0)
            std = np.sqrt(elite.var(axis=0) + cfg.extra_variance(iteration)) + cfg.min_std
            logger.debug(f"CEM iteration {iteration}: best {best_return:.3f}, elite mean {returns.max():.3f}")

        policy = policy_class.build(best_theta)
        if cfg.target_return is not None and best_return < cfg.target_return:
            raise LearnerFailedError(
                f"CEM budget exhausted at best return {best_return:.3f} (target {cfg.target_return:.3f})",
                best_policy=policy,
                best_return=best_return,
            )
        return LearnerResult(policy=policy, best_return=best_return, history=history, samples=final_samples)


def cem_learn(
    env: Environment,
    policy_class=None,
    iterations: int = 30,
    population: int = 32,
    elite_fraction: float = 0.25,
    seed: int = 0,
    init_std: float = 1.0,
    discount: DiscountConfig = DiscountConfig(),
) -> Policy:
    """Best policy found by CEM; identical seeds give identical parameters."""
    config = CemConfig(
        population=population,
        elite_fraction=elite_fraction,
        iterations=iterations,
        init_std=init_std,
        seed=seed,
    )
    return CrossEntropyLearner(config, discount, policy_class).learn(env).policy
