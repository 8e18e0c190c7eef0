"""Episode rollouts and transition collection."""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from app.core.belief import discounted_return
from app.core.types import DiscountConfig, TransitionSample
from app.environments.base import Environment


@dataclass
class Rollout:
    rewards: List[float] = field(default_factory=list)
    samples: List[TransitionSample] = field(default_factory=list)
    steps: int = 0
    reached_goal: bool = False

    def episode_return(self, discount: DiscountConfig = DiscountConfig()) -> float:
        return discounted_return(self.rewards, discount)


def rollout_episode(
    env: Environment,
    policy,
    rng: np.random.Generator,
    collect: bool = False,
    explore_fraction: float = 0.0,
    max_steps: Optional[int] = None,
) -> Rollout:
    """
    Run ``policy`` for one episode. With ``explore_fraction`` > 0 each step
    independently takes a uniform random action with that probability.
    """
    budget = env.max_steps if max_steps is None else max_steps
    result = Rollout()
    state = env.reset()
    for _ in range(budget):
        if explore_fraction > 0 and rng.random() < explore_fraction:
            action = env.sample_action(rng)
        else:
            action = policy.act(state, rng)
        next_state, reward, done = env.step(action)
        result.rewards.append(reward)
        if collect:
            result.samples.append(env.transition_sample(state, action, reward, next_state))
        state = next_state
        if done:
            break
    result.steps = len(result.rewards)
    result.reached_goal = env.reached_goal
    return result


def collect_transitions(
    env: Environment,
    policy,
    n_samples: int,
    rng: np.random.Generator,
    explore_fraction: float = 0.5,
) -> List[TransitionSample]:
    """Roll out episodes until ``n_samples`` transitions are gathered."""
    samples: List[TransitionSample] = []
    while len(samples) < n_samples:
        episode = rollout_episode(env, policy, rng, collect=True, explore_fraction=explore_fraction)
        samples.extend(episode.samples)
    return samples[:n_samples]
