"""Learners pluggable into the engine's learning phase."""
from typing import Optional

import numpy as np

from app.core.types import DiscountConfig
from app.environments.base import Environment
from app.environments.rollout import rollout_episode
from app.policies.cem import CemConfig, CrossEntropyLearner, LearnerResult
from app.policies.controllers import scripted_policy_for

LEARNER_NAMES = ("cem", "oracle-scripted")


class OracleScriptedLearner:
    """Returns the hand-written controller for the task the env reveals."""

    name = "oracle-scripted"

    def __init__(self, discount: DiscountConfig = DiscountConfig()):
        self.discount = discount

    def learn(self, env: Environment, rng: Optional[np.random.Generator] = None) -> LearnerResult:
        rng = rng if rng is not None else np.random.default_rng(0)
        policy = scripted_policy_for(env.task)
        episode = rollout_episode(env, policy, rng, collect=True)
        best = episode.episode_return(self.discount)
        return LearnerResult(policy=policy, best_return=best, history=[best], samples=list(episode.samples))


def make_learner(name: str = "cem", cem: CemConfig = CemConfig(), discount: DiscountConfig = DiscountConfig()):
    if name == "cem":
        return CrossEntropyLearner(cem, discount)
    if name == "oracle-scripted":
        return OracleScriptedLearner(discount)
    raise ValueError(f"unknown learner '{name}' (expected one of: {', '.join(LEARNER_NAMES)})")
