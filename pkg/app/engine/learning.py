"""
Learning phase and plug-and-play library expansion.
"""

import logging
from dataclasses import dataclass
from typing import Any, List, Optional, Tuple

import numpy as np

from app.core.belief import belief_init
from app.core.types import Belief, SignalLayout, TransitionSample
from app.dynamics.base import DynamicsModel
from app.dynamics.fitting import DynamicsFitConfig, fit_model
from app.engine.library import LibraryEntry, PolicyLibrary
from app.environments.base import Environment
from app.environments.rollout import collect_transitions
from app.policies.base import Policy

logger = logging.getLogger("bprx.engine")

DEFAULT_LEARNING_SAMPLES = 200


@dataclass
class LearningOutcome:
    policy: Policy
    model: DynamicsModel
    samples: List[TransitionSample]
    best_return: float


def learning_samples(
    env: Environment,
    policy: Policy,
    learner_samples: List[TransitionSample],
    n_samples: int,
    rng: np.random.Generator,
) -> List[TransitionSample]:
    """
    Half from the learner's own rollouts, the rest from rollouts of the
    learned policy where each step takes a uniform random action with
    probability one half.
    """
    from_learner = min(len(learner_samples), n_samples // 2)
    picked: List[TransitionSample] = []
    if from_learner:
        index = np.sort(rng.choice(len(learner_samples), size=from_learner, replace=False))
        picked = [learner_samples[i] for i in index]
    picked.extend(collect_transitions(env, policy, n_samples - from_learner, rng, explore_fraction=0.5))
    return picked


def learning_phase(
    env: Environment,
    learner,
    layout: SignalLayout,
    fit_config: DynamicsFitConfig = DynamicsFitConfig(),
    n_samples: int = DEFAULT_LEARNING_SAMPLES,
    rng: Optional[np.random.Generator] = None,
) -> LearningOutcome:
    """
    Learn a policy for the env's task and fit a fresh dynamics model on
    samples collected around it. Learner failures propagate with the best
    policy attached.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    logger.info(f"Learning phase on {env.task.task_id} with learner '{getattr(learner, 'name', learner)}'")
    result = learner.learn(env, rng)
    samples = learning_samples(env, result.policy, result.samples, n_samples, rng)
    model = fit_model(samples, layout, fit_config, rng)
    logger.info(f"Learned policy for {env.task.task_id}: best return {result.best_return:.3f}, {len(samples)} samples")
    return LearningOutcome(policy=result.policy, model=model, samples=samples, best_return=result.best_return)


def expand_library(
    library: PolicyLibrary,
    policy: Policy,
    model: DynamicsModel,
    task: Any,
    n_samples: int = 0,
) -> Tuple[PolicyLibrary, Belief]:
    """Append one entry without touching existing ones; the belief restarts uniform over n+1."""
    expanded = library.with_entry(LibraryEntry(task=task, policy=policy, model=model, n_samples=n_samples))
    logger.info(f"Library expanded with {task.task_id}: {library.n} -> {expanded.n} entries")
    return expanded, belief_init(expanded.n)
