"""Collect transitions on every source task and fit its dynamics models."""
import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np

from app.dynamics.fitting import fit_model
from app.engine.library import save_library
from app.environments.rollout import collect_transitions
from app.environments.suites import make_env
from app.harness.config import ExperimentConfig
from app.harness.seeding import derive_seed
from app.utils.exceptions import BprxError

logger = logging.getLogger("bprx.harness")

# share of per-step uniform random actions in the source rollouts
EXPLORE_FRACTION = 0.5


def fit_sources(
    config: ExperimentConfig,
    out_dir: Union[str, Path],
    samples: Optional[int] = None,
    seed: Optional[int] = None,
    trial: int = 0,
) -> Path:
    """
    Write a library directory for ``config``'s source suite and return the
    manifest path. Same config, seed and trial give byte-identical files;
    other trials draw fresh source data.
    """
    samples = config.samples if samples is None else samples
    seed = config.seed if seed is None else seed
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")

    entries = []
    for task in config.source_tasks:
        env = make_env(task, np.random.default_rng(derive_seed(seed, trial, "source-env", task.task_id)))
        rng = np.random.default_rng(derive_seed(seed, trial, "source", task.task_id))
        policy = config.source_policy(task)
        transitions = collect_transitions(env, policy, samples, rng, explore_fraction=EXPLORE_FRACTION)

        models = {}
        for kind in config.model_kinds:
            try:
                models[kind] = fit_model(transitions, config.layout, config.fit_config(kind, seed), rng)
            except BprxError as exc:
                raise type(exc)(f"fitting {kind.value} model for {task.task_id} failed: {exc}", task_id=task.task_id) from exc
        logger.info(f"Fitted {', '.join(k.value for k in models)} for {task.task_id} on {len(transitions)} samples")
        entries.append({"task": task, "policy": policy, "models": models, "n_samples": len(transitions)})

    return save_library(entries, config.layout, out_dir, seed=seed)
