"""
Continual runs: the engine meets targets far from every source, detects
them, learns a policy and grows the library. A frozen-library return-signal
BPR runs on the same targets for comparison.
"""

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import pandas as pd
from django.conf import settings

from app.baselines.agents import BprReturnAgent, run_baseline_episode
from app.core.constants import METHOD_MODEL_KIND, Method, ModelKind
from app.engine.events import EventLog, write_events_jsonl
from app.engine.library import PolicyLibrary, load_library
from app.engine.reuse import PolicyReuseEngine
from app.environments.suites import make_env
from app.harness.config import ExperimentConfig
from app.harness.results import ResultRow, sort_rows, summarize_results, write_results_csv, write_summary
from app.harness.runner import baseline_table, map_jobs
from app.harness.seeding import env_rng, method_rng

logger = logging.getLogger("bprx.harness")

CONTINUAL_NAME = "continual.csv"
GROWTH_NAME = "library_growth.csv"
GROWTH_COLUMNS = ["trial", "target_task", "detected_at", "expanded", "library_size"]


def continual_method(config: ExperimentConfig) -> Method:
    return next((m for m in config.methods if m in METHOD_MODEL_KIND), Method.OURS_GP)


@dataclass(frozen=True)
class ContinualJob:
    trial: int
    seed: int
    config: ExperimentConfig
    library: PolicyLibrary
    table: Any
    timing: bool


def run_continual_trial(job: ContinualJob) -> Tuple[List[ResultRow], List[Dict[str, Any]], List[Dict[str, Any]]]:
    """All targets of one trial in order; the grown library carries from one target to the next."""
    config = job.config
    method = continual_method(config)
    rng = method_rng(job.seed, job.trial, method.value, "continual")
    engine = PolicyReuseEngine(
        job.library,
        config.layout,
        config.reuse,
        rng,
        learner=config.learner(int(rng.integers(2 ** 31))),
        fit_config=config.fit_config(METHOD_MODEL_KIND[method], job.seed),
        learning_budget=config.learning_samples,
    )
    rows: List[ResultRow] = []
    growth: List[Dict[str, Any]] = []
    events: List[Dict[str, Any]] = []

    for target in config.target_tasks:
        target_id = target.task_id
        log = EventLog(trial=job.trial, method=method.value, target_task=target_id)
        env = make_env(target, env_rng(job.seed, job.trial, target_id))
        run = engine.run_target(env, config.episodes, continual=True, events=log)
        for episode, (result, wall) in enumerate(zip(run.episodes, run.wall_times_ms)):
            rows.append(ResultRow(job.trial, method.value, target_id, episode, result.return_U,
                                  round(wall, 3) if job.timing else 0.0))
        growth.append({
            "trial": job.trial,
            "target_task": target_id,
            "detected_at": -1 if run.detected_at is None else run.detected_at,
            "expanded": bool(run.expansions),
            "library_size": run.library.n,
        })
        events.extend(log.events)

        # frozen library, return-signal baseline on the same environment stream
        frozen = BprReturnAgent(job.table)
        frozen_env = make_env(target, env_rng(job.seed, job.trial, target_id))
        frozen_rng = method_rng(job.seed, job.trial, Method.BPR_RETURN.value, target_id)
        frozen_log = EventLog(trial=job.trial, method=Method.BPR_RETURN.value, target_task=target_id)
        for episode in range(config.episodes):
            started = time.perf_counter()
            result = run_baseline_episode(frozen, frozen_env, job.library.policies, frozen_rng,
                                          config.discount, frozen_log, episode)
            wall = round((time.perf_counter() - started) * 1000.0, 3) if job.timing else 0.0
            rows.append(ResultRow(job.trial, Method.BPR_RETURN.value, target_id, episode, result.return_U, wall))
        events.extend(frozen_log.events)

    return rows, growth, events


def run_continual(
    config: ExperimentConfig,
    library_dir: Union[str, Path],
    out_dir: Union[str, Path],
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    timing: Optional[bool] = None,
) -> Dict[str, Path]:
    """Results CSV, library growth log, event stream and summaries for a continual sweep."""
    seed = config.seed if seed is None else seed
    workers = settings.BPRX_WORKERS if workers is None else workers
    timing = settings.BPRX_TIMING if timing is None else timing
    out_dir = Path(out_dir)

    kind: ModelKind = METHOD_MODEL_KIND[continual_method(config)]
    library = load_library(library_dir, kind, batch_size=config.layout.batch_size)
    table = baseline_table(config, library, seed)
    jobs = [ContinualJob(trial, seed, config, library, table, timing) for trial in range(config.trials)]
    outputs = map_jobs(run_continual_trial, jobs, workers)

    rows = sort_rows(r for trial_rows, _, _ in outputs for r in trial_rows)
    growth = [g for _, trial_growth, _ in outputs for g in trial_growth]
    events = [e for _, _, trial_events in outputs for e in trial_events]

    paths = {
        "results": write_results_csv(rows, out_dir / CONTINUAL_NAME),
        "events": write_events_jsonl(events, out_dir / "events.jsonl"),
        "growth": out_dir / GROWTH_NAME,
    }
    pd.DataFrame(growth, columns=GROWTH_COLUMNS).to_csv(paths["growth"], index=False, lineterminator="\n", encoding="utf-8")
    for path in write_summary(summarize_results(rows), out_dir):
        paths[path.stem] = path
    expansions = sum(1 for g in growth if g["expanded"])
    logger.info(f"Continual run finished: {expansions} expansions over {len(growth)} target visits")
    return paths
