"""
Trial orchestration: every (trial, method, target) runs K episodes on its
own environment and random streams, optionally fanned out to worker
processes, and the results are merged in a fixed order.
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from django.conf import settings

from app.baselines.agents import BaselineAgent, BprReturnAgent, OpsDrlAgent, PrDrlAgent, run_baseline_episode
from app.baselines.return_bpr import ReturnObservationTable, fit_return_table
from app.core.constants import METHOD_MODEL_KIND, Method, ModelKind
from app.engine.events import EventLog, write_events_jsonl
from app.engine.library import PolicyLibrary, load_library
from app.engine.reuse import PolicyReuseEngine
from app.environments.suites import make_env
from app.harness.config import ExperimentConfig
from app.harness.results import ResultRow, sort_rows, summarize_results, write_results_csv, write_summary
from app.harness.seeding import derive_seed, env_rng, method_rng
from app.utils.exceptions import MissingLibraryError

logger = logging.getLogger("bprx.harness")

RESULTS_NAME = "results.csv"
EVENTS_NAME = "events.jsonl"


@dataclass
class ExperimentOutput:
    rows: List[ResultRow]
    events: List[Dict[str, Any]] = field(default_factory=list)
    paths: Dict[str, Path] = field(default_factory=dict)


def _init_worker():
    import django
    django.setup()


def map_jobs(fn: Callable, jobs: Sequence, workers: int = 1) -> List:
    """Ordered results of ``fn`` over ``jobs``, in a process pool when workers > 1."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker) as pool:
        return list(pool.map(fn, jobs))


def _ms(started: float, timing: bool) -> float:
    return round((time.perf_counter() - started) * 1000.0, 3) if timing else 0.0


def make_baseline_agent(method: Method, n: int, config: ExperimentConfig, table: Optional[ReturnObservationTable]) -> BaselineAgent:
    if method is Method.BPR_RETURN:
        return BprReturnAgent(table)
    if method is Method.PR_DRL:
        return PrDrlAgent(n, config.pr_nu, config.pr_delta_nu)
    return OpsDrlAgent(n)


def library_kinds(config: ExperimentConfig) -> List[ModelKind]:
    kinds = {METHOD_MODEL_KIND[m] for m in config.methods if m in METHOD_MODEL_KIND}
    return sorted(kinds or {config.model_kinds[0]}, key=lambda k: k.value)


def load_libraries(config: ExperimentConfig, library_dir: Union[str, Path]) -> Dict[ModelKind, PolicyLibrary]:
    libraries = {
        kind: load_library(library_dir, kind, batch_size=config.layout.batch_size)
        for kind in library_kinds(config)
    }
    for kind, library in libraries.items():
        if not library.layout.same_shape(config.layout):
            raise MissingLibraryError(
                f"library at {library_dir} was fitted for layout {library.layout.to_dict()}, "
                f"experiment needs {config.layout.to_dict()}"
            )
    return libraries


def baseline_table(config: ExperimentConfig, library: PolicyLibrary, seed: int) -> ReturnObservationTable:
    return fit_return_table(
        library.tasks,
        library.policies,
        episodes=config.return_table_episodes,
        variance=config.return_variance,
        discount=config.discount,
        rng=np.random.default_rng(derive_seed(seed, 0, "return-table")),
    )


@dataclass(frozen=True)
class TrialJob:
    trial: int
    method: Method
    target: Any
    seed: int
    config: ExperimentConfig
    libraries: Dict[ModelKind, PolicyLibrary]
    table: Optional[ReturnObservationTable]
    timing: bool


def run_job(job: TrialJob) -> Tuple[List[ResultRow], List[Dict[str, Any]]]:
    """K episodes of one method on one target in one trial."""
    config, target_id = job.config, job.target.task_id
    env = make_env(job.target, env_rng(job.seed, job.trial, target_id))
    rng = method_rng(job.seed, job.trial, job.method.value, target_id)
    events = EventLog(trial=job.trial, method=job.method.value, target_task=target_id)
    rows: List[ResultRow] = []

    if job.method in METHOD_MODEL_KIND:
        library = job.libraries[METHOD_MODEL_KIND[job.method]]
        engine = PolicyReuseEngine(library, config.layout, config.reuse, rng)
        run = engine.run_target(env, config.episodes, events=events)
        for episode, (result, wall) in enumerate(zip(run.episodes, run.wall_times_ms)):
            rows.append(ResultRow(job.trial, job.method.value, target_id, episode, result.return_U,
                                  round(wall, 3) if job.timing else 0.0))
        return rows, events.events

    library = next(iter(job.libraries.values()))
    agent = make_baseline_agent(job.method, library.n, config, job.table)
    for episode in range(config.episodes):
        started = time.perf_counter()
        result = run_baseline_episode(agent, env, library.policies, rng, config.discount, events, episode)
        rows.append(ResultRow(job.trial, job.method.value, target_id, episode, result.return_U, _ms(started, job.timing)))
    return rows, events.events


def run_trials(
    config: ExperimentConfig,
    libraries: Dict[ModelKind, PolicyLibrary],
    seed: int,
    methods: Optional[Sequence[Method]] = None,
    workers: int = 1,
    timing: bool = True,
    trials: Optional[Sequence[int]] = None,
) -> ExperimentOutput:
    """Every (trial, method, target) job; ``trials`` restricts the trial indices run."""
    methods = list(methods or config.methods)
    trials = list(range(config.trials) if trials is None else trials)
    table = None
    if Method.BPR_RETURN in methods:
        table = baseline_table(config, next(iter(libraries.values())), seed)
    jobs = [
        TrialJob(trial, method, target, seed, config, libraries, table, timing)
        for trial in trials
        for method in methods
        for target in config.target_tasks
    ]
    logger.info(f"Running {len(jobs)} jobs ({len(trials)} trials x {len(methods)} methods x "
                f"{len(config.target_tasks)} targets) on {workers} worker(s)")
    outputs = map_jobs(run_job, jobs, workers)

    rows = sort_rows(r for job_rows, _ in outputs for r in job_rows)
    ranked = sorted(range(len(jobs)), key=lambda i: (jobs[i].trial, jobs[i].method.value, jobs[i].target.task_id))
    events = [e for i in ranked for e in outputs[i][1]]
    return ExperimentOutput(rows=rows, events=events)


def run_experiment(
    config: ExperimentConfig,
    library_dir: Union[str, Path],
    out_dir: Union[str, Path],
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    timing: Optional[bool] = None,
) -> ExperimentOutput:
    """Full trials x methods x targets sweep written as CSV, JSONL and summaries."""
    seed = config.seed if seed is None else seed
    workers = settings.BPRX_WORKERS if workers is None else workers
    timing = settings.BPRX_TIMING if timing is None else timing
    out_dir = Path(out_dir)

    libraries = load_libraries(config, library_dir)
    output = run_trials(config, libraries, seed, workers=workers, timing=timing)

    output.paths["results"] = write_results_csv(output.rows, out_dir / RESULTS_NAME)
    output.paths["events"] = write_events_jsonl(output.events, out_dir / EVENTS_NAME)
    for path in write_summary(summarize_results(output.rows), out_dir):
        output.paths[path.stem] = path
    logger.info(f"Wrote {len(output.rows)} result rows to {output.paths['results']}")
    return output
