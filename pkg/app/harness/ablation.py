"""
Sample-size ablation: refit the library at every size and rerun the model-based
methods. Every trial gets its own source data, so the intervals measure how much
the outcome depends on which transitions were collected.
"""
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

import pandas as pd
from django.conf import settings

from app.core.constants import METHOD_MODEL_KIND, Method
from app.harness.config import ExperimentConfig
from app.harness.results import CI_Z, ResultRow, rows_to_frame, summarize_frame, write_results_csv
from app.harness.runner import load_libraries, run_trials
from app.harness.sources import fit_sources
from app.utils.exceptions import ConfigError

logger = logging.getLogger("bprx.harness")

ABLATION_NAME = "ablation.csv"
ABLATION_SUMMARY_NAME = "ablation_summary.csv"


def ablation_methods(config: ExperimentConfig) -> List[Method]:
    methods = [m for m in config.methods if m in METHOD_MODEL_KIND]
    return methods or [Method.OURS_GP]


def run_ablation(
    config: ExperimentConfig,
    sizes: Optional[Sequence[int]],
    out_dir: Union[str, Path],
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    timing: Optional[bool] = None,
) -> pd.DataFrame:
    """
    One result block per sample size, written with a leading ``sample_size``
    column, plus a per-(size, method) summary. Returns the summary.
    """
    sizes = list(config.ablation_sizes if sizes is None else sizes)
    if not sizes:
        raise ConfigError("ablation needs at least one sample size")
    if any(s < 1 for s in sizes):
        raise ConfigError(f"sample sizes must be positive, got {sizes}")
    seed = config.seed if seed is None else seed
    workers = settings.BPRX_WORKERS if workers is None else workers
    timing = settings.BPRX_TIMING if timing is None else timing
    out_dir = Path(out_dir)

    methods = ablation_methods(config)
    config = config.with_overrides(methods=tuple(methods), model_kinds=tuple(METHOD_MODEL_KIND[m] for m in methods))
    all_rows: List[ResultRow] = []
    size_column: List[int] = []
    summaries = []
    for size in sizes:
        rows: List[ResultRow] = []
        for trial in range(config.trials):
            library_dir = out_dir / "libraries" / f"size-{size}" / f"trial-{trial}"
            fit_sources(config, library_dir, samples=size, seed=seed, trial=trial)
            output = run_trials(config, load_libraries(config, library_dir), seed, methods, workers, timing, [trial])
            rows.extend(output.rows)
        all_rows.extend(rows)
        size_column.extend([size] * len(rows))

        per_method = summarize_frame(rows_to_frame(rows)).per_method
        per_method.insert(0, "sample_size", size)
        summaries.append(per_method)
        for _, row in per_method.iterrows():
            logger.info(f"size {size} {row['method']}: {row['mean']:.3f} ± {CI_Z * row['stderr']:.3f}")

    write_results_csv(all_rows, out_dir / ABLATION_NAME, extra={"sample_size": size_column})
    summary = pd.concat(summaries, ignore_index=True)
    summary.to_csv(out_dir / ABLATION_SUMMARY_NAME, index=False, lineterminator="\n", encoding="utf-8")
    return summary
