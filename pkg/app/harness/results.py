"""
Result rows, their CSV form and the summaries built from them.
"""

from dataclasses import astuple, dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Union

import numpy as np
import pandas as pd

from app.utils.exceptions import MalformedResultsError, NoDataError

RESULT_COLUMNS = ["trial", "method", "target_task", "episode", "return", "wall_time_ms"]
CI_Z = 1.96


@dataclass(frozen=True)
class ResultRow:
    trial: int
    method: str
    target_task: str
    episode: int
    episode_return: float
    wall_time_ms: float = 0.0

    @property
    def sort_key(self):
        return (self.trial, self.method, self.target_task, self.episode)


def sort_rows(rows: Iterable[ResultRow]) -> List[ResultRow]:
    return sorted(rows, key=lambda r: r.sort_key)


def rows_to_frame(rows: Sequence[ResultRow]) -> pd.DataFrame:
    return pd.DataFrame([astuple(r) for r in rows], columns=RESULT_COLUMNS)


def write_results_csv(rows: Sequence[ResultRow], path: Union[str, Path], extra: Dict[str, Sequence] = None) -> Path:
    """UTF-8, LF line endings, shortest round-trip float text. ``extra`` columns go first."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = rows_to_frame(rows)
    for position, (name, values) in enumerate((extra or {}).items()):
        frame.insert(position, name, list(values))
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    return path


def read_results_frame(path: Union[str, Path]) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise NoDataError(f"no results file at {path}")
    try:
        frame = pd.read_csv(path, float_precision="round_trip", dtype={"method": str, "target_task": str})
    except pd.errors.EmptyDataError:
        raise NoDataError(f"{path} is empty")
    except pd.errors.ParserError as exc:
        raise MalformedResultsError(f"{path}: {exc}") from exc
    missing = [c for c in RESULT_COLUMNS if c not in frame.columns]
    if missing:
        raise MalformedResultsError(f"{path} lacks columns: {', '.join(missing)}")
    if frame.empty:
        return frame
    numeric = frame[["trial", "episode", "return", "wall_time_ms"]]
    if numeric.isna().any().any() or not all(pd.api.types.is_numeric_dtype(numeric[c]) for c in numeric):
        raise MalformedResultsError(f"{path} holds non-numeric or missing values")
    return frame


def read_results_csv(path: Union[str, Path]) -> List[ResultRow]:
    frame = read_results_frame(path)
    return [
        ResultRow(int(trial), str(method), str(target), int(episode), float(value), float(wall))
        for trial, method, target, episode, value, wall in frame[RESULT_COLUMNS].itertuples(index=False, name=None)
    ]


def _stderr(values: pd.Series) -> float:
    n = values.size
    return float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0


def _aggregate(frame: pd.DataFrame, by: List[str], column: str) -> pd.DataFrame:
    grouped = frame.groupby(by, sort=True)[column]
    table = grouped.agg(mean="mean", n="size").reset_index()
    table["stderr"] = grouped.agg(_stderr).to_numpy()
    table["ci95"] = CI_Z * table["stderr"]
    return table


@dataclass
class ResultSummary:
    per_episode: pd.DataFrame        # method, episode: mean/stderr/ci95 of the cross-target average
    per_method: pd.DataFrame         # method: mean ± stderr of per-trial all-episode averages
    per_target: pd.DataFrame         # method, target_task, episode: raw per-target statistics


def summarize_frame(frame: pd.DataFrame) -> ResultSummary:
    if frame.empty:
        raise NoDataError("no result rows to summarize")
    cross_target = frame.groupby(["trial", "method", "episode"], sort=True)["return"].mean().reset_index()
    per_trial = cross_target.groupby(["trial", "method"], sort=True)["return"].mean().reset_index()
    return ResultSummary(
        per_episode=_aggregate(cross_target, ["method", "episode"], "return"),
        per_method=_aggregate(per_trial, ["method"], "return"),
        per_target=_aggregate(frame, ["method", "target_task", "episode"], "return"),
    )


def summarize_results(rows: Sequence[ResultRow]) -> ResultSummary:
    """Per-episode means with 95% intervals across trials, per-method mean ± stderr."""
    return summarize_frame(rows_to_frame(rows))


def write_summary(summary: ResultSummary, directory: Union[str, Path], prefix: str = "summary") -> List[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in ("per_episode", "per_method", "per_target"):
        path = directory / f"{prefix}_{name}.csv"
        getattr(summary, name).to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
        paths.append(path)
    return paths
