"""Structured event stream shared by the engine and the baselines."""
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

STEP = "step"
EPISODE_END = "episode-end"
PHASE_SWITCH = "phase-switch"
EXPANSION = "expansion"


def make_event(
    event: str,
    trial: int,
    episode: int,
    step: int,
    selected_policy: Optional[int],
    belief: Optional[Sequence[float]],
    reward: Optional[float],
    phase: str,
    **extra: Any,
) -> Dict[str, Any]:
    record = {
        "event": event,
        "trial": int(trial),
        "episode": int(episode),
        "step": int(step),
        "selected_policy": None if selected_policy is None else int(selected_policy),
        "belief": None if belief is None else [float(b) for b in belief],
        "reward": None if reward is None else float(reward),
        "phase": phase,
    }
    record.update(extra)
    return record


class EventLog:
    """Append-only list of event dicts; ``context`` fields go into every record."""

    def __init__(self, **context: Any):
        self.context = context
        self.events: List[Dict[str, Any]] = []

    def emit(self, event: str, **fields: Any) -> Dict[str, Any]:
        record = make_event(event, **{**self.context, **fields})
        self.events.append(record)
        return record

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)


def write_events_jsonl(events: Iterable[Dict[str, Any]], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for record in events:
            handle.write(json.dumps(record, sort_keys=True, allow_nan=False))
            handle.write("\n")
    return path
