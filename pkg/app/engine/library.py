"""
Policy library: ordered (task, policy, dynamics model) entries.

A library value never changes once built. Expansion returns a new library
that shares every existing entry, so earlier models keep their exact state.
On disk a library is a directory holding ``manifest.json`` and one JSON
model file per entry and model kind.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from app.core.constants import ModelKind
from app.core.types import SignalLayout
from app.dynamics.base import DynamicsModel
from app.dynamics.storage import load_model, save_model
from app.environments.suites import task_from_dict
from app.policies.base import Policy, policy_from_dict
from app.utils.exceptions import (
    DuplicateTaskError,
    EmptyLibraryError,
    LayoutMismatchError,
    MissingLibraryError,
    ModelFormatError,
)

logger = logging.getLogger("bprx.engine")

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1


@dataclass(frozen=True, eq=False)
class LibraryEntry:
    task: Any
    policy: Policy
    model: DynamicsModel
    n_samples: int = 0

    @property
    def task_id(self) -> str:
        return self.task.task_id


@dataclass(frozen=True, eq=False)
class PolicyLibrary:
    entries: Tuple[LibraryEntry, ...]
    layout: SignalLayout
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        seen = set()
        for entry in entries:
            if entry.task_id in seen:
                raise DuplicateTaskError(f"task '{entry.task_id}' appears twice in the library")
            seen.add(entry.task_id)
            self._check_layout(entry.model)

    def _check_layout(self, model: DynamicsModel):
        if model.layout is not None and not model.layout.same_shape(self.layout):
            raise LayoutMismatchError(
                f"model layout {model.layout.to_dict()} does not match library layout {self.layout.to_dict()}"
            )
        if model.input_dim != self.layout.input_dim or model.output_dim != self.layout.output_dim:
            raise LayoutMismatchError(
                f"model maps {model.input_dim} -> {model.output_dim}, library layout needs "
                f"{self.layout.input_dim} -> {self.layout.output_dim}"
            )

    @property
    def n(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, index: int) -> LibraryEntry:
        return self.entries[index]

    @property
    def task_ids(self) -> List[str]:
        return [e.task_id for e in self.entries]

    @property
    def models(self) -> List[DynamicsModel]:
        return [e.model for e in self.entries]

    @property
    def policies(self) -> List[Policy]:
        return [e.policy for e in self.entries]

    @property
    def tasks(self) -> list:
        return [e.task for e in self.entries]

    def require_entries(self):
        if not self.entries:
            raise EmptyLibraryError("the policy library has no entries")

    def with_entry(self, entry: LibraryEntry) -> "PolicyLibrary":
        if entry.task_id in self.task_ids:
            raise DuplicateTaskError(f"task '{entry.task_id}' is already in the library")
        self._check_layout(entry.model)
        return PolicyLibrary(self.entries + (entry,), self.layout, dict(self.metadata))


def _model_filename(index: int, task_id: str, kind: ModelKind) -> str:
    safe = task_id.replace("@", "_").replace(":", "_")
    return f"{index:02d}-{safe}-{kind.value}.json"


def save_library(
    entries: Sequence[Dict[str, Any]],
    layout: SignalLayout,
    directory: Union[str, Path],
    seed: Optional[int] = None,
) -> Path:
    """
    Write a manifest plus model files. Each item of ``entries`` is
    {"task", "policy", "models": {ModelKind: model}, "n_samples"}.
    """
    directory = Path(directory)
    (directory / "models").mkdir(parents=True, exist_ok=True)
    manifest_entries = []
    for index, item in enumerate(entries):
        task = item["task"]
        files = {}
        for kind, model in sorted(item["models"].items(), key=lambda kv: ModelKind(kv[0]).value):
            kind = ModelKind(kind)
            relative = f"models/{_model_filename(index, task.task_id, kind)}"
            save_model(model, directory / relative)
            files[kind.value] = relative
        manifest_entries.append({
            "task_id": task.task_id,
            "task": task.to_dict(),
            "policy": item["policy"].to_dict(),
            "model_files": files,
            "n_samples": int(item.get("n_samples", 0)),
        })
    manifest = {
        "version": MANIFEST_VERSION,
        "layout": layout.to_dict(),
        "seed": seed,
        "entries": manifest_entries,
    }
    path = directory / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"Saved library of {len(manifest_entries)} entries to {directory}")
    return path


def read_manifest(directory: Union[str, Path]) -> Dict[str, Any]:
    path = Path(directory) / MANIFEST_NAME
    if not path.is_file():
        raise MissingLibraryError(f"no library manifest at {path}; run fit_sources first")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: manifest is not valid JSON: {exc}") from exc
    if manifest.get("version") != MANIFEST_VERSION:
        raise ModelFormatError(f"{path}: unsupported manifest version {manifest.get('version')!r}")
    return manifest


def load_library(directory: Union[str, Path], kind: Union[ModelKind, str] = ModelKind.GP, batch_size: int = 1) -> PolicyLibrary:
    """Library whose entries carry the ``kind`` model of every source task."""
    directory = Path(directory)
    kind = ModelKind(kind)
    manifest = read_manifest(directory)
    layout = SignalLayout.from_dict(manifest["layout"], batch_size=batch_size)
    entries = []
    for item in manifest["entries"]:
        files = item.get("model_files", {})
        if kind.value not in files:
            raise MissingLibraryError(
                f"library at {directory} has no {kind.value} model for task '{item['task_id']}'"
            )
        entries.append(LibraryEntry(
            task=task_from_dict(item["task"]),
            policy=policy_from_dict(item["policy"]),
            model=load_model(directory / files[kind.value]),
            n_samples=int(item.get("n_samples", 0)),
        ))
    library = PolicyLibrary(tuple(entries), layout, {"seed": manifest.get("seed"), "kind": kind.value})
    library.require_entries()
    return library
