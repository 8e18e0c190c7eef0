"""Policy interface and (de)serialization registry."""
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, Optional

import numpy as np

from app.utils.exceptions import ModelFormatError

POLICY_REGISTRY: Dict[str, Callable[[Dict[str, Any]], "Policy"]] = {}


def register_policy(kind: str):
    def decorator(cls):
        cls.kind = kind
        POLICY_REGISTRY[kind] = cls.from_dict
        return cls
    return decorator


class Policy(ABC):
    """Maps a state to an action valid for the bound environment."""

    kind: str = "policy"
    deterministic: bool = True

    @abstractmethod
    def act(self, state, rng: Optional[np.random.Generator] = None):
        ...

    @abstractmethod
    def params(self) -> Dict[str, Any]:
        ...

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, **self.params()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Policy":
        return cls(**data)

    def __repr__(self):
        return f"{type(self).__name__}({self.params()})"


def policy_from_dict(data: Dict[str, Any]) -> Policy:
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in POLICY_REGISTRY:
        raise ModelFormatError(f"unknown policy kind {kind!r}")
    return POLICY_REGISTRY[kind](data)
