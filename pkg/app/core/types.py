"""Domain value types shared by the engine, the baselines and the harness."""
from dataclasses import dataclass, field
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from app.core.constants import NORMALIZATION_TOL, SignalMode
from app.utils.exceptions import DimensionMismatchError, InvalidBeliefError


def _as_vector(value, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float)).copy()
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatchError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TransitionSample:
    """One (s, a, r, s') tuple. Discrete actions arrive already one-hot encoded."""

    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "s", _as_vector(self.s, "s"))
        object.__setattr__(self, "a", _as_vector(self.a, "a"))
        object.__setattr__(self, "s_next", _as_vector(self.s_next, "s_next"))
        r = float(self.r)
        if not np.isfinite(r):
            raise DimensionMismatchError("reward must be finite")
        object.__setattr__(self, "r", r)
        if self.s.shape != self.s_next.shape:
            raise DimensionMismatchError(
                f"s has dimension {self.s.size} but s_next has {self.s_next.size}"
            )


@dataclass(frozen=True)
class SignalLayout:
    """
    Split of a transition into model input x = (s, a) and output y.

    ``batch_size`` is N0, the number of samples folded into one belief update.
    """

    mode: SignalMode
    state_dim: int
    action_dim: int
    batch_size: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mode", SignalMode(self.mode))
        if self.state_dim < 1 or self.action_dim < 1:
            raise DimensionMismatchError("state and action dimensions must be positive")
        if self.batch_size < 1:
            raise DimensionMismatchError(f"batch size must be >= 1, got {self.batch_size}")

    @property
    def input_dim(self) -> int:
        return self.state_dim + self.action_dim

    @property
    def output_dim(self) -> int:
        if self.mode is SignalMode.SAR:
            return 1
        if self.mode is SignalMode.SAS:
            return self.state_dim
        return 1 + self.state_dim

    def same_shape(self, other: "SignalLayout") -> bool:
        """Layouts agree on everything a fitted model depends on (N0 may differ)."""
        return (
            self.mode is other.mode
            and self.state_dim == other.state_dim
            and self.action_dim == other.action_dim
        )

    def input_of(self, sample: TransitionSample) -> np.ndarray:
        if sample.s.size != self.state_dim or sample.a.size != self.action_dim:
            raise DimensionMismatchError(
                f"sample has (s, a) dims ({sample.s.size}, {sample.a.size}), "
                f"layout expects ({self.state_dim}, {self.action_dim})"
            )
        return np.concatenate([sample.s, sample.a])

    def output_of(self, sample: TransitionSample) -> np.ndarray:
        if self.mode is SignalMode.SAR:
            return np.array([sample.r])
        if self.mode is SignalMode.SAS:
            return np.array(sample.s_next)
        return np.concatenate([[sample.r], sample.s_next])

    def inputs(self, samples: Sequence[TransitionSample]) -> np.ndarray:
        if not samples:
            return np.empty((0, self.input_dim))
        return np.vstack([self.input_of(s) for s in samples])

    def outputs(self, samples: Sequence[TransitionSample]) -> np.ndarray:
        if not samples:
            return np.empty((0, self.output_dim))
        return np.vstack([self.output_of(s) for s in samples])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode.value,
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "state_dim": self.state_dim,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], batch_size: int = 1) -> "SignalLayout":
        state_dim = int(data["state_dim"])
        layout = cls(
            mode=SignalMode(data["mode"]),
            state_dim=state_dim,
            action_dim=int(data["input_dim"]) - state_dim,
            batch_size=batch_size,
        )
        if layout.output_dim != int(data["output_dim"]):
            raise DimensionMismatchError(
                f"layout output_dim {data['output_dim']} does not match mode {layout.mode.value}"
            )
        return layout


@dataclass(frozen=True, eq=False)
class Belief:
    """Probability vector over the library tasks."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float)).copy()
        if w.ndim != 1 or w.size == 0:
            raise InvalidBeliefError("belief must be a non-empty vector")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InvalidBeliefError(f"belief weights must be finite and non-negative: {w}")
        if abs(w.sum() - 1.0) > NORMALIZATION_TOL:
            raise InvalidBeliefError(f"belief weights sum to {w.sum()!r}, expected 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return int(self.weights.size)

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, index: int) -> float:
        return float(self.weights[index])

    def as_list(self):
        return [float(w) for w in self.weights]


@dataclass(frozen=True)
class DiscountConfig:
    gamma: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")


@dataclass(frozen=True)
class EpisodeResult:
    return_U: float
    steps: int
    reached_goal: bool
    selected_policy_trace: Tuple[int, ...] = field(default_factory=tuple)
