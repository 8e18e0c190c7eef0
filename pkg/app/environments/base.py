"""Environment interface shared by the simulators."""
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Tuple

import numpy as np

from app.core.types import TransitionSample


class Environment(ABC):
    """
    Single-owner episodic simulator. ``step`` returns (next_state, reward, done)
    where done also fires when the step budget M is spent.
    """

    state_dim: int
    action_dim: int
    discrete: bool = False

    def __init__(self, task, rng: Optional[np.random.Generator] = None):
        self.task = task
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.state: Optional[np.ndarray] = None
        self.steps = 0
        self.reached_goal = False

    @property
    def max_steps(self) -> int:
        return self.task.max_steps

    @property
    def deterministic(self) -> bool:
        """True when reset and transitions consume no randomness."""
        return True

    @abstractmethod
    def reset(self) -> np.ndarray:
        ...

    @abstractmethod
    def _transition(self, action) -> Tuple[np.ndarray, float, bool]:
        ...

    @abstractmethod
    def encode_action(self, action) -> np.ndarray:
        """Action as the vector fed to dynamics models."""

    @abstractmethod
    def sample_action(self, rng: np.random.Generator):
        """Uniform random action."""

    def step(self, action) -> Tuple[np.ndarray, float, bool]:
        if self.state is None:
            raise RuntimeError("reset() must be called before step()")
        next_state, reward, terminal = self._transition(action)
        self.steps += 1
        self.state = next_state
        done = bool(terminal) or self.steps >= self.max_steps
        self.reached_goal = self.goal_reached(bool(terminal), done)
        return next_state.copy(), float(reward), done

    def goal_reached(self, terminal: bool, done: bool) -> bool:
        """Whether the episode counts as a success; by default reaching a terminal state."""
        return terminal

    def transition_sample(self, state, action, reward, next_state) -> TransitionSample:
        return TransitionSample(s=state, a=self.encode_action(action), r=reward, s_next=next_state)

    def describe(self) -> Dict[str, Any]:
        return self.task.to_dict()

    def _begin(self, state: np.ndarray) -> np.ndarray:
        self.state = np.asarray(state, dtype=float).copy()
        self.steps = 0
        self.reached_goal = False
        return self.state.copy()
