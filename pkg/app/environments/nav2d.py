"""
Continuous 2-D navigation: move from a start point to a goal with unit-box
actions. Tasks differ only in their goal, i.e. in the reward function.
"""
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from app.environments.base import Environment

GOAL_RADIUS = 0.5
MAX_STEPS = 100
CONTROL_COST = 0.1


def _fmt(value: float) -> str:
    return f"{float(value):g}"


@dataclass(frozen=True)
class Nav2dTask:
    goal: Tuple[float, float]
    start: Tuple[float, float] = (0.0, 0.0)
    goal_radius: float = GOAL_RADIUS
    max_steps: int = MAX_STEPS
    control_cost: float = CONTROL_COST

    def __post_init__(self):
        object.__setattr__(self, "goal", tuple(float(v) for v in self.goal))
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        if len(self.goal) != 2 or len(self.start) != 2:
            raise ValueError("nav2d goal and start must be 2-D points")
        if not self.goal_radius > 0:
            raise ValueError(f"goal_radius must be positive, got {self.goal_radius}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")

    @property
    def domain(self) -> str:
        return "nav2d"

    @property
    def task_id(self) -> str:
        return f"nav2d@{_fmt(self.goal[0])}:{_fmt(self.goal[1])}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "domain": self.domain,
            "goal": list(self.goal),
            "start": list(self.start),
            "goal_radius": self.goal_radius,
            "max_steps": self.max_steps,
            "control_cost": self.control_cost,
        }


def clip_action(action: Sequence[float]) -> np.ndarray:
    return np.clip(np.asarray(action, dtype=float).reshape(2), -1.0, 1.0)


def nav2d_step(state, action, task: Nav2dTask) -> Tuple[np.ndarray, float, bool]:
    """
    next = state + clip(action); reward = -‖next - goal‖ - c·‖clip(action)‖²;
    done once within goal_radius of the goal.
    """
    a = clip_action(action)
    next_state = np.asarray(state, dtype=float) + a
    distance = float(np.linalg.norm(next_state - np.asarray(task.goal)))
    reward = -distance - task.control_cost * float(a @ a)
    return next_state, reward, distance < task.goal_radius


class Nav2dEnv(Environment):
    state_dim = 2
    action_dim = 2
    discrete = False

    def __init__(self, task: Nav2dTask, rng: Optional[np.random.Generator] = None):
        super().__init__(task, rng)

    def reset(self) -> np.ndarray:
        return self._begin(np.asarray(self.task.start))

    def _transition(self, action):
        return nav2d_step(self.state, action, self.task)

    def encode_action(self, action) -> np.ndarray:
        return clip_action(action)

    def sample_action(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, size=2)
