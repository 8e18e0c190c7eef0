"""
Cart-pole with a constant disturbance force F' on the cart.

Classic Barto–Sutton equations of motion integrated with one explicit Euler
step per control interval.
"""
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from app.environments.base import Environment
from app.utils.exceptions import InvalidActionError


@dataclass(frozen=True)
class CartPoleTask:
    disturbance: float = 0.0
    gravity: float = 9.8
    masscart: float = 1.0
    masspole: float = 0.1
    length: float = 0.5          # half the pole length
    force_mag: float = 10.0
    tau: float = 0.02
    reward_angle_deg: float = 12.0
    theta_threshold_deg: float = 12.0
    x_threshold: float = 2.4
    max_steps: int = 100
    reset_noise: float = 0.0       # half-width of the uniform start-state draw

    def __post_init__(self):
        for name in ("gravity", "masscart", "masspole", "length", "tau"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.reset_noise < 0:
            raise ValueError("reset_noise must be >= 0")

    @property
    def domain(self) -> str:
        return "cartpole"

    @property
    def task_id(self) -> str:
        return f"cartpole@{self.disturbance:g}"

    @property
    def reward_angle(self) -> float:
        return math.radians(self.reward_angle_deg)

    @property
    def theta_threshold(self) -> float:
        return math.radians(self.theta_threshold_deg)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "domain": self.domain,
            "disturbance": self.disturbance,
            "gravity": self.gravity,
            "masscart": self.masscart,
            "masspole": self.masspole,
            "length": self.length,
            "force_mag": self.force_mag,
            "tau": self.tau,
            "reward_angle_deg": self.reward_angle_deg,
            "theta_threshold_deg": self.theta_threshold_deg,
            "x_threshold": self.x_threshold,
            "max_steps": self.max_steps,
            "reset_noise": self.reset_noise,
        }


def applied_force(action: int, task: CartPoleTask) -> float:
    if action not in (0, 1):
        raise InvalidActionError(f"cart-pole action must be 0 or 1, got {action!r}")
    return (task.force_mag if action == 1 else -task.force_mag) + task.disturbance


def cartpole_accelerations(state, force: float, task: CartPoleTask) -> Tuple[float, float]:
    """(cart acceleration, pole angular acceleration) under a net horizontal force."""
    _, _, theta, theta_dot = (float(v) for v in state)
    costheta = math.cos(theta)
    sintheta = math.sin(theta)
    total_mass = task.masspole + task.masscart
    polemass_length = task.masspole * task.length
    temp = (force + polemass_length * theta_dot ** 2 * sintheta) / total_mass
    thetaacc = (task.gravity * sintheta - costheta * temp) / (
        task.length * (4.0 / 3.0 - task.masspole * costheta ** 2 / total_mass)
    )
    xacc = temp - polemass_length * thetaacc * costheta / total_mass
    return xacc, thetaacc


def cartpole_step(state, action: int, task: CartPoleTask) -> Tuple[np.ndarray, float, bool]:
    """
    One Euler step. Reward 1 while |theta| stays under the reward angle;
    done once the pole or the cart leaves its bounds (the step budget is
    enforced by the environment).
    """
    action = int(action) if isinstance(action, (int, np.integer)) else action
    force = applied_force(action, task)
    x, x_dot, theta, theta_dot = (float(v) for v in state)
    xacc, thetaacc = cartpole_accelerations(state, force, task)
    x = x + task.tau * x_dot
    x_dot = x_dot + task.tau * xacc
    theta = theta + task.tau * theta_dot
    theta_dot = theta_dot + task.tau * thetaacc
    next_state = np.array([x, x_dot, theta, theta_dot])
    reward = 1.0 if abs(theta) < task.reward_angle else 0.0
    done = abs(theta) > task.theta_threshold or abs(x) > task.x_threshold
    return next_state, reward, done


class CartPoleEnv(Environment):
    state_dim = 4
    action_dim = 2          # one-hot encoded for the dynamics models
    discrete = True
    n_actions = 2

    def __init__(self, task: CartPoleTask, rng: Optional[np.random.Generator] = None):
        super().__init__(task, rng)

    @property
    def deterministic(self) -> bool:
        return self.task.reset_noise == 0

    def reset(self) -> np.ndarray:
        if self.task.reset_noise > 0:
            start = self.rng.uniform(-self.task.reset_noise, self.task.reset_noise, size=4)
        else:
            start = np.zeros(4)
        return self._begin(start)

    def _transition(self, action):
        return cartpole_step(self.state, action, self.task)

    def goal_reached(self, terminal: bool, done: bool) -> bool:
        # success means surviving the whole step budget
        return done and not terminal

    def encode_action(self, action) -> np.ndarray:
        action = int(action)
        if action not in (0, 1):
            raise InvalidActionError(f"cart-pole action must be 0 or 1, got {action!r}")
        one_hot = np.zeros(2)
        one_hot[action] = 1.0
        return one_hot

    def sample_action(self, rng: np.random.Generator) -> int:
        return int(rng.integers(0, 2))
