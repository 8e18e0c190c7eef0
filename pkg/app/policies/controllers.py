"""
Scripted source policies: a saturated proportional controller for nav2d and
a bang-bang linear-feedback balancer for cart-pole.
"""
from typing import Optional, Sequence

import numpy as np

from app.environments.cartpole import CartPoleTask
from app.environments.nav2d import Nav2dTask
from app.policies.base import Policy, register_policy
from app.utils.exceptions import UnknownDomainError

# Feedback on (x, x_dot, theta, theta_dot); frozen so balancing results reproduce.
CARTPOLE_GAINS = (1.0, 1.5, 18.0, 3.0)
# Score offset per newton of known disturbance; pushes against F'.
CARTPOLE_BIAS_PER_NEWTON = -0.02


def nav_controller_act(state, goal, gain: float = 1.0) -> np.ndarray:
    """clip(gain · (goal - state)) per component."""
    delta = np.asarray(goal, dtype=float) - np.asarray(state, dtype=float)
    return np.clip(gain * delta, -1.0, 1.0)


def cartpole_controller_act(
    state,
    disturbance: float,
    gains: Sequence[float] = CARTPOLE_GAINS,
    bias_per_newton: float = CARTPOLE_BIAS_PER_NEWTON,
) -> int:
    """Push right (1) when the feedback score is positive, else left (0)."""
    score = float(np.dot(gains, np.asarray(state, dtype=float))) + bias_per_newton * disturbance
    return 1 if score > 0 else 0


@register_policy("nav-controller")
class NavController(Policy):
    def __init__(self, goal, gain: float = 1.0):
        self.goal = tuple(float(v) for v in goal)
        self.gain = float(gain)

    def act(self, state, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        return nav_controller_act(state, self.goal, self.gain)

    def params(self):
        return {"goal": list(self.goal), "gain": self.gain}


@register_policy("cartpole-controller")
class CartPoleController(Policy):
    def __init__(self, disturbance: float, gains=CARTPOLE_GAINS, bias_per_newton: float = CARTPOLE_BIAS_PER_NEWTON):
        self.disturbance = float(disturbance)
        self.gains = tuple(float(g) for g in gains)
        self.bias_per_newton = float(bias_per_newton)

    def act(self, state, rng: Optional[np.random.Generator] = None) -> int:
        return cartpole_controller_act(state, self.disturbance, self.gains, self.bias_per_newton)

    def params(self):
        return {"disturbance": self.disturbance, "gains": list(self.gains), "bias_per_newton": self.bias_per_newton}


def scripted_policy_for(task, **kwargs) -> Policy:
    """The hand-written controller that solves ``task``."""
    if isinstance(task, Nav2dTask):
        return NavController(task.goal, **kwargs)
    if isinstance(task, CartPoleTask):
        return CartPoleController(task.disturbance, **kwargs)
    raise UnknownDomainError(f"no scripted controller for {type(task).__name__}")
