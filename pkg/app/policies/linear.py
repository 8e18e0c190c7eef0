"""Linear policy families searched by the cross-entropy learner."""
from typing import Optional

import numpy as np

from app.policies.base import Policy, register_policy


@register_policy("linear-gaussian")
class LinearGaussianPolicy(Policy):
    """a = clip(W s + b + stddev · noise, low, high)"""

    def __init__(self, W, b, stddev: float = 0.0, low: float = -1.0, high: float = 1.0):
        self.W = np.atleast_2d(np.asarray(W, dtype=float))
        self.b = np.asarray(b, dtype=float).reshape(self.W.shape[0])
        if stddev < 0:
            raise ValueError(f"stddev must be >= 0, got {stddev}")
        if not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b))):
            raise ValueError("policy parameters must be finite")
        self.stddev = float(stddev)
        self.low = float(low)
        self.high = float(high)
        self.deterministic = self.stddev == 0.0

    def act(self, state, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        action = self.W @ np.asarray(state, dtype=float) + self.b
        if self.stddev > 0 and rng is not None:
            action = action + self.stddev * rng.standard_normal(action.shape)
        return np.clip(action, self.low, self.high)

    def params(self):
        return {"W": self.W.tolist(), "b": self.b.tolist(), "stddev": self.stddev, "low": self.low, "high": self.high}


@register_policy("linear-score")
class LinearScorePolicy(Policy):
    """Discrete action with the highest linear score W s + b; ties to the smallest index."""

    def __init__(self, W, b):
        self.W = np.atleast_2d(np.asarray(W, dtype=float))
        self.b = np.asarray(b, dtype=float).reshape(self.W.shape[0])

    def act(self, state, rng: Optional[np.random.Generator] = None) -> int:
        return int(np.argmax(self.W @ np.asarray(state, dtype=float) + self.b))

    def params(self):
        return {"W": self.W.tolist(), "b": self.b.tolist()}


class LinearGaussianPolicyClass:
    """Flat parameter vector <-> LinearGaussianPolicy for a continuous action box."""

    def __init__(self, state_dim: int, action_dim: int, stddev: float = 0.0):
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.stddev = stddev

    @property
    def n_params(self) -> int:
        return self.action_dim * (self.state_dim + 1)

    def build(self, theta) -> LinearGaussianPolicy:
        theta = np.asarray(theta, dtype=float)
        split = self.action_dim * self.state_dim
        return LinearGaussianPolicy(theta[:split].reshape(self.action_dim, self.state_dim), theta[split:], self.stddev)


class LinearScorePolicyClass:
    def __init__(self, state_dim: int, n_actions: int):
        self.state_dim = state_dim
        self.n_actions = n_actions

    @property
    def n_params(self) -> int:
        return self.n_actions * (self.state_dim + 1)

    def build(self, theta) -> LinearScorePolicy:
        theta = np.asarray(theta, dtype=float)
        split = self.n_actions * self.state_dim
        return LinearScorePolicy(theta[:split].reshape(self.n_actions, self.state_dim), theta[split:])


def policy_class_for(env):
    if env.discrete:
        return LinearScorePolicyClass(env.state_dim, env.n_actions)
    return LinearGaussianPolicyClass(env.state_dim, env.action_dim)
