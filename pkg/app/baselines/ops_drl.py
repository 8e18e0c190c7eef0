"""Optimal policy selection as a UCB bandit over the source policies."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class OpsState:
    W: np.ndarray
    V: np.ndarray

    @classmethod
    def start(cls, n: int) -> "OpsState":
        # gains start at zero instead of pre-running every policy on the target
        if n < 1:
            raise ValueError("OPS-DRL needs at least one policy")
        return cls(W=np.zeros(n), V=np.zeros(n, dtype=int))


def ops_scores(state: OpsState) -> np.ndarray:
    """W_j + sqrt(2 ln(Σ V + 1) / (V_j + 1))"""
    V = np.asarray(state.V, dtype=float)
    return np.asarray(state.W, dtype=float) + np.sqrt(2.0 * np.log(V.sum() + 1.0) / (V + 1.0))


def ops_select(state: OpsState) -> int:
    return int(np.argmax(ops_scores(state)))


def ops_update(state: OpsState, chosen: int, episode_return: float) -> OpsState:
    W = np.array(state.W, dtype=float)
    V = np.array(state.V, dtype=int)
    W[chosen] = (W[chosen] * V[chosen] + episode_return) / (V[chosen] + 1)
    V[chosen] += 1
    return OpsState(W=W, V=V)
