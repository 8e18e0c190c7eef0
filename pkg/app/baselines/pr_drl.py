"""Probabilistic policy reuse: softmax over reuse gains with a rising temperature."""
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import softmax

DEFAULT_NU = 0.0
DEFAULT_DELTA_NU = 0.05


@dataclass(frozen=True, eq=False)
class PrDrlState:
    W: np.ndarray
    V: np.ndarray
    nu: float = DEFAULT_NU
    delta_nu: float = DEFAULT_DELTA_NU

    @classmethod
    def start(cls, n: int, nu: float = DEFAULT_NU, delta_nu: float = DEFAULT_DELTA_NU) -> "PrDrlState":
        if n < 1:
            raise ValueError("PR-DRL needs at least one policy")
        if nu < 0:
            raise ValueError(f"temperature must be >= 0, got {nu}")
        return cls(W=np.zeros(n), V=np.zeros(n, dtype=int), nu=float(nu), delta_nu=float(delta_nu))


def pr_probabilities(state: PrDrlState) -> np.ndarray:
    # softmax subtracts the max internally
    return softmax(state.nu * np.asarray(state.W, dtype=float))


def pr_select(state: PrDrlState, rng: np.random.Generator) -> int:
    p = pr_probabilities(state)
    return int(rng.choice(p.size, p=p))


def pr_update(state: PrDrlState, chosen: int, episode_return: float) -> PrDrlState:
    """Running-mean gain for ``chosen``, one more use, then ν += Δν."""
    W = np.array(state.W, dtype=float)
    V = np.array(state.V, dtype=int)
    W[chosen] = (W[chosen] * V[chosen] + episode_return) / (V[chosen] + 1)
    V[chosen] += 1
    return replace(state, W=W, V=V, nu=state.nu + state.delta_nu)
