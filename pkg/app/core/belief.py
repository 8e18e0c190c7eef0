"""
Belief arithmetic: uniform initialisation, Bayes update in log space,
policy selection and discounted returns.
"""

import logging
import warnings
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import logsumexp

from app.core.constants import BELIEF_FLOOR, SelectionMode
from app.core.types import Belief, DiscountConfig
from app.utils.exceptions import (
    DegenerateUpdateWarning,
    DimensionMismatchError,
    EmptyLibraryError,
    InvalidBeliefError,
)

logger = logging.getLogger("bprx.core")


def belief_init(n: int) -> Belief:
    """Uniform belief over ``n`` library tasks."""
    if n < 1:
        raise EmptyLibraryError("cannot build a belief over an empty library")
    return Belief(np.full(n, 1.0 / n))


def apply_floor(weights: np.ndarray, floor: float = BELIEF_FLOOR) -> np.ndarray:
    """
    Clamp normalized weights from below at ``floor`` and give the remaining
    mass to the unclamped entries, repeating until no entry drops under it.
    Clamped entries end up exactly at ``floor``.
    """
    w = np.array(weights, dtype=float)
    n = w.size
    if n * floor >= 1.0:
        return np.full(n, 1.0 / n)
    clamped = np.zeros(n, dtype=bool)
    for _ in range(n):
        newly = (w < floor) & ~clamped
        if not newly.any():
            break
        clamped |= newly
        free_mass = 1.0 - floor * clamped.sum()
        w[clamped] = floor
        w[~clamped] *= free_mass / w[~clamped].sum()
    return w


def normalize_log_weights(log_weights: np.ndarray) -> Optional[np.ndarray]:
    """exp-normalize with max subtraction; None when every entry is -inf."""
    log_weights = np.asarray(log_weights, dtype=float)
    top = np.max(log_weights)
    if not np.isfinite(top):
        return None
    shifted = np.exp(log_weights - top)
    total = shifted.sum()
    if not np.isfinite(total) or total <= 0.0:
        return None
    return shifted / total


def belief_update(prior: Belief, log_likelihoods: Union[Sequence[float], np.ndarray]) -> Belief:
    """
    posterior_j ∝ exp(log_lik_j) · prior_j, floored at BELIEF_FLOOR.

    A likelihood vector that leaves no finite posterior mass keeps the prior
    and raises a DegenerateUpdateWarning.
    """
    log_lik = np.asarray(log_likelihoods, dtype=float)
    if log_lik.shape != prior.weights.shape:
        raise DimensionMismatchError(
            f"prior has {prior.n} entries but {log_lik.size} log-likelihoods were given"
        )
    if np.any(np.isnan(log_lik)) or np.any(log_lik == np.inf):
        raise InvalidBeliefError(f"log-likelihoods must be finite or -inf: {log_lik}")

    with np.errstate(divide="ignore"):
        log_post = log_lik + np.log(prior.weights)

    posterior = normalize_log_weights(log_post)
    if posterior is None:
        logger.warning("Degenerate belief update: all posterior mass vanished, keeping prior")
        warnings.warn("all posterior mass vanished; prior kept", DegenerateUpdateWarning, stacklevel=2)
        return prior

    return Belief(apply_floor(posterior))


def log_evidence(prior: Belief, log_likelihoods: Sequence[float]) -> float:
    """log Σ_j prior_j · exp(log_lik_j), the normalizer of belief_update."""
    with np.errstate(divide="ignore"):
        return float(logsumexp(np.asarray(log_likelihoods, dtype=float) + np.log(prior.weights)))


def select_policy(
    belief: Belief,
    mode: Union[SelectionMode, str] = SelectionMode.GREEDY,
    rng: Optional[np.random.Generator] = None,
) -> int:
    """
    Greedy: argmax of the belief, ties to the smallest index.
    Sample: index drawn in proportion to the weights.
    """
    mode = SelectionMode(mode)
    if mode is SelectionMode.GREEDY:
        return int(np.argmax(belief.weights))
    if rng is None:
        raise ValueError("sample mode needs a random generator")
    p = belief.weights / belief.weights.sum()
    return int(rng.choice(belief.n, p=p))


def discounted_return(rewards: Sequence[float], discount: DiscountConfig = DiscountConfig()) -> float:
    """Σ_t γ^t r_t with the first reward undiscounted."""
    r = np.asarray(list(rewards), dtype=float)
    if r.size == 0:
        return 0.0
    powers = np.power(discount.gamma, np.arange(r.size, dtype=float))
    return float(np.dot(powers, r))
