"""Observation likelihood of a batch of transitions under one fitted model."""
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from app.core.types import SignalLayout, TransitionSample
from app.dynamics.base import DynamicsModel
from app.utils.exceptions import DimensionMismatchError, InvalidVarianceError

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class LikelihoodConfig:
    """Variance added to GP predictions (eps2_gp) and the fixed MLP variance (eps2_nn)."""

    eps2_gp: float = 0.1
    eps2_nn: float = 0.1

    def __post_init__(self):
        if not self.eps2_gp > 0 or not self.eps2_nn > 0:
            raise InvalidVarianceError(
                f"likelihood variances must be positive, got eps2_gp={self.eps2_gp}, eps2_nn={self.eps2_nn}"
            )


def gaussian_log_density(y, mean, variance) -> np.ndarray:
    """Elementwise log N(y; mean, variance)."""
    y = np.asarray(y, dtype=float)
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if np.any(~(variance > 0)):
        raise InvalidVarianceError(f"Gaussian variance must be positive, got min {np.min(variance)!r}")
    return -0.5 * (LOG_2PI + np.log(variance)) - (y - mean) ** 2 / (2.0 * variance)


def log_likelihood(
    model: DynamicsModel,
    signal: Sequence[TransitionSample],
    layout: SignalLayout,
    cfg: LikelihoodConfig = LikelihoodConfig(),
) -> float:
    """
    Σ over samples and output dimensions of log N(y_d; f(x)_d, ξ²_d).

    Summed with math.fsum so the result does not depend on batch grouping
    beyond the final rounding.
    """
    if not signal:
        return 0.0
    if model.layout is not None and not model.layout.same_shape(layout):
        raise DimensionMismatchError("signal layout does not match the model layout")
    X = layout.inputs(signal)
    Y = layout.outputs(signal)
    mean, var = model.predict_batch(X)
    xi2 = model.observation_variance(var, cfg)
    return math.fsum(gaussian_log_density(Y, mean, xi2).ravel())


def log_likelihoods(
    models: Sequence[DynamicsModel],
    signal: Sequence[TransitionSample],
    layout: SignalLayout,
    cfg: LikelihoodConfig = LikelihoodConfig(),
) -> np.ndarray:
    """One log-density per model, in library order."""
    return np.array([log_likelihood(m, signal, layout, cfg) for m in models], dtype=float)
