"""Common interface of the fitted transition models."""
from abc import ABC, abstractmethod
from typing import Tuple

import numpy as np

from app.core.constants import ModelKind
from app.core.types import SignalLayout
from app.utils.exceptions import DimensionMismatchError


class DynamicsModel(ABC):
    """
    A fitted P_j(y | x). ``predict`` returns the model's own Gaussian
    prediction; ``observation_variance`` turns that into the variance ξ²
    used by the observation likelihood.
    """

    kind: ModelKind
    layout: SignalLayout

    @property
    @abstractmethod
    def input_dim(self) -> int:
        ...

    @property
    @abstractmethod
    def output_dim(self) -> int:
        ...

    @abstractmethod
    def predict_batch(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Means and variances, both shaped (rows of X, output_dim)."""

    @abstractmethod
    def observation_variance(self, variance: np.ndarray, likelihood) -> np.ndarray:
        """ξ² for each prediction given a LikelihoodConfig."""

    def predict(self, x) -> Tuple[np.ndarray, np.ndarray]:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.ndim != 1:
            raise DimensionMismatchError(f"predict takes a single input vector, got shape {x.shape}")
        mean, var = self.predict_batch(x[None, :])
        return mean[0], var[0]

    def _check_inputs(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.input_dim:
            raise DimensionMismatchError(
                f"{self.kind.value} model expects inputs of width {self.input_dim}, got {X.shape[1]}"
            )
        return X
