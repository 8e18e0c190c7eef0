"""RBF covariance function."""
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from app.utils.exceptions import DimensionMismatchError

DEFAULT_DELTA = 1.0
DEFAULT_LENGTH_SCALE = 2.0


@dataclass(frozen=True)
class KernelParams:
    """Signal standard deviation ``delta`` and length scale ``l``."""

    delta: float = DEFAULT_DELTA
    l: float = DEFAULT_LENGTH_SCALE

    def __post_init__(self):
        if not self.delta > 0 or not self.l > 0:
            raise ValueError(f"kernel parameters must be positive, got delta={self.delta}, l={self.l}")

    @property
    def signal_variance(self) -> float:
        return self.delta ** 2


def rbf(x, x_prime, params: KernelParams = KernelParams()) -> float:
    """δ² · exp(-‖x - x'‖² / (2 l²))"""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_prime = np.atleast_1d(np.asarray(x_prime, dtype=float))
    if x.shape != x_prime.shape:
        raise DimensionMismatchError(f"rbf inputs differ in shape: {x.shape} vs {x_prime.shape}")
    sq = float(np.sum((x - x_prime) ** 2))
    return params.signal_variance * float(np.exp(-sq / (2.0 * params.l ** 2)))


def rbf_matrix(A: np.ndarray, B: np.ndarray, params: KernelParams = KernelParams()) -> np.ndarray:
    """Pairwise kernel matrix between the rows of A and B."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatchError(f"rbf inputs differ in width: {A.shape[1]} vs {B.shape[1]}")
    sq = cdist(A, B, metric="sqeuclidean")
    return params.signal_variance * np.exp(-sq / (2.0 * params.l ** 2))
