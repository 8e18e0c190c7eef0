"""
Gaussian-process transition models.

Each output dimension is an independent GP sharing one RBF kernel, hence one
Cholesky factor and one posterior variance.

With ``normalize_y`` the targets are shifted and scaled per column before the
solve, so far from the data the prediction reverts to the training mean with
the training variance instead of to 0 with δ².
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular

from app.core.constants import ModelKind
from app.core.types import SignalLayout
from app.dynamics.base import DynamicsModel
from app.dynamics.kernels import KernelParams, rbf_matrix
from app.utils.exceptions import DimensionMismatchError, IllConditionedKernelError

logger = logging.getLogger(__name__)

DEFAULT_NOISE = 1e-4
DEFAULT_JITTER = 1e-6
MAX_JITTER = 1e-2
DEFAULT_CAP = 2000


def jitter_schedule(jitter: float, max_jitter: float = MAX_JITTER):
    """The requested jitter, then decades from 1e-6 (or jitter·10) up to max_jitter."""
    yield jitter
    current = max(jitter * 10.0, DEFAULT_JITTER) if jitter > 0 else DEFAULT_JITTER
    while current <= max_jitter * (1 + 1e-9):
        yield current
        current *= 10.0


class GpModel(DynamicsModel):
    kind = ModelKind.GP

    def __init__(
        self,
        X: np.ndarray,
        Y: np.ndarray,
        kernel: KernelParams,
        noise: float,
        jitter: float,
        L: np.ndarray,
        alpha: np.ndarray,
        layout: Optional[SignalLayout] = None,
        y_mean: Optional[np.ndarray] = None,
        y_std: Optional[np.ndarray] = None,
    ):
        self.X = X
        self.Y = Y
        self.kernel = kernel
        self.noise = float(noise)
        self.jitter = float(jitter)
        self.L = L
        self.alpha = alpha
        self.layout = layout
        self.normalize_y = y_mean is not None
        self.y_mean = np.zeros(Y.shape[1]) if y_mean is None else np.asarray(y_mean, dtype=float)
        self.y_std = np.ones(Y.shape[1]) if y_std is None else np.asarray(y_std, dtype=float)
        for arr in (self.X, self.Y, self.L, self.alpha, self.y_mean, self.y_std):
            arr.setflags(write=False)

    def __repr__(self):
        return f"GpModel(N={self.n_train}, in={self.input_dim}, out={self.output_dim}, jitter={self.jitter:g})"

    @property
    def n_train(self) -> int:
        return int(self.X.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.X.shape[1])

    @property
    def output_dim(self) -> int:
        return int(self.Y.shape[1])

    def predict_batch(self, X_star: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        X_star = self._check_inputs(X_star)
        k_star = rbf_matrix(X_star, self.X, self.kernel)            # (m, N)
        mean = k_star @ self.alpha                                  # (m, out)
        v = solve_triangular(self.L, k_star.T, lower=True)          # (N, m)
        var = self.kernel.signal_variance - np.sum(v * v, axis=0)
        var = np.repeat(np.maximum(var, 0.0)[:, None], self.output_dim, axis=1)
        if self.normalize_y:
            return self.y_mean + self.y_std * mean, var * self.y_std ** 2
        return mean, var

    def observation_variance(self, variance: np.ndarray, likelihood) -> np.ndarray:
        return np.asarray(variance, dtype=float) + likelihood.eps2_gp


def gp_fit(
    X,
    Y,
    params: KernelParams = KernelParams(),
    noise: float = DEFAULT_NOISE,
    jitter: float = DEFAULT_JITTER,
    max_jitter: float = MAX_JITTER,
    cap: Optional[int] = DEFAULT_CAP,
    rng: Optional[np.random.Generator] = None,
    layout: Optional[SignalLayout] = None,
    normalize_y: bool = False,
) -> GpModel:
    """
    Factor K + (noise + jitter)·I and solve the weights of every output column.

    Above ``cap`` training points a uniform subsample is kept. Jitter grows by
    decades up to ``max_jitter`` before the kernel is declared ill-conditioned.
    ``normalize_y`` fits the standardized targets; a constant column keeps
    scale 1.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape[0] < 1:
        raise DimensionMismatchError("GP needs at least one training point")
    if X.shape[0] != Y.shape[0]:
        raise DimensionMismatchError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise DimensionMismatchError("GP training data must be finite")
    if noise < 0:
        raise ValueError(f"noise must be >= 0, got {noise}")
    if layout is not None and (X.shape[1] != layout.input_dim or Y.shape[1] != layout.output_dim):
        raise DimensionMismatchError(
            f"data shape ({X.shape[1]} -> {Y.shape[1]}) does not match layout "
            f"({layout.input_dim} -> {layout.output_dim})"
        )

    if cap is not None and X.shape[0] > cap:
        rng = rng if rng is not None else np.random.default_rng(0)
        keep = np.sort(rng.choice(X.shape[0], size=cap, replace=False))
        logger.info(f"Subsampling GP training set from {X.shape[0]} to {cap} points")
        X, Y = X[keep], Y[keep]

    X = np.array(X, dtype=float, order="C", copy=True)
    Y = np.array(Y, dtype=float, order="C", copy=True)
    K = rbf_matrix(X, X, params)
    eye = np.eye(X.shape[0])

    y_mean = y_std = None
    targets = Y
    if normalize_y:
        y_mean = Y.mean(axis=0)
        y_std = Y.std(axis=0)
        y_std = np.where(y_std > 0, y_std, 1.0)
        targets = (Y - y_mean) / y_std

    for used_jitter in jitter_schedule(jitter, max_jitter):
        try:
            L = cholesky(K + (noise + used_jitter) * eye, lower=True, check_finite=False)
        except LinAlgError:
            continue
        if not np.all(np.diag(L) > 0):
            continue
        if used_jitter != jitter:
            logger.warning(f"Kernel matrix needed jitter {used_jitter:g} (requested {jitter:g})")
        alpha = cho_solve((L, True), targets, check_finite=False)
        return GpModel(X=X, Y=Y, kernel=params, noise=noise, jitter=used_jitter, L=L, alpha=alpha, layout=layout,
                       y_mean=y_mean, y_std=y_std)

    condition = float(np.linalg.cond(K + noise * eye))
    raise IllConditionedKernelError(
        f"Cholesky failed up to jitter {max_jitter:g}; condition estimate {condition:.3e}",
        condition=condition,
    )


def gp_predict(model: GpModel, x_star) -> Tuple[np.ndarray, np.ndarray]:
    """Posterior mean per output dimension and the shared posterior variance."""
    return model.predict(x_star)
