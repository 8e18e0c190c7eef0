"""
Feedforward regression network used as a transition model.

Plain numpy: mini-batch gradient descent with momentum on the MSE, inputs and
targets standardized with the training statistics kept on the model.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.constants import ModelKind
from app.core.types import SignalLayout
from app.dynamics.base import DynamicsModel
from app.utils.exceptions import DimensionMismatchError, TrainingDivergedError

logger = logging.getLogger(__name__)

DEFAULT_EPS2_NN = 0.1


@dataclass(frozen=True)
class MlpTrainConfig:
    hidden: Tuple[int, ...] = (64, 64)
    activation: str = "tanh"
    epochs: int = 200
    learning_rate: float = 1e-3
    momentum: float = 0.9
    batch_size: int = 64
    seed: int = 0


# name -> (activation, derivative expressed through the activation output)
ACTIVATIONS: Dict[str, Tuple[Callable, Callable]] = {
    "tanh": (np.tanh, lambda a: 1.0 - a * a),
    "relu": (lambda z: np.maximum(z, 0.0), lambda a: (a > 0).astype(float)),
}


class MlpModel(DynamicsModel):
    kind = ModelKind.MLP

    def __init__(
        self,
        layer_sizes: Sequence[int],
        weights: List[np.ndarray],
        biases: List[np.ndarray],
        activation: str = "tanh",
        x_mean: Optional[np.ndarray] = None,
        x_std: Optional[np.ndarray] = None,
        y_mean: Optional[np.ndarray] = None,
        y_std: Optional[np.ndarray] = None,
        eps2_nn: float = DEFAULT_EPS2_NN,
        layout: Optional[SignalLayout] = None,
        epochs: int = 0,
        learning_rate: float = 0.0,
        final_loss: Optional[float] = None,
    ):
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation '{activation}'")
        if len(weights) != len(self.layer_sizes) - 1 or len(biases) != len(weights):
            raise DimensionMismatchError("one weight matrix and bias per layer transition is required")
        for i, (W, b) in enumerate(zip(weights, biases)):
            expected = (self.layer_sizes[i], self.layer_sizes[i + 1])
            if W.shape != expected or b.shape != (expected[1],):
                raise DimensionMismatchError(f"layer {i} has shape {W.shape}/{b.shape}, expected {expected}")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise TrainingDivergedError(f"layer {i} has non-finite parameters")
        self.weights = [np.asarray(W, dtype=float) for W in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        self.activation = activation
        d_in, d_out = self.layer_sizes[0], self.layer_sizes[-1]
        self.x_mean = np.zeros(d_in) if x_mean is None else np.asarray(x_mean, dtype=float)
        self.x_std = np.ones(d_in) if x_std is None else np.asarray(x_std, dtype=float)
        self.y_mean = np.zeros(d_out) if y_mean is None else np.asarray(y_mean, dtype=float)
        self.y_std = np.ones(d_out) if y_std is None else np.asarray(y_std, dtype=float)
        self.eps2_nn = float(eps2_nn)
        self.layout = layout
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.final_loss = final_loss

    def __repr__(self):
        return f"MlpModel(layers={self.layer_sizes}, activation={self.activation}, loss={self.final_loss})"

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.layer_sizes[-1]

    def forward_standardized(self, Xs: np.ndarray) -> List[np.ndarray]:
        """Layer activations for standardized inputs; the last entry is the linear output."""
        act, _ = ACTIVATIONS[self.activation]
        outputs = [Xs]
        h = Xs
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            h = z if i == last else act(z)
            outputs.append(h)
        return outputs

    def predict_batch(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        X = self._check_inputs(X)
        Xs = (X - self.x_mean) / self.x_std
        out = self.forward_standardized(Xs)[-1]
        mean = out * self.y_std + self.y_mean
        return mean, np.full_like(mean, self.eps2_nn)

    def observation_variance(self, variance: np.ndarray, likelihood) -> np.ndarray:
        return np.full_like(np.asarray(variance, dtype=float), likelihood.eps2_nn)


def _standardizer(data: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mean = data.mean(axis=0)
    std = data.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    return mean, std


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def mlp_fit(
    X,
    Y,
    config: MlpTrainConfig = MlpTrainConfig(),
    eps2_nn: float = DEFAULT_EPS2_NN,
    layout: Optional[SignalLayout] = None,
) -> MlpModel:
    """
    Train on the MSE of standardized targets.

    The output layer starts at zero, so an untrained network predicts the
    training mean. Fixed seed means bit-identical weights.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n = X.shape[0]
    if n != Y.shape[0]:
        raise DimensionMismatchError(f"X has {n} rows but Y has {Y.shape[0]}")
    if not 1 <= config.batch_size <= n:
        raise DimensionMismatchError(f"batch size {config.batch_size} must lie in [1, {n}]")
    if config.activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation '{config.activation}'")

    rng = np.random.default_rng(config.seed)
    x_mean, x_std = _standardizer(X)
    y_mean, y_std = _standardizer(Y)
    Xs = (X - x_mean) / x_std
    Ys = (Y - y_mean) / y_std

    sizes = (X.shape[1], *config.hidden, Y.shape[1])
    weights = [_glorot(rng, sizes[i], sizes[i + 1]) for i in range(len(sizes) - 2)]
    weights.append(np.zeros((sizes[-2], sizes[-1])))
    biases = [np.zeros(s) for s in sizes[1:]]
    velocity_w = [np.zeros_like(W) for W in weights]
    velocity_b = [np.zeros_like(b) for b in biases]

    model = MlpModel(sizes, weights, biases, config.activation, x_mean, x_std, y_mean, y_std,
                     eps2_nn=eps2_nn, layout=layout, epochs=config.epochs,
                     learning_rate=config.learning_rate)
    _, act_grad = ACTIVATIONS[config.activation]

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            outputs = model.forward_standardized(Xs[idx])
            delta = 2.0 * (outputs[-1] - Ys[idx]) / outputs[-1].size
            for layer in range(len(weights) - 1, -1, -1):
                grad_w = outputs[layer].T @ delta
                grad_b = delta.sum(axis=0)
                if layer > 0:
                    delta = (delta @ weights[layer].T) * act_grad(outputs[layer])
                velocity_w[layer] = config.momentum * velocity_w[layer] - config.learning_rate * grad_w
                velocity_b[layer] = config.momentum * velocity_b[layer] - config.learning_rate * grad_b
                weights[layer] += velocity_w[layer]
                biases[layer] += velocity_b[layer]

        loss = float(np.mean((model.forward_standardized(Xs)[-1] - Ys) ** 2))
        if not np.isfinite(loss):
            raise TrainingDivergedError(
                f"MSE became non-finite at epoch {epoch}; try a learning rate below {config.learning_rate:g}",
                epoch=epoch,
            )
        logger.debug(f"mlp epoch {epoch} loss {loss:.6g}")

    model.final_loss = float(np.mean((model.forward_standardized(Xs)[-1] - Ys) ** 2))
    return model


def mlp_predict(model: MlpModel, x_star, eps2_nn: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """De-standardized forward pass; variance filled with ε²_NN."""
    mean, var = model.predict(x_star)
    if eps2_nn is not None:
        var = np.full_like(mean, float(eps2_nn))
    return mean, var
