"""
Versioned JSON model files.

GP files carry the training data and hyperparameters; the Cholesky factor and
weights are recomputed on load with the stored jitter, which reproduces them
exactly. MLP files carry flattened row-major weights per layer.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from app.core.constants import ModelKind
from app.core.types import SignalLayout
from app.dynamics.base import DynamicsModel
from app.dynamics.gp import GpModel, gp_fit
from app.dynamics.kernels import KernelParams
from app.dynamics.mlp import MlpModel
from app.dynamics.serializers import GpModelFileSerializer, ModelHeaderSerializer, MlpModelFileSerializer
from app.utils.exception_handler import format_validation_error
from app.utils.exceptions import ModelFormatError, ModelVersionError, UnsupportedModelError

logger = logging.getLogger(__name__)

MODEL_FILE_VERSION = 1


def _reject_constant(name: str):
    raise ModelFormatError(f"non-finite value '{name}' in model file")


def _layout_dict(model: DynamicsModel) -> Dict[str, Any]:
    if model.layout is None:
        raise ModelFormatError("model has no signal layout attached; cannot serialize")
    return model.layout.to_dict()


def model_to_dict(model: DynamicsModel) -> Dict[str, Any]:
    if isinstance(model, GpModel):
        return {
            "version": MODEL_FILE_VERSION,
            "kind": ModelKind.GP.value,
            "layout": _layout_dict(model),
            "delta": model.kernel.delta,
            "l": model.kernel.l,
            "noise": model.noise,
            "jitter": model.jitter,
            "normalize_y": model.normalize_y,
            "X": model.X.tolist(),
            "Y": model.Y.tolist(),
        }
    if isinstance(model, MlpModel):
        return {
            "version": MODEL_FILE_VERSION,
            "kind": ModelKind.MLP.value,
            "layout": _layout_dict(model),
            "layers": list(model.layer_sizes),
            "activation": model.activation,
            "weights": [W.ravel(order="C").tolist() for W in model.weights],
            "biases": [b.tolist() for b in model.biases],
            "x_mean": model.x_mean.tolist(),
            "x_std": model.x_std.tolist(),
            "y_mean": model.y_mean.tolist(),
            "y_std": model.y_std.tolist(),
            "eps2_nn": model.eps2_nn,
            "epochs": model.epochs,
            "learning_rate": model.learning_rate,
            "final_loss": model.final_loss,
        }
    raise UnsupportedModelError(f"cannot serialize {type(model).__name__}")


def serialize_model(model: DynamicsModel) -> bytes:
    try:
        text = json.dumps(model_to_dict(model), allow_nan=False, sort_keys=True, separators=(",", ":"))
    except ValueError as exc:
        raise ModelFormatError(f"model holds non-finite values: {exc}") from exc
    return text.encode("utf-8")


def _validated(serializer_class, payload: Dict[str, Any]) -> Dict[str, Any]:
    serializer = serializer_class(data=payload)
    if not serializer.is_valid():
        raise ModelFormatError(f"model file schema violation: {format_validation_error(serializer.errors)}")
    return serializer.validated_data


def model_from_dict(payload: Dict[str, Any]) -> DynamicsModel:
    if not isinstance(payload, dict):
        raise ModelFormatError("model file must hold a JSON object")
    if payload.get("version") != MODEL_FILE_VERSION:
        raise ModelVersionError(
            f"model file version {payload.get('version')!r} is not supported (expected {MODEL_FILE_VERSION})"
        )
    kind = payload.get("kind")
    if kind not in {k.value for k in ModelKind}:
        raise UnsupportedModelError(f"unsupported model kind {kind!r}")

    header = _validated(ModelHeaderSerializer, payload)
    layout = SignalLayout.from_dict(dict(header["layout"]))

    if kind == ModelKind.GP.value:
        data = _validated(GpModelFileSerializer, payload)
        jitter = data["jitter"]
        return gp_fit(
            np.array(data["X"], dtype=float),
            np.array(data["Y"], dtype=float),
            KernelParams(delta=data["delta"], l=data["l"]),
            noise=data["noise"],
            jitter=jitter,
            max_jitter=max(jitter, 1e-2),
            cap=None,
            layout=layout,
            normalize_y=data.get("normalize_y", False),
        )

    data = _validated(MlpModelFileSerializer, payload)
    layers = data["layers"]
    weights = [
        np.array(flat, dtype=float).reshape(layers[i], layers[i + 1], order="C")
        for i, flat in enumerate(data["weights"])
    ]
    biases = [np.array(b, dtype=float) for b in data["biases"]]
    extra = {"eps2_nn": data["eps2_nn"]} if "eps2_nn" in data else {}
    return MlpModel(
        layers,
        weights,
        biases,
        activation=data["activation"],
        x_mean=np.array(data["x_mean"]),
        x_std=np.array(data["x_std"]),
        y_mean=np.array(data["y_mean"]),
        y_std=np.array(data["y_std"]),
        layout=layout,
        epochs=data["epochs"],
        learning_rate=data["learning_rate"],
        final_loss=data["final_loss"],
        **extra,
    )


def deserialize_model(data: bytes) -> DynamicsModel:
    try:
        payload = json.loads(data.decode("utf-8"), parse_constant=_reject_constant)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    return model_from_dict(payload)


def save_model(model: DynamicsModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(serialize_model(model))
    logger.debug(f"Wrote {model!r} to {path}")
    return path


def load_model(path: Union[str, Path]) -> DynamicsModel:
    path = Path(path)
    try:
        return deserialize_model(path.read_bytes())
    except ModelFormatError as exc:
        raise type(exc)(f"{path}: {exc}") from exc
