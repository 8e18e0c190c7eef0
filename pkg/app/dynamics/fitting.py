"""Fit either model kind from collected transitions."""
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from app.core.constants import ModelKind
from app.core.types import SignalLayout, TransitionSample
from app.dynamics.base import DynamicsModel
from app.dynamics.gp import DEFAULT_CAP, DEFAULT_JITTER, DEFAULT_NOISE, MAX_JITTER, gp_fit
from app.dynamics.kernels import KernelParams
from app.dynamics.likelihood import LikelihoodConfig
from app.dynamics.mlp import MlpTrainConfig, mlp_fit

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DynamicsFitConfig:
    kind: ModelKind = ModelKind.GP
    kernel: KernelParams = field(default_factory=KernelParams)
    noise: float = DEFAULT_NOISE
    jitter: float = DEFAULT_JITTER
    max_jitter: float = MAX_JITTER
    cap: Optional[int] = DEFAULT_CAP
    normalize_y: bool = True
    mlp: MlpTrainConfig = field(default_factory=MlpTrainConfig)
    likelihood: LikelihoodConfig = field(default_factory=LikelihoodConfig)

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))


def fit_model(
    samples: Sequence[TransitionSample],
    layout: SignalLayout,
    config: DynamicsFitConfig = DynamicsFitConfig(),
    rng: Optional[np.random.Generator] = None,
) -> DynamicsModel:
    X = layout.inputs(samples)
    Y = layout.outputs(samples)
    if config.kind is ModelKind.GP:
        model = gp_fit(
            X, Y, config.kernel,
            noise=config.noise,
            jitter=config.jitter,
            max_jitter=config.max_jitter,
            cap=config.cap,
            rng=rng,
            layout=layout,
            normalize_y=config.normalize_y,
        )
    else:
        model = mlp_fit(X, Y, config.mlp, eps2_nn=config.likelihood.eps2_nn, layout=layout)
    logger.debug(f"Fitted {model!r} on {len(samples)} samples")
    return model
