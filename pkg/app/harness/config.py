"""
Experiment configuration: TOML files merged over ``settings.BPRX`` and
validated by ExperimentConfigSerializer.
"""

import copy
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from django.conf import settings

from app.core.constants import METHOD_MODEL_KIND, Domain, Method, ModelKind
from app.core.types import DiscountConfig, SignalLayout
from app.dynamics.fitting import DynamicsFitConfig
from app.dynamics.kernels import KernelParams
from app.dynamics.likelihood import LikelihoodConfig
from app.dynamics.mlp import MlpTrainConfig
from app.engine.novelty import NoveltyConfig
from app.engine.reuse import ReuseConfig
from app.environments.suites import cartpole_task, env_dims, make_source_suite, make_target_suite, nav2d_task
from app.harness.serializers import ExperimentConfigSerializer
from app.policies.base import Policy
from app.policies.cem import CemConfig
from app.policies.controllers import CartPoleController, NavController
from app.policies.learners import make_learner
from app.utils.exception_handler import format_validation_error
from app.utils.exceptions import ConfigError, UnknownDomainError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger("bprx.harness")

DEFAULT_METHODS = [m.value for m in Method if m is not Method.OURS_MLP]
CONTROLLER_KEYS = ("controller_gain", "controller_gains", "controller_bias_per_newton")


def deep_merge(base: Dict[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def default_experiment(domain: str) -> Dict[str, Any]:
    """The experiment file every run starts from, built from settings.BPRX."""
    try:
        domain = Domain(domain).value
    except ValueError:
        raise UnknownDomainError(f"unknown domain '{domain}' (expected one of: {', '.join(d.value for d in Domain)})")
    defaults = settings.BPRX
    experiment = defaults["experiment"]
    return {
        "name": f"{domain}-experiment",
        "domain": domain,
        "methods": list(DEFAULT_METHODS),
        "target_suite": "near",
        "episodes": experiment["episodes"],
        "trials": experiment["trials"],
        "seed": experiment["seed"],
        "samples": experiment["samples"],
        "ablation_sizes": list(experiment["ablation_sizes"]),
        "signal": {"mode": defaults["signal"][domain], "batch_size": defaults["signal"]["batch_size"]},
        "reuse": dict(defaults["reuse"]),
        "kernel": dict(defaults["kernel"]),
        "gp": dict(defaults["gp"]),
        "likelihood": dict(defaults["likelihood"]),
        "mlp": copy.deepcopy(defaults["mlp"]),
        "novelty": {"k": defaults["novelty"]["k"], "threshold": defaults["novelty"]["thresholds"][domain]},
        "cem": dict(defaults["cem"]),
        "learning": {"samples": defaults["learning"]["samples"], "learner": "cem"},
        "return_table": {"episodes": defaults["return_table"]["episodes"], "variance": None},
        "pr_drl": dict(defaults["pr_drl"]),
        "task": copy.deepcopy(defaults[domain]),
    }


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    domain: Domain
    methods: Tuple[Method, ...]
    source_tasks: Tuple[Any, ...]
    target_tasks: Tuple[Any, ...]
    episodes: int
    trials: int
    seed: int
    samples: int
    ablation_sizes: Tuple[int, ...]
    model_kinds: Tuple[ModelKind, ...]
    layout: SignalLayout
    reuse: ReuseConfig
    kernel: KernelParams
    gp: Dict[str, Any]
    mlp: Dict[str, Any]
    cem: Dict[str, Any]
    learner_name: str
    learning_samples: int
    return_table_episodes: int
    return_variance: Optional[float]
    pr_nu: float
    pr_delta_nu: float
    controller: Dict[str, Any]
    raw: Dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def discount(self) -> DiscountConfig:
        return self.reuse.discount

    @property
    def likelihood(self) -> LikelihoodConfig:
        return self.reuse.likelihood

    def fit_config(self, kind: Union[ModelKind, str], seed: int = 0) -> DynamicsFitConfig:
        mlp = MlpTrainConfig(
            hidden=tuple(self.mlp["hidden"]),
            activation=self.mlp["activation"],
            epochs=self.mlp["epochs"],
            learning_rate=self.mlp["learning_rate"],
            momentum=self.mlp["momentum"],
            batch_size=self.mlp["batch_size"],
            seed=seed,
        )
        return DynamicsFitConfig(
            kind=ModelKind(kind),
            kernel=self.kernel,
            noise=self.gp["noise"],
            jitter=self.gp["jitter"],
            max_jitter=self.gp["max_jitter"],
            cap=self.gp["cap"],
            normalize_y=self.gp.get("normalize_y", True),
            mlp=mlp,
            likelihood=self.likelihood,
        )

    def cem_config(self, seed: int = 0) -> CemConfig:
        return CemConfig(seed=seed, **self.cem)

    def learner(self, seed: int = 0):
        return make_learner(self.learner_name, self.cem_config(seed), self.discount)

    def source_policy(self, task) -> Policy:
        if self.domain is Domain.NAV2D:
            return NavController(task.goal, gain=self.controller["controller_gain"])
        return CartPoleController(
            task.disturbance,
            gains=self.controller["controller_gains"],
            bias_per_newton=self.controller["controller_bias_per_newton"],
        )

    def source_policies(self) -> List[Policy]:
        return [self.source_policy(t) for t in self.source_tasks]

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


def _tasks(domain: Domain, task_kwargs: Dict[str, Any], goals, forces, suite) -> Tuple[Any, ...]:
    if domain is Domain.NAV2D and goals:
        return tuple(nav2d_task(g, **task_kwargs) for g in goals)
    if domain is Domain.CARTPOLE and forces:
        return tuple(cartpole_task(f, **task_kwargs) for f in forces)
    return tuple(suite(domain.value, **task_kwargs))


def build_experiment_config(data: Dict[str, Any]) -> ExperimentConfig:
    """Turn validated experiment data into typed configuration objects."""
    domain = Domain(data["domain"])
    methods = tuple(Method(m) for m in data["methods"])

    task_section = dict(data["task"])
    controller = {k: task_section.pop(k) for k in CONTROLLER_KEYS if k in task_section}
    controller.setdefault("controller_gain", 1.0)
    sources = _tasks(domain, task_section, data.get("source_goals"), data.get("source_forces"), make_source_suite)
    targets = _tasks(
        domain, task_section, data.get("target_goals"), data.get("target_forces"),
        lambda d, **kw: make_target_suite(d, data["target_suite"], **kw),
    )
    for label, tasks in (("source", sources), ("target", targets)):
        ids = [t.task_id for t in tasks]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"{label} tasks repeat: {', '.join(ids)}")

    kinds = data.get("model_kinds") or sorted({METHOD_MODEL_KIND[m].value for m in methods if m in METHOD_MODEL_KIND})
    model_kinds = tuple(ModelKind(k) for k in (kinds or [ModelKind.GP.value]))

    dims = env_dims(domain)
    layout = SignalLayout(
        mode=data["signal"]["mode"],
        state_dim=dims["state_dim"],
        action_dim=dims["action_dim"],
        batch_size=data["signal"]["batch_size"],
    )
    reuse = ReuseConfig(
        selection=data["reuse"]["selection"],
        likelihood=LikelihoodConfig(**data["likelihood"]),
        discount=DiscountConfig(gamma=data["reuse"]["gamma"]),
        novelty=NoveltyConfig(**data["novelty"]),
    )
    return ExperimentConfig(
        name=data["name"],
        domain=domain,
        methods=methods,
        source_tasks=sources,
        target_tasks=targets,
        episodes=data["episodes"],
        trials=data["trials"],
        seed=data["seed"],
        samples=data["samples"],
        ablation_sizes=tuple(data["ablation_sizes"]),
        model_kinds=model_kinds,
        layout=layout,
        reuse=reuse,
        kernel=KernelParams(**data["kernel"]),
        gp=dict(data["gp"]),
        mlp=dict(data["mlp"]),
        cem=dict(data["cem"]),
        learner_name=data["learning"]["learner"],
        learning_samples=data["learning"]["samples"],
        return_table_episodes=data["return_table"]["episodes"],
        return_variance=data["return_table"].get("variance"),
        pr_nu=data["pr_drl"]["nu"],
        pr_delta_nu=data["pr_drl"]["delta_nu"],
        controller=controller,
        raw=data,
    )


def experiment_config_from_dict(data: Mapping[str, Any], overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    if "domain" not in data:
        raise ConfigError("experiment file must set 'domain'")
    merged = deep_merge(default_experiment(data["domain"]), data)
    if overrides:
        merged = deep_merge(merged, overrides)
    serializer = ExperimentConfigSerializer(data=merged)
    if not serializer.is_valid():
        raise ConfigError(f"invalid experiment config: {format_validation_error(serializer.errors)}")
    return build_experiment_config(_plain(serializer.validated_data))


def _plain(value):
    if isinstance(value, Mapping):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_plain(v) for v in value]
    return value


def load_experiment_config(path: Union[str, Path], overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """Parse, merge over the defaults and validate a TOML experiment file."""
    path = Path(path)
    try:
        with path.open("rb") as handle:
            data = tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"experiment file {path} does not exist")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path} is not valid TOML: {exc}") from exc
    config = experiment_config_from_dict(data, overrides)
    logger.info(f"Loaded experiment '{config.name}' ({config.domain.value}) from {path}")
    return config
