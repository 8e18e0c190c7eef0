"""
Source and target task suites for the built-in domains, and task/env factories.
"""

from typing import Any, Dict, List, Optional, Union

import numpy as np

from app.core.constants import Domain
from app.environments.base import Environment
from app.environments.cartpole import CartPoleEnv, CartPoleTask
from app.environments.nav2d import Nav2dEnv, Nav2dTask
from app.utils.exceptions import UnknownDomainError

Task = Union[Nav2dTask, CartPoleTask]

NAV2D_SOURCE_GOALS = [(10.0, 10.0), (-9.0, 9.0), (-7.0, -7.0), (8.0, -8.0)]
NAV2D_NEAR_GOALS = [
    (10.5, 10.0), (10.0, 9.5), (-8.5, 9.0), (-9.0, 9.5),
    (-6.5, -7.0), (-7.0, -7.5), (7.5, -8.0), (8.0, -7.5),
    (10.0, 10.0), (-9.0, 9.0), (-7.0, -7.0), (8.0, -8.0),
]
NAV2D_NOVEL_GOALS = [(0.0, 10.0), (0.0, -9.0), (-8.0, 0.0), (9.0, 0.0)]

CARTPOLE_SOURCE_FORCES = [5.0, -5.0]
CARTPOLE_NEAR_FORCES = [4.5, 5.0, 5.5, -5.5, -5.0, -4.5]
CARTPOLE_NOVEL_FORCES = [8.0, -8.0]

SUITE_KINDS = ("source", "near", "novel")


def _domain(domain) -> Domain:
    try:
        return Domain(domain)
    except ValueError:
        raise UnknownDomainError(f"unknown domain '{domain}' (expected one of: {', '.join(d.value for d in Domain)})")


def nav2d_task(goal, **overrides) -> Nav2dTask:
    return Nav2dTask(goal=tuple(goal), **overrides)


def cartpole_task(disturbance: float, **overrides) -> CartPoleTask:
    return CartPoleTask(disturbance=float(disturbance), **overrides)


def make_suite(domain, kind: str = "source", **overrides) -> List[Task]:
    domain = _domain(domain)
    if kind not in SUITE_KINDS:
        raise ValueError(f"unknown suite kind '{kind}' (expected one of: {', '.join(SUITE_KINDS)})")
    if domain is Domain.NAV2D:
        goals = {"source": NAV2D_SOURCE_GOALS, "near": NAV2D_NEAR_GOALS, "novel": NAV2D_NOVEL_GOALS}[kind]
        return [nav2d_task(g, **overrides) for g in goals]
    forces = {"source": CARTPOLE_SOURCE_FORCES, "near": CARTPOLE_NEAR_FORCES, "novel": CARTPOLE_NOVEL_FORCES}[kind]
    return [cartpole_task(f, **overrides) for f in forces]


def make_source_suite(domain, **overrides) -> List[Task]:
    """nav2d: the four corner goals; cartpole: F' = +5 and -5."""
    return make_suite(domain, "source", **overrides)


def make_target_suite(domain, kind: str = "near", **overrides) -> List[Task]:
    """Near-source targets for reuse experiments, novel ones for continual runs."""
    if kind not in ("near", "novel"):
        raise ValueError(f"target suites are 'near' or 'novel', got '{kind}'")
    return make_suite(domain, kind, **overrides)


def task_from_dict(data: Dict[str, Any]) -> Task:
    data = dict(data)
    domain = _domain(data.pop("domain"))
    if domain is Domain.NAV2D:
        return Nav2dTask(
            goal=tuple(data.pop("goal")),
            start=tuple(data.pop("start", (0.0, 0.0))),
            **data,
        )
    return CartPoleTask(**data)


def make_env(task: Task, rng: Optional[np.random.Generator] = None) -> Environment:
    if isinstance(task, Nav2dTask):
        return Nav2dEnv(task, rng)
    if isinstance(task, CartPoleTask):
        return CartPoleEnv(task, rng)
    raise UnknownDomainError(f"no environment for task type {type(task).__name__}")


def env_dims(domain) -> Dict[str, int]:
    domain = _domain(domain)
    env_cls = Nav2dEnv if domain is Domain.NAV2D else CartPoleEnv
    return {"state_dim": env_cls.state_dim, "action_dim": env_cls.action_dim}
