"""Seed derivation so every (trial, method, target) gets its own stream."""
import zlib

import numpy as np


def _key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def derive_seed(master: int, trial: int, *labels: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master), int(trial), *(_key(label) for label in labels)])


def method_rng(master: int, trial: int, method: str, target: str) -> np.random.Generator:
    """Policy, selection and learner randomness of one method on one target."""
    return np.random.default_rng(derive_seed(master, trial, method, target))


def env_rng(master: int, trial: int, target: str) -> np.random.Generator:
    """Environment randomness; independent of the method so all methods see the same starts."""
    return np.random.default_rng(derive_seed(master, trial, "env", target))
