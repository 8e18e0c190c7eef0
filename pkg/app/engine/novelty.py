"""Episode-level detection of targets the library does not cover."""
import math
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class NoveltyConfig:
    k: int = 3
    threshold: float = -500.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"novelty window k must be >= 1, got {self.k}")


def detect_novel(window: Sequence[float], cfg: NoveltyConfig) -> bool:
    """True once the last k returns are in and their mean is strictly below the threshold."""
    recent = list(window)[-cfg.k:]
    if len(recent) < cfg.k:
        return False
    return math.fsum(recent) / cfg.k < cfg.threshold
