"""
Core constants - signal layouts, selection modes, domains
"""

from enum import Enum


class SignalMode(str, Enum):
    """Which parts of a transition form the observation output y"""
    SAR = "SAR"      # y = r
    SAS = "SAS"      # y = s'
    SARS = "SARS"    # y = (r, s')


class SelectionMode(str, Enum):
    """How a library index is drawn from the belief"""
    GREEDY = "greedy"
    SAMPLE = "sample"


class Domain(str, Enum):
    NAV2D = "nav2d"
    CARTPOLE = "cartpole"


class ModelKind(str, Enum):
    GP = "gp"
    MLP = "mlp"


class Phase(str, Enum):
    REUSE = "reuse"
    LEARNING = "learning"


class Method(str, Enum):
    """Methods the harness can compare"""
    OURS_GP = "ours-gp"
    OURS_MLP = "ours-mlp"
    BPR_RETURN = "bpr-return"
    PR_DRL = "pr-drl"
    OPS_DRL = "ops-drl"


# Lower clamp applied to every posterior weight after normalization
BELIEF_FLOOR = 1e-12
# Allowed deviation of a belief's total mass from 1
NORMALIZATION_TOL = 1e-9

METHOD_MODEL_KIND = {
    Method.OURS_GP: ModelKind.GP,
    Method.OURS_MLP: ModelKind.MLP,
}
