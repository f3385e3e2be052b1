"""Variance-aware Feel-Good Thompson Sampling for contextual bandits."""
from ._accel import BACKEND
from .core import Explicit, HypercubeD, Linear, Tabular, Transcript, argmax_action, regret_increment
from .environments import Constant, Dense, Deterministic, LinearEnv, Sparse
from .fgtsva import FGTSVA, FGTSVADiscrete, ParamSchedule

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Explicit",
    "HypercubeD",
    "Linear",
    "Tabular",
    "Transcript",
    "argmax_action",
    "regret_increment",
    "Constant",
    "Dense",
    "Deterministic",
    "LinearEnv",
    "Sparse",
    "FGTSVA",
    "FGTSVADiscrete",
    "ParamSchedule",
]
