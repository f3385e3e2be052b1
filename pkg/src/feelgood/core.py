"""Actions, reward functions, transcripts and regret accounting."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Iterator, Union

import numpy as np

from .kernels import hypercube_corners

__all__ = [
    "HypercubeD",
    "Explicit",
    "ActionSet",
    "Linear",
    "Tabular",
    "RewardFunction",
    "Record",
    "Transcript",
    "argmax_action",
    "argmax_linear",
    "regret_increment",
]

_NORM_TOL = 1e-12


@functools.lru_cache(maxsize=16)
def _bit_weights(d: int) -> np.ndarray:
    return np.left_shift(1, np.arange(d, dtype=np.int64))


@dataclass(frozen=True)
class HypercubeD:
    """The corners {+-1/sqrt(d)}^d, with features phi(a) = a.

    Action ids encode the sign pattern: bit ``i`` set means coordinate ``i``
    is negative.  The set is never materialised for maximisation.
    """

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("hypercube dimension must be positive")

    @property
    def dim(self) -> int:
        return self.d

    def __len__(self) -> int:
        return 2**self.d

    def feature(self, action_id: int) -> np.ndarray:
        bits = (action_id >> np.arange(self.d)) & 1
        return np.where(bits == 1, -1.0, 1.0) / math.sqrt(self.d)

    def action_id(self, feature: np.ndarray) -> int:
        return int((np.asarray(feature) < 0) @ _bit_weights(self.d))

    def features(self) -> np.ndarray:
        """Materialise all corners (only for enumeration-based callers)."""
        return hypercube_corners(self.d)


@dataclass(frozen=True, eq=False)
class Explicit:
    """A finite list of feature vectors, one row per action."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] == 0:
            raise ValueError("explicit action set needs a nonempty (n, d) array")
        if np.any(np.linalg.norm(v, axis=1) > 1.0 + _NORM_TOL):
            raise ValueError("every feature vector must have Euclidean norm <= 1")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def feature(self, action_id: int) -> np.ndarray:
        return self.vectors[action_id]

    def features(self) -> np.ndarray:
        return self.vectors


ActionSet = Union[HypercubeD, Explicit]


@dataclass(frozen=True, eq=False)
class Linear:
    """f(a) = <theta, phi(a)> with |theta|_2 <= 1."""

    theta: np.ndarray

    def __post_init__(self):
        th = np.array(self.theta, dtype=np.float64).reshape(-1)
        if np.linalg.norm(th) > 1.0 + 1e-9:
            raise ValueError("linear reward parameter must satisfy |theta|_2 <= 1")
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)

    @property
    def dim(self) -> int:
        return self.theta.shape[0]

    def value(self, feature: np.ndarray, action_id: int = -1, context_id: int = 0) -> float:
        return float(self.theta @ feature)


@dataclass(frozen=True, eq=False)
class Tabular:
    """Finite-class reward table; ``values[context_id, action_id]`` in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2:
            raise ValueError("tabular values must be (contexts, actions)")
        if np.any(v < 0.0) or np.any(v > 1.0):
            raise ValueError("tabular values must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def value(self, feature: np.ndarray | None, action_id: int, context_id: int = 0) -> float:
        return float(self.values[context_id, action_id])


RewardFunction = Union[Linear, Tabular]


def _check_dims(f: RewardFunction, actions: ActionSet) -> None:
    if isinstance(f, Linear):
        if f.dim != actions.dim:
            raise ValueError(f"dimension mismatch: f has d={f.dim}, actions have d={actions.dim}")
    elif isinstance(actions, HypercubeD):
        raise ValueError("tabular reward functions need an explicit action set")
    elif f.values.shape[1] != len(actions):
        raise ValueError(
            f"dimension mismatch: table covers {f.values.shape[1]} actions, set has {len(actions)}"
        )


def argmax_action(
    f: RewardFunction, actions: ActionSet, context_id: int = 0
) -> tuple[int, np.ndarray, float]:
    """Return ``(action_id, feature, value)`` of a maximiser of ``f``.

    Hypercube maximisation is closed form, sign(theta_i)/sqrt(d) with zero
    components sent to +1/sqrt(d).  Explicit sets break ties by lowest index.
    """
    _check_dims(f, actions)
    if isinstance(f, Linear):
        return argmax_linear(f.theta, actions)
    vals = f.values[context_id]
    k = int(np.argmax(vals))
    return k, actions.feature(k), float(vals[k])


def argmax_linear(theta: np.ndarray, actions: ActionSet) -> tuple[int, np.ndarray, float]:
    """:func:`argmax_action` for a raw parameter vector of any norm."""
    if isinstance(actions, HypercubeD):
        feat = np.where(theta >= 0.0, 1.0, -1.0) / math.sqrt(actions.d)
        return actions.action_id(feat), feat, float(np.abs(theta).sum() / math.sqrt(actions.d))
    vals = actions.vectors @ theta
    k = int(np.argmax(vals))
    return k, actions.feature(k), float(vals[k])


def regret_increment(
    f_star: RewardFunction,
    actions: ActionSet,
    chosen: np.ndarray | int,
    context_id: int = 0,
) -> float:
    """Gap between the best value of ``f_star`` on ``actions`` and the chosen one.

    ``chosen`` is a feature vector, or an action id for tabular functions.
    """
    _, _, best = argmax_action(f_star, actions, context_id)
    if isinstance(f_star, Linear):
        feat = np.asarray(chosen, dtype=np.float64)
        if feat.shape != (actions.dim,):
            raise ValueError("chosen feature has the wrong dimension")
        got = f_star.value(feat)
    else:
        got = f_star.value(None, int(chosen), context_id)
    return max(best - got, 0.0)


@dataclass(frozen=True)
class Record:
    round: int
    features: np.ndarray
    reward: float
    sigma_bar_sq: float
    action_id: int = -1
    context_id: int = 0
    actions: ActionSet | None = None


@dataclass
class Transcript:
    """Append-only history of played rounds, indexed from 1."""

    records: list[Record] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Record]:
        return iter(self.records)

    def __getitem__(self, i: int) -> Record:
        return self.records[i]

    def append(
        self,
        features: np.ndarray,
        reward: float,
        sigma_bar_sq: float,
        action_id: int = -1,
        context_id: int = 0,
        actions: ActionSet | None = None,
    ) -> Record:
        if not sigma_bar_sq > 0.0:
            raise ValueError("sigma_bar_sq must be positive")
        feat = np.array(features, dtype=np.float64)
        feat.setflags(write=False)
        rec = Record(
            len(self.records) + 1, feat, float(reward), float(sigma_bar_sq), action_id, context_id, actions
        )
        self.records.append(rec)
        return rec

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Stacked ``(features, rewards, weights)`` with weights 1/sigma_bar^2."""
        if not self.records:
            return np.zeros((0, 0)), np.zeros(0), np.zeros(0)
        feats = np.stack([r.features for r in self.records])
        rewards = np.array([r.reward for r in self.records])
        weights = 1.0 / np.array([r.sigma_bar_sq for r in self.records])
        return feats, rewards, weights

