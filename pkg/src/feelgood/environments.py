"""Synthetic linear bandits with revealed, heterogeneous Gaussian noise."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .core import ActionSet, HypercubeD, Linear
from .rng import ENV, SETUP, RoundStream

__all__ = [
    "Sparse",
    "Dense",
    "Deterministic",
    "Constant",
    "NoiseSchedule",
    "draw_sigma_sq",
    "noise_sampler",
    "sample_theta_star",
    "LinearEnv",
    "RoundProtocolError",
]


@dataclass(frozen=True)
class Sparse:
    """sigma_t^2 = 1 with probability ``p``, else 0."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("sparse noise probability must lie in [0, 1]")


@dataclass(frozen=True)
class Dense:
    """sigma_t^2 ~ chi-square with one degree of freedom."""


@dataclass(frozen=True)
class Deterministic:
    """sigma_t^2 = 0: rewards are exact."""


@dataclass(frozen=True)
class Constant:
    v: float

    def __post_init__(self):
        if self.v < 0.0:
            raise ValueError("constant variance must be nonnegative")


NoiseSchedule = Union[Sparse, Dense, Deterministic, Constant]


class RoundProtocolError(RuntimeError):
    """Raised when rounds are begun or stepped out of order."""


def draw_sigma_sq(schedule: NoiseSchedule, gen: np.random.Generator, size: int | None = None):
    """Draw revealed variances (a float, or an array when ``size`` is given)."""
    if isinstance(schedule, Sparse):
        out = np.asarray(gen.random(size) < schedule.p, dtype=np.float64)
    elif isinstance(schedule, Dense):
        out = gen.standard_normal(size) ** 2
    elif isinstance(schedule, Deterministic):
        out = np.zeros(size if size is not None else ())
    elif isinstance(schedule, Constant):
        out = np.full(size if size is not None else (), float(schedule.v))
    else:
        raise TypeError(f"unknown noise schedule {schedule!r}")
    return float(out) if size is None else out


def noise_sampler(schedule: NoiseSchedule) -> Callable[[np.random.Generator, int], np.ndarray]:
    """i.i.d. sampler of the round noise epsilon under ``schedule``."""

    def sample(gen: np.random.Generator, n: int) -> np.ndarray:
        sigma_sq = draw_sigma_sq(schedule, gen, n)
        return np.sqrt(sigma_sq) * gen.standard_normal(n)

    return sample


def sample_theta_star(gen: np.random.Generator, d: int) -> np.ndarray:
    """Uniform draw from the unit sphere in R^d (normalised Gaussian)."""
    if d < 1:
        raise ValueError("d must be positive")
    while True:
        g = gen.standard_normal(d)
        n = np.linalg.norm(g)
        if n > 0.0:
            return g / n


class LinearEnv:
    """Linear bandit with reward <theta_star, phi> + N(0, sigma_t^2).

    Randomness for round ``t`` comes from block ``t`` of the environment
    stream, so two environments built from the same stream key produce the
    same variance and noise realisation regardless of the actions played.
    """

    def __init__(
        self,
        theta_star: np.ndarray,
        actions: ActionSet,
        noise: NoiseSchedule,
        horizon: int,
        stream: RoundStream,
    ):
        theta_star = np.asarray(theta_star, dtype=np.float64)
        if abs(np.linalg.norm(theta_star) - 1.0) > 1e-12:
            raise ValueError("theta_star must be a unit vector")
        if horizon < 1:
            raise ValueError("horizon must be positive")
        if theta_star.shape != (actions.dim,):
            raise ValueError("theta_star dimension does not match the action set")
        self.f_star = Linear(theta_star)
        self.actions = actions
        self.noise = noise
        self.horizon = int(horizon)
        self.stream = stream
        self._t = 0
        self._stepped = True
        self._sigma_sq = 0.0
        self._eps = 0.0

    @classmethod
    def sampled(
        cls, d: int, noise: NoiseSchedule, horizon: int, seed: int, run_id: int,
        actions: ActionSet | None = None,
    ) -> "LinearEnv":
        """Environment for one run: theta_star from the setup stream, noise from the env stream."""
        setup = RoundStream(seed, run_id, SETUP).at(0)
        theta = sample_theta_star(setup, d)
        return cls(theta, actions or HypercubeD(d), noise, horizon, RoundStream(seed, run_id, ENV))

    @property
    def theta_star(self) -> np.ndarray:
        return self.f_star.theta

    @property
    def t(self) -> int:
        return self._t

    def begin_round(self, t: int) -> tuple[int, ActionSet, float]:
        """Reveal ``(context_id, actions, sigma_t^2)`` for round ``t``."""
        if t != self._t + 1 or not self._stepped:
            raise RoundProtocolError(f"begin_round({t}) called, expected round {self._t + 1}")
        if t > self.horizon:
            raise RoundProtocolError(f"round {t} exceeds horizon {self.horizon}")
        gen = self.stream.at(t)
        self._sigma_sq = draw_sigma_sq(self.noise, gen)
        self._eps = gen.standard_normal()
        self._t = t
        self._stepped = False
        return 0, self.actions, self._sigma_sq

    def step(self, t: int, chosen: np.ndarray) -> float:
        """Reward for the chosen feature in the round just begun."""
        if t != self._t or self._stepped:
            raise RoundProtocolError(f"step({t}) does not match the open round {self._t}")
        self._stepped = True
        mean = self.f_star.value(np.asarray(chosen, dtype=np.float64))
        if self._sigma_sq == 0.0:
            return mean
        return mean + math.sqrt(self._sigma_sq) * self._eps
