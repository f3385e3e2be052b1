"""Variance-aware Feel-Good Thompson Sampling.

The posterior at round t is

    p_t(f) ∝ p0(f) exp( -sum_{s<t} eta_s (r_s - f(z_s))^2 + lambda_t max_a f(x_t, a) )

with eta_s = 1/bar_sigma_s^2, lambda_t = c sqrt(Lambda_t) / bar_sigma_t^2,
bar_sigma_t = max(sigma_t, alpha) and Lambda_t = sum_{s<=t} bar_sigma_s^2.
Linear classes are sampled with warm-started Langevin dynamics; finite classes
are sampled exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .core import (
    ActionSet,
    HypercubeD,
    RewardFunction,
    Transcript,
    argmax_action,
    argmax_linear,
)
from .rng import RoundStream

__all__ = [
    "bar_sigma",
    "lambda_t",
    "linear_dc_bound",
    "default_hyperparams",
    "ParamSchedule",
    "SgldChain",
    "log_posterior_unnorm",
    "grad_log_posterior",
    "sgld_sample",
    "sgld_step_size",
    "discrete_posterior_weights",
    "categorical_draw",
    "FGTSVA",
    "FGTSVADiscrete",
    "AgentProtocolError",
]


class AgentProtocolError(RuntimeError):
    """An agent was asked to act twice without observing, or to observe twice."""


def bar_sigma(sigma_sq: float, alpha: float) -> float:
    if sigma_sq < 0.0 or alpha <= 0.0:
        raise ValueError("need sigma_sq >= 0 and alpha > 0")
    return max(math.sqrt(sigma_sq), alpha)


def lambda_t(c: float, Lambda_t: float, bar_sigma_t: float) -> float:
    return c * math.sqrt(Lambda_t) / bar_sigma_t**2


def linear_dc_bound(d: int, T: int, lam: float = 1.0, epsilon: float | None = None) -> float:
    """2 d log(1 + eps T / (d lam)); ``epsilon`` defaults to T (alpha = 1/sqrt(T))."""
    eps = float(T) if epsilon is None else epsilon
    return 2.0 * d * math.log1p(eps * T / (d * lam))


def default_hyperparams(
    T: int,
    class_size: float | None = None,
    dc: float | None = None,
    c: float | None = None,
) -> tuple[float, float]:
    """``(alpha, c)`` with alpha = 1/sqrt(T) and c = 2 sqrt(log|F| / dc).

    An explicit ``c`` overrides the class metadata.
    """
    if T < 1:
        raise ValueError("T must be positive")
    alpha = 1.0 / math.sqrt(T)
    if c is not None:
        return alpha, float(c)
    if class_size is None or dc is None:
        raise ValueError("c needs either an override or (class_size, dc) metadata")
    if class_size < 1 or dc <= 0:
        raise ValueError("class_size must be >= 1 and dc > 0")
    return alpha, 2.0 * math.sqrt(math.log(class_size) / dc)


@dataclass
class ParamSchedule:
    """Running bar_sigma_t, Lambda_t and lambda_t."""

    alpha: float
    c: float
    bar_sigmas: list[float] = field(default_factory=list)
    Lambda: float = 0.0

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if self.c < 0.0:
            raise ValueError("c must be nonnegative")

    def advance(self, sigma_sq: float) -> tuple[float, float]:
        """Fold in round t's revealed variance; return ``(bar_sigma_t, lambda_t)``."""
        bs = bar_sigma(sigma_sq, self.alpha)
        self.bar_sigmas.append(bs)
        self.Lambda += bs * bs
        return bs, lambda_t(self.c, self.Lambda, bs)

    @property
    def etas(self) -> np.ndarray:
        return 1.0 / np.square(self.bar_sigmas)


def _max_feature(theta: np.ndarray, actions: ActionSet) -> tuple[np.ndarray, float]:
    _, feat, val = argmax_linear(theta, actions)
    return feat, val


def log_posterior_unnorm(
    theta: np.ndarray,
    transcript: Transcript,
    lambda_t: float,
    current_actions: ActionSet,
    prior_precision: float | None = None,
) -> float:
    """-(p/2)|theta|^2 - sum eta_s (r_s - <theta, phi_s>)^2 + lambda_t max_a <theta, phi(a)>,
    with prior precision ``p`` defaulting to d."""
    theta = np.asarray(theta, dtype=np.float64)
    d = theta.shape[0]
    if current_actions.dim != d:
        raise ValueError("dimension mismatch between theta and the action set")
    prec = float(d) if prior_precision is None else prior_precision
    out = -0.5 * prec * float(theta @ theta)
    if len(transcript):
        feats, rewards, w = transcript.arrays()
        if feats.shape[1] != d:
            raise ValueError("dimension mismatch between theta and transcript features")
        out -= float(w @ (rewards - feats @ theta) ** 2)
    if lambda_t:
        out += lambda_t * _max_feature(theta, current_actions)[1]
    return out


def grad_log_posterior(
    theta: np.ndarray,
    transcript: Transcript,
    lambda_t: float,
    current_actions: ActionSet,
    prior_precision: float | None = None,
) -> np.ndarray:
    """Gradient of :func:`log_posterior_unnorm`; the maximum contributes the
    feature of the argmax action (a subgradient on ties)."""
    theta = np.asarray(theta, dtype=np.float64)
    d = theta.shape[0]
    if current_actions.dim != d:
        raise ValueError("dimension mismatch between theta and the action set")
    prec = float(d) if prior_precision is None else prior_precision
    g = -prec * theta
    if len(transcript):
        feats, rewards, w = transcript.arrays()
        if feats.shape[1] != d:
            raise ValueError("dimension mismatch between theta and transcript features")
        g = g + 2.0 * feats.T @ (w * (rewards - feats @ theta))
    if lambda_t:
        g = g + lambda_t * _max_feature(theta, current_actions)[0]
    return g


def sgld_step_size(delta0: float, d: int, eta_sum: float) -> float:
    """delta0 / (d * max(1, sum eta_s)): shrinks as the likelihood sharpens."""
    return delta0 / (d * max(1.0, eta_sum))


def sgld_sample(
    theta: np.ndarray,
    grad: Callable[[np.ndarray], np.ndarray],
    K: int,
    step_sizes: float | Sequence[float],
    gen: np.random.Generator,
) -> np.ndarray:
    """Run ``K`` Langevin steps theta += delta grad + sqrt(2 delta) N(0, I).

    ``theta`` is updated in place and returned.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    steps = np.broadcast_to(np.asarray(step_sizes, dtype=np.float64), (K,))
    if np.any(steps < 0.0):
        raise ValueError("step sizes must be nonnegative")
    noise = gen.standard_normal((K, theta.shape[0]))
    for k in range(K):
        g = grad(theta)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite SGLD gradient at step {k}: theta={theta}")
        theta += steps[k] * g + math.sqrt(2.0 * steps[k]) * noise[k]
    return theta


SAMPLERS = ("preconditioned", "plain")


@dataclass
class SgldChain:
    """Chain position plus the Langevin settings used each round.

    ``sampler="plain"`` runs unpreconditioned SGLD with step
    :func:`sgld_step_size`.  ``"preconditioned"`` (the default) uses the fixed
    metric P = (prior_prec I + 2A)^-1 of the current round and step ``delta0``;
    the plain chain cannot move along weakly observed directions once
    near-noiseless rounds make the likelihood very sharp.
    """

    theta: np.ndarray
    K: int = 20
    delta0: float = 0.1
    sampler: str = "preconditioned"

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.delta0 <= 0.0:
            raise ValueError("delta0 must be positive")
        if self.sampler not in SAMPLERS:
            raise ValueError(f"sampler must be one of {SAMPLERS}")

    def advance(
        self,
        A: np.ndarray,
        b: np.ndarray,
        prior_prec: float,
        fg: float,
        eta_sum: float,
        actions: ActionSet,
        noise: np.ndarray,
    ) -> np.ndarray:
        """Run one round of K Langevin steps from the current position."""
        d = self.theta.shape[0]
        hyper = isinstance(actions, HypercubeD)
        if self.sampler == "plain":
            delta = sgld_step_size(self.delta0, d, eta_sum)
            if hyper:
                theta = kernels.sgld_hypercube(self.theta, A, b, prior_prec, fg, delta, noise)
            else:
                theta = kernels.sgld_explicit(self.theta, A, b, prior_prec, fg, delta, noise, actions.vectors)
        else:
            delta = self.delta0
            P, C = kernels.metric_factors(A, prior_prec)
            feats = _NO_FEATURES[d] if hyper else actions.vectors
            theta = kernels.psgld(self.theta, A, b, prior_prec, fg, delta, noise, P, C, feats, hyper)
        if not np.all(np.isfinite(theta)):
            raise FloatingPointError(
                f"SGLD chain diverged (sampler={self.sampler}, delta={delta:.3g}, fg={fg:.3g})"
            )
        self.theta = theta
        return theta


class _NoFeatures(dict):
    def __missing__(self, d):
        arr = np.zeros((1, d))
        self[d] = arr
        return arr


_NO_FEATURES = _NoFeatures()


def _function_values(f: RewardFunction, records) -> np.ndarray:
    return np.array([f.value(r.features, r.action_id, r.context_id) for r in records])


def discrete_posterior_weights(
    functions: Sequence[RewardFunction],
    transcript: Transcript,
    lambda_t: float,
    current_actions: ActionSet,
    prior: np.ndarray | None = None,
    context_id: int = 0,
) -> np.ndarray:
    """Exact posterior over a finite class, normalised via log-sum-exp."""
    n = len(functions)
    if n == 0:
        raise ValueError("function class is empty")
    p0 = np.full(n, 1.0 / n) if prior is None else np.asarray(prior, dtype=np.float64)
    if p0.shape != (n,) or abs(p0.sum() - 1.0) > 1e-9:
        raise ValueError("prior must be a probability vector over the class")
    logw = np.log(p0) if prior is not None else np.zeros(n)
    if len(transcript):
        _, rewards, w = transcript.arrays()
        for i, f in enumerate(functions):
            logw[i] -= float(w @ (rewards - _function_values(f, transcript)) ** 2)
    if lambda_t:
        logw += lambda_t * np.array([argmax_action(f, current_actions, context_id)[2] for f in functions])
    return _normalise(logw)


def _normalise(logw: np.ndarray) -> np.ndarray:
    m = np.max(logw)
    w = np.exp(logw - m)
    return w / w.sum()


def categorical_draw(weights: np.ndarray, u: float) -> int:
    """Inverse-CDF draw from ``weights`` using a uniform ``u`` in [0, 1)."""
    cdf = np.cumsum(weights)
    k = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    return min(k, len(weights) - 1)


class FGTSVA:
    """Linear FGTS-VA with a warm-started SGLD chain and Gaussian prior N(0, I/d).

    Maintains the weighted statistics A = sum eta phi phi', b = sum eta r phi so
    each gradient costs O(d^2) regardless of the history length.
    """

    name = "fgtsva"

    def __init__(self, d: int, alpha: float, c: float, stream: RoundStream, K: int = 20,
                 delta0: float = 0.1, sampler: str = "preconditioned"):
        self.d = d
        self.schedule = ParamSchedule(alpha, c)
        self.chain = SgldChain(np.zeros(d), K, delta0, sampler)
        self.stream = stream
        self.transcript = Transcript()
        self.A = np.zeros((d, d))
        self.b = np.zeros(d)
        self.eta_sum = 0.0
        self._pending: tuple[np.ndarray, int, float, ActionSet] | None = None
        self.last_lambda = 0.0

    @property
    def theta(self) -> np.ndarray:
        return self.chain.theta

    def act(self, t: int, context_id: int, actions: ActionSet, sigma_sq: float) -> tuple[int, np.ndarray]:
        if self._pending is not None:
            raise AgentProtocolError(f"round {t}: act() called before observe()")
        if actions.dim != self.d:
            raise ValueError("dimension mismatch between agent and action set")
        bs, lam = self.schedule.advance(sigma_sq)
        self.last_lambda = lam
        noise = self.stream.at(t).standard_normal((self.chain.K, self.d))
        try:
            theta = self.chain.advance(self.A, self.b, float(self.d), lam, self.eta_sum, actions, noise)
        except FloatingPointError as exc:
            raise FloatingPointError(f"round {t}: {exc}") from exc
        aid, feat, _ = argmax_linear(theta, actions)
        self._pending = (feat, aid, bs * bs, actions)
        return aid, feat

    def observe(self, reward: float) -> None:
        if self._pending is None:
            raise AgentProtocolError("observe() called without a pending action")
        feat, aid, bs2, actions = self._pending
        self._pending = None
        eta = 1.0 / bs2
        self.A += eta * np.outer(feat, feat)
        self.b += eta * reward * feat
        self.eta_sum += eta
        self.transcript.append(feat, reward, bs2, aid, 0, actions)


class FGTSVADiscrete:
    """FGTS-VA over a finite class with exact categorical sampling.

    Keeps the running weighted loss of every member, so a round costs
    O(|F|) plus one argmax per member.
    """

    name = "fgtsva-discrete"

    def __init__(
        self,
        functions: Sequence[RewardFunction],
        alpha: float,
        c: float,
        stream: RoundStream,
        prior: np.ndarray | None = None,
    ):
        if not functions:
            raise ValueError("function class is empty")
        self.functions = list(functions)
        n = len(self.functions)
        self.log_prior = np.zeros(n) if prior is None else np.log(np.asarray(prior, dtype=np.float64))
        self.schedule = ParamSchedule(alpha, c)
        self.stream = stream
        self.transcript = Transcript()
        self.loss = np.zeros(n)
        self.weights = np.full(n, 1.0 / n)
        self.last_choice = -1
        self.last_lambda = 0.0
        self._maxvals: dict[tuple[int, int], tuple[ActionSet, np.ndarray]] = {}
        self._pending: tuple[np.ndarray, int, float, int] | None = None

    def _max_values(self, actions: ActionSet, context_id: int) -> np.ndarray:
        # the action set is kept alive alongside its values so its id stays unique
        key = (id(actions), context_id)
        if key not in self._maxvals:
            vals = np.array([argmax_action(f, actions, context_id)[2] for f in self.functions])
            self._maxvals[key] = (actions, vals)
        return self._maxvals[key][1]

    def act(self, t: int, context_id: int, actions: ActionSet, sigma_sq: float) -> tuple[int, np.ndarray]:
        if self._pending is not None:
            raise AgentProtocolError(f"round {t}: act() called before observe()")
        bs, lam = self.schedule.advance(sigma_sq)
        self.last_lambda = lam
        logw = self.log_prior - self.loss
        if lam:
            logw = logw + lam * self._max_values(actions, context_id)
        self.weights = _normalise(logw)
        k = categorical_draw(self.weights, self.stream.at(t).random())
        self.last_choice = k
        aid, feat, _ = argmax_action(self.functions[k], actions, context_id)
        self._pending = (np.array(feat, dtype=np.float64), aid, bs * bs, context_id)
        return aid, feat

    def observe(self, reward: float) -> None:
        if self._pending is None:
            raise AgentProtocolError("observe() called without a pending action")
        feat, aid, bs2, ctx = self._pending
        self._pending = None
        preds = np.array([f.value(feat, aid, ctx) for f in self.functions])
        self.loss += (reward - preds) ** 2 / bs2
        self.transcript.append(feat, reward, bs2, aid, ctx)
