"""Comparison agents: variance-weighted OFUL and Type A Feel-Good TS."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import ActionSet, HypercubeD, Linear, Transcript, argmax_action, argmax_linear
from .fgtsva import AgentProtocolError, SgldChain, bar_sigma
from .rng import RoundStream

__all__ = [
    "WeightedRidgeState",
    "weighted_ridge_update",
    "oful_beta",
    "oful_select",
    "fgts_typeA_log_posterior",
    "fgts_typeA_grad",
    "WeightedOFUL",
    "FGTSTypeA",
    "Oracle",
]

MAX_ENUM_DIM = 12
RESOLVE_EVERY = 256


@dataclass
class WeightedRidgeState:
    Sigma: np.ndarray
    Sigma_inv: np.ndarray
    b: np.ndarray
    theta_hat: np.ndarray
    lam_reg: float
    n_updates: int = 0

    @classmethod
    def fresh(cls, d: int, lam_reg: float = 1.0) -> "WeightedRidgeState":
        if lam_reg <= 0.0:
            raise ValueError("lam_reg must be positive")
        return cls(lam_reg * np.eye(d), np.eye(d) / lam_reg, np.zeros(d), np.zeros(d), lam_reg)


def weighted_ridge_update(
    state: WeightedRidgeState, phi: np.ndarray, reward: float, bar_sigma_sq: float
) -> WeightedRidgeState:
    """Add one sample with weight 1/bar_sigma_sq (in place).

    The inverse is maintained by Sherman-Morrison and re-solved densely every
    ``RESOLVE_EVERY`` updates to bound round-off drift.
    """
    if not bar_sigma_sq > 0.0:
        raise ValueError("bar_sigma_sq must be positive")
    phi = np.asarray(phi, dtype=np.float64)
    w = 1.0 / bar_sigma_sq
    state.Sigma += w * np.outer(phi, phi)
    state.b += w * reward * phi
    state.n_updates += 1
    if state.n_updates % RESOLVE_EVERY == 0:
        state.Sigma_inv = np.linalg.inv(state.Sigma)
    else:
        kernels.sherman_morrison(state.Sigma_inv, phi, w)
    state.theta_hat = state.Sigma_inv @ state.b
    return state


def oful_beta(
    d: int, T: int, alpha: float, lam_reg: float = 1.0, nu: float = 1.0, delta_conf: float = 0.01
) -> float:
    """nu sqrt(d log((1 + T / (alpha^2 lam_reg)) / delta_conf)) + sqrt(lam_reg)."""
    return nu * math.sqrt(d * math.log((1.0 + T / (alpha**2 * lam_reg)) / delta_conf)) + math.sqrt(lam_reg)


def oful_select(state: WeightedRidgeState, actions: ActionSet, beta: float) -> tuple[int, np.ndarray]:
    """argmax_a <theta_hat, phi(a)> + beta |phi(a)|_{Sigma^-1}, lowest index on ties.

    Hypercube sets are enumerated, so their dimension is capped at 12.
    """
    if beta < 0.0:
        raise ValueError("beta must be nonnegative")
    if isinstance(actions, HypercubeD) and actions.d > MAX_ENUM_DIM:
        raise ValueError(f"UCB enumeration over the hypercube needs d <= {MAX_ENUM_DIM}")
    feats = actions.features()
    scores = kernels.ucb_scores(state.theta_hat, state.Sigma_inv, float(beta), feats)
    k = int(np.argmax(scores))
    return k, feats[k]


def _check_typeA(transcript: Transcript) -> None:
    for rec in transcript:
        if rec.actions is None:
            raise ValueError(f"record {rec.round} lacks its action set (needed for the feel-good term)")


def fgts_typeA_log_posterior(
    theta: np.ndarray, transcript: Transcript, eta: float, lam: float, prior_precision: float | None = None
) -> float:
    """-(p/2)|theta|^2 + sum_s [ -eta (r_s - <theta, phi_s>)^2 + lam max_{a in A_s} <theta, phi(a)> ]."""
    theta = np.asarray(theta, dtype=np.float64)
    _check_typeA(transcript)
    prec = float(theta.shape[0]) if prior_precision is None else prior_precision
    out = -0.5 * prec * float(theta @ theta)
    for rec in transcript:
        out -= eta * (rec.reward - float(theta @ rec.features)) ** 2
        if lam:
            out += lam * argmax_linear(theta, rec.actions)[2]
    return out


def fgts_typeA_grad(
    theta: np.ndarray, transcript: Transcript, eta: float, lam: float, prior_precision: float | None = None
) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    _check_typeA(transcript)
    prec = float(theta.shape[0]) if prior_precision is None else prior_precision
    g = -prec * theta
    for rec in transcript:
        g = g + 2.0 * eta * (rec.reward - float(theta @ rec.features)) * rec.features
        if lam:
            g = g + lam * argmax_linear(theta, rec.actions)[1]
    return g


class WeightedOFUL:
    """UCB on a variance-weighted ridge estimate (weights 1/max(sigma_t, alpha)^2)."""

    name = "weighted-oful"

    def __init__(self, d: int, T: int, alpha: float, lam_reg: float = 1.0, nu: float = 1.0,
                 delta_conf: float = 0.01, beta: float | None = None):
        self.state = WeightedRidgeState.fresh(d, lam_reg)
        self.alpha = alpha
        self.beta = oful_beta(d, T, alpha, lam_reg, nu, delta_conf) if beta is None else float(beta)
        self._pending: tuple[np.ndarray, float] | None = None

    def act(self, t: int, context_id: int, actions: ActionSet, sigma_sq: float) -> tuple[int, np.ndarray]:
        if self._pending is not None:
            raise AgentProtocolError(f"round {t}: act() called before observe()")
        aid, feat = oful_select(self.state, actions, self.beta)
        self._pending = (np.array(feat), bar_sigma(sigma_sq, self.alpha) ** 2)
        return aid, feat

    def observe(self, reward: float) -> None:
        if self._pending is None:
            raise AgentProtocolError("observe() called without a pending action")
        feat, bs2 = self._pending
        self._pending = None
        weighted_ridge_update(self.state, feat, reward, bs2)


class FGTSTypeA:
    """Feel-Good TS with the bonus accumulated over every past round, SGLD-sampled.

    Uses the unweighted square loss eta (r - <theta, phi>)^2; the action set must
    stay fixed across rounds so the accumulated bonus is (t - 1) lam max_a.
    """

    name = "fgts-a"

    def __init__(self, d: int, T: int, stream: RoundStream, eta: float = 1.0, lambda0: float = 1.0,
                 K: int = 20, delta0: float = 0.1, sampler: str = "preconditioned"):
        if eta <= 0.0:
            raise ValueError("eta must be positive")
        self.d = d
        self.eta = eta
        self.lam = lambda0 / math.sqrt(T)
        self.chain = SgldChain(np.zeros(d), K, delta0, sampler)
        self.stream = stream
        self.A = np.zeros((d, d))
        self.b = np.zeros(d)
        self.n = 0
        self.transcript = Transcript()
        self._actions: ActionSet | None = None
        self._pending: tuple[np.ndarray, int, ActionSet] | None = None

    def act(self, t: int, context_id: int, actions: ActionSet, sigma_sq: float) -> tuple[int, np.ndarray]:
        if self._pending is not None:
            raise AgentProtocolError(f"round {t}: act() called before observe()")
        if self._actions is None:
            self._actions = actions
        elif actions is not self._actions and actions != self._actions:
            raise ValueError("FGTSTypeA needs a fixed action set across rounds")
        noise = self.stream.at(t).standard_normal((self.chain.K, self.d))
        try:
            theta = self.chain.advance(self.A, self.b, float(self.d), self.lam * self.n,
                                       self.eta * self.n, actions, noise)
        except FloatingPointError as exc:
            raise FloatingPointError(f"round {t}: {exc}") from exc
        aid, feat, _ = argmax_linear(theta, actions)
        self._pending = (feat, aid, actions)
        return aid, feat

    def observe(self, reward: float) -> None:
        if self._pending is None:
            raise AgentProtocolError("observe() called without a pending action")
        feat, aid, actions = self._pending
        self._pending = None
        self.A += self.eta * np.outer(feat, feat)
        self.b += self.eta * reward * feat
        self.n += 1
        # sigma_bar_sq slot carries 1/eta so Transcript.arrays() weights match the loss
        self.transcript.append(feat, reward, 1.0 / self.eta, aid, 0, actions)


    @property
    def theta(self) -> np.ndarray:
        return self.chain.theta


class Oracle:
    """Plays the true best action every round."""

    name = "oracle"

    def __init__(self, f_star: Linear):
        self.f_star = f_star

    def act(self, t: int, context_id: int, actions: ActionSet, sigma_sq: float) -> tuple[int, np.ndarray]:
        aid, feat, _ = argmax_action(self.f_star, actions, context_id)
        return aid, feat

    def observe(self, reward: float) -> None:
        pass
