"""Hot inner loops: SGLD chains, UCB scoring and rank-one inverse updates.

Each kernel exists twice: an explicit-loop version compiled with numba and a
vectorised numpy version.  The public names at the bottom pick one according
to :data:`feelgood._accel.USE_NUMBA`; both stay importable so tests and the
benchmark can compare them directly.

The SGLD kernels target the quadratic-plus-feel-good log density

    log p(theta) = -(prior_prec / 2) |theta|^2 - (theta' A theta - 2 b' theta)
                   + fg * max_a <theta, phi(a)>

whose gradient is  -prior_prec * theta + 2 (b - A theta) + fg * phi(a*(theta)).
``A`` and ``b`` are the weighted sufficient statistics sum w phi phi' and
sum w r phi of the transcript.

``psgld`` is the constant-metric preconditioned variant

    theta += delta P grad + sqrt(2 delta) C eps,     C C' = P,

which leaves the same density invariant (P does not depend on theta).
:func:`metric_factors` builds P = (prior_prec I + 2A)^-1 and C = L^-T from the
Cholesky factor L of the precision.
"""
from __future__ import annotations

import functools
import math

import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = [
    "sgld_hypercube",
    "sgld_explicit",
    "psgld",
    "metric_factors",
    "ucb_scores",
    "sherman_morrison",
    "hypercube_corners",
]


# --------------------------------------------------------------------------
# numba loop kernels
# --------------------------------------------------------------------------


@njit
def _sgld_hypercube_loop(theta, A, b, prior_prec, fg, delta, noise):
    d = theta.shape[0]
    K = noise.shape[0]
    inv_sqrt_d = 1.0 / math.sqrt(d)
    scale = math.sqrt(2.0 * delta)
    out = theta.copy()
    grad = np.empty(d)
    for k in range(K):
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc += A[i, j] * out[j]
            s = inv_sqrt_d if out[i] >= 0.0 else -inv_sqrt_d
            grad[i] = -prior_prec * out[i] + 2.0 * (b[i] - acc) + fg * s
        for i in range(d):
            out[i] += delta * grad[i] + scale * noise[k, i]
    return out


@njit
def _sgld_explicit_loop(theta, A, b, prior_prec, fg, delta, noise, features):
    d = theta.shape[0]
    K = noise.shape[0]
    n = features.shape[0]
    scale = math.sqrt(2.0 * delta)
    out = theta.copy()
    grad = np.empty(d)
    for k in range(K):
        best = 0
        best_val = -np.inf
        for a in range(n):
            v = 0.0
            for i in range(d):
                v += features[a, i] * out[i]
            if v > best_val:
                best_val = v
                best = a
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc += A[i, j] * out[j]
            grad[i] = -prior_prec * out[i] + 2.0 * (b[i] - acc) + fg * features[best, i]
        for i in range(d):
            out[i] += delta * grad[i] + scale * noise[k, i]
    return out


@njit
def _psgld_loop(theta, A, b, prior_prec, fg, delta, noise, P, C, features, hypercube):
    d = theta.shape[0]
    K = noise.shape[0]
    n = features.shape[0]
    inv_sqrt_d = 1.0 / math.sqrt(d)
    scale = math.sqrt(2.0 * delta)
    out = theta.copy()
    grad = np.empty(d)
    for k in range(K):
        best = 0
        if not hypercube:
            best_val = -np.inf
            for a in range(n):
                v = 0.0
                for i in range(d):
                    v += features[a, i] * out[i]
                if v > best_val:
                    best_val = v
                    best = a
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc += A[i, j] * out[j]
            if hypercube:
                s = inv_sqrt_d if out[i] >= 0.0 else -inv_sqrt_d
            else:
                s = features[best, i]
            grad[i] = -prior_prec * out[i] + 2.0 * (b[i] - acc) + fg * s
        for i in range(d):
            step = 0.0
            kick = 0.0
            for j in range(d):
                step += P[i, j] * grad[j]
                kick += C[i, j] * noise[k, j]
            out[i] += delta * step + scale * kick
    return out


@njit
def _metric_factors_loop(A, prior_prec):
    d = A.shape[0]
    H = 2.0 * A
    for i in range(d):
        H[i, i] += prior_prec
    L = np.linalg.cholesky(H)
    Linv = np.linalg.inv(L)
    C = Linv.T.copy()
    P = C @ Linv
    return P, C


@njit
def _ucb_scores_loop(theta_hat, Sinv, beta, features):
    n, d = features.shape
    out = np.empty(n)
    for a in range(n):
        mean = 0.0
        quad = 0.0
        for i in range(d):
            mean += features[a, i] * theta_hat[i]
            row = 0.0
            for j in range(d):
                row += Sinv[i, j] * features[a, j]
            quad += features[a, i] * row
        out[a] = mean + beta * math.sqrt(max(quad, 0.0))
    return out


@njit
def _sherman_morrison_loop(Sinv, phi, w):
    d = phi.shape[0]
    u = np.empty(d)
    for i in range(d):
        acc = 0.0
        for j in range(d):
            acc += Sinv[i, j] * phi[j]
        u[i] = acc
    denom = 1.0
    for i in range(d):
        denom += w * phi[i] * u[i]
    coef = w / denom
    for i in range(d):
        for j in range(d):
            Sinv[i, j] -= coef * u[i] * u[j]
    return Sinv


# --------------------------------------------------------------------------
# numpy kernels
# --------------------------------------------------------------------------


def _sgld_hypercube_numpy(theta, A, b, prior_prec, fg, delta, noise):
    inv_sqrt_d = 1.0 / math.sqrt(theta.shape[0])
    scale = math.sqrt(2.0 * delta)
    out = theta.copy()
    for eps in noise:
        corner = np.where(out >= 0.0, inv_sqrt_d, -inv_sqrt_d)
        grad = -prior_prec * out + 2.0 * (b - A @ out) + fg * corner
        out += delta * grad + scale * eps
    return out


def _sgld_explicit_numpy(theta, A, b, prior_prec, fg, delta, noise, features):
    scale = math.sqrt(2.0 * delta)
    out = theta.copy()
    for eps in noise:
        best = int(np.argmax(features @ out))
        grad = -prior_prec * out + 2.0 * (b - A @ out) + fg * features[best]
        out += delta * grad + scale * eps
    return out


def _psgld_numpy(theta, A, b, prior_prec, fg, delta, noise, P, C, features, hypercube):
    inv_sqrt_d = 1.0 / math.sqrt(theta.shape[0])
    scale = math.sqrt(2.0 * delta)
    out = theta.copy()
    kicks = noise @ C.T
    for kick in kicks:
        if hypercube:
            pull = np.where(out >= 0.0, inv_sqrt_d, -inv_sqrt_d)
        else:
            pull = features[int(np.argmax(features @ out))]
        grad = -prior_prec * out + 2.0 * (b - A @ out) + fg * pull
        out += delta * (P @ grad) + scale * kick
    return out


def _metric_factors_numpy(A, prior_prec):
    H = 2.0 * A
    H[np.diag_indices(A.shape[0])] += prior_prec
    Linv = np.linalg.inv(np.linalg.cholesky(H))
    return Linv.T @ Linv, Linv.T


def _ucb_scores_numpy(theta_hat, Sinv, beta, features):
    quad = np.einsum("ai,ij,aj->a", features, Sinv, features)
    return features @ theta_hat + beta * np.sqrt(np.maximum(quad, 0.0))


def _sherman_morrison_numpy(Sinv, phi, w):
    u = Sinv @ phi
    Sinv -= (w / (1.0 + w * phi @ u)) * np.outer(u, u)
    return Sinv


@functools.lru_cache(maxsize=16)
def hypercube_corners(d: int) -> np.ndarray:
    """All 2**d corners of {+-1/sqrt(d)}^d; row ``k`` has bit ``i`` of ``k`` set
    exactly when coordinate ``i`` is negative (so row 0 is the all-plus corner).

    The returned array is cached and read-only.
    """
    ids = np.arange(2**d)[:, None]
    bits = (ids >> np.arange(d)[None, :]) & 1
    out = np.where(bits == 1, -1.0, 1.0) / math.sqrt(d)
    out.setflags(write=False)
    return out


if USE_NUMBA:
    sgld_hypercube = _sgld_hypercube_loop
    sgld_explicit = _sgld_explicit_loop
    psgld = _psgld_loop
    metric_factors = _metric_factors_loop
    ucb_scores = _ucb_scores_loop
    sherman_morrison = _sherman_morrison_loop
else:
    sgld_hypercube = _sgld_hypercube_numpy
    sgld_explicit = _sgld_explicit_numpy
    psgld = _psgld_numpy
    metric_factors = _metric_factors_numpy
    ucb_scores = _ucb_scores_numpy
    sherman_morrison = _sherman_morrison_numpy
