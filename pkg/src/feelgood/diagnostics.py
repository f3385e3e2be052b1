"""Numerical checks for the inequalities the regret analysis rests on.

Everything here is enumeration scale: the decoupling coefficient and the
Eluder dimension are computed exactly for finite classes evaluated on a short
sequence of points.  Random sweeps draw instance ``i`` from
``SeedSequence([seed, i])`` so any reported witness can be rebuilt alone.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .fgtsva import linear_dc_bound

__all__ = [
    "Report",
    "GdcInstance",
    "DEFAULT_GAMMA_GRID",
    "check_variance_sum_lemma",
    "elliptical_potential_check",
    "min_gdc_bruteforce",
    "gen_eluder_dim",
    "linear_dc_bound",
    "random_linear_instance",
    "random_tabular_instance",
    "check_prop1",
    "check_prop2",
    "variance_sum_sweep",
    "elliptical_sweep",
    "empirical_mgf_check",
    "mgf_report",
]

DET_TOL = 1e-9
DEFAULT_GAMMA_GRID = np.logspace(-3.0, 3.0, 64)


@dataclass
class Report:
    checker: str
    instances: int
    failures: int
    max_ratio: float
    witness: dict[str, Any] | None = None
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict[str, Any]:
        out = {
            "checker": self.checker,
            "instances": self.instances,
            "failures": self.failures,
            "max_ratio": self.max_ratio,
            "holds": self.holds,
        }
        if self.witness is not None:
            out["witness"] = self.witness
        if self.details:
            out["details"] = self.details
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def _instance_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & ((1 << 64) - 1), i]))


# --------------------------------------------------------------------------
# variance sum and elliptical potential
# --------------------------------------------------------------------------


def check_variance_sum_lemma(bar_sigmas: Sequence[float]) -> tuple[float, float, bool]:
    """sum_t s_t^2 / sqrt(L_t) against 2 sqrt(L_T), where L_t = sum_{s<=t} s_s^2."""
    s2 = np.asarray(bar_sigmas, dtype=np.float64) ** 2
    if s2.size and not np.all(s2 > 0.0):
        raise ValueError("every bar sigma must be positive")
    running = np.cumsum(s2)
    lhs = float(np.sum(s2 / np.sqrt(running))) if s2.size else 0.0
    rhs = 2.0 * math.sqrt(running[-1]) if s2.size else 0.0
    return lhs, rhs, lhs <= rhs + 1e-12


def elliptical_potential_check(
    features: Sequence[np.ndarray] | np.ndarray, betas: Sequence[float], lam: float, epsilon: float
) -> tuple[float, float, float, bool]:
    """Clipped potential sum vs. the log-det and closed-form bounds.

    Returns ``(lhs, logdet_bound, bound, holds)`` where
    lhs = sum_t min(beta_t |phi_t|^2_{Sigma_{t-1}^-1}, 1),
    logdet_bound = 2 (log det Sigma_T - log det Sigma_0) and
    bound = 2 d log(1 + epsilon T / (d lam)).
    """
    betas = np.asarray(betas, dtype=np.float64)
    phis = np.asarray(features, dtype=np.float64)
    T = betas.shape[0]
    if phis.size == 0:
        phis = phis.reshape(0, 1)
    if phis.shape[0] != T:
        raise ValueError("features and betas must have the same length")
    if lam <= 0.0:
        raise ValueError("lambda must be positive")
    if np.any(betas <= 0.0) or np.any(betas > epsilon * (1 + 1e-12)):
        raise ValueError("betas must lie in (0, epsilon]")
    if T and np.max(np.linalg.norm(phis, axis=1)) > 1.0 + 1e-12:
        raise ValueError("features must have norm <= 1")
    d = phis.shape[1]
    Sigma = lam * np.eye(d)
    lhs = 0.0
    for phi, beta in zip(phis, betas):
        quad = float(phi @ np.linalg.solve(Sigma, phi))
        lhs += min(beta * quad, 1.0)
        Sigma += beta * np.outer(phi, phi)
    sign, logdet = np.linalg.slogdet(Sigma)
    assert sign > 0, "Sigma lost positive definiteness"
    logdet_bound = 2.0 * (logdet - d * math.log(lam))
    bound = linear_dc_bound(d, T, lam, epsilon)
    holds = bool(lhs <= logdet_bound + DET_TOL and logdet_bound <= bound + DET_TOL)
    return lhs, float(logdet_bound), bound, holds


# --------------------------------------------------------------------------
# decoupling coefficient and Eluder dimension
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GdcInstance:
    """A finite class evaluated on a point sequence.

    ``values[i, t]`` is f_i(z_t); ``star`` indexes f_*.  Build from reward
    function objects with :meth:`from_functions`.
    """

    values: np.ndarray
    star: int
    beta: np.ndarray
    lam: float
    epsilon: float
    dim: int = 0  # feature dimension when the class is linear, else 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        b = np.asarray(self.beta, dtype=np.float64)
        if v.ndim != 2 or b.ndim != 1 or v.shape[1] != b.shape[0]:
            raise ValueError("values must be (class size, T) and beta of length T")
        if not 0 <= self.star < v.shape[0]:
            raise ValueError("star must index a class member")
        if self.lam <= 0.0:
            raise ValueError("lambda must be positive")
        if np.any(b <= 0.0) or np.any(b > self.epsilon * (1 + 1e-12)):
            raise ValueError("beta must lie in (0, epsilon]")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "beta", b)

    @classmethod
    def from_functions(cls, functions, points, beta, lam: float, epsilon: float | None = None, star: int = 0):
        """``points`` are ``(feature, action_id, context_id)`` triples."""
        values = np.array([[f.value(phi, a, x) for (phi, a, x) in points] for f in functions], dtype=np.float64)
        values = values.reshape(len(functions), len(points))
        beta = np.asarray(beta, dtype=np.float64)
        eps = float(beta.max()) if epsilon is None and beta.size else (1.0 if epsilon is None else epsilon)
        return cls(values, star, beta, lam, eps)

    @property
    def T(self) -> int:
        return self.beta.shape[0]

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def describe(self) -> dict[str, Any]:
        return {
            "values": self.values.tolist(),
            "star": self.star,
            "beta": self.beta.tolist(),
            "lambda": self.lam,
            "epsilon": self.epsilon,
            "dim": self.dim,
        }


def gdc_per_gamma(instance: GdcInstance, gamma_grid: Sequence[float] | np.ndarray = DEFAULT_GAMMA_GRID) -> np.ndarray:
    """The tightest dc value valid for each single gamma.

    The sup over sequences {f_t} splits across rounds, so round t contributes
    max_f [g_f(z_t) - (gamma / beta_t) sum_{s<t} beta_s g_f(z_s)^2] with
    g = f - f_*.
    """
    gammas = np.asarray(gamma_grid, dtype=np.float64)
    if gammas.size == 0:
        raise ValueError("gamma grid is empty")
    if np.any(gammas <= 0.0):
        raise ValueError("gamma values must be positive")
    g = instance.values - instance.values[instance.star]
    beta = instance.beta
    # hist[i, t] = sum_{s<t} beta_s g_i(z_s)^2
    hist = np.concatenate([np.zeros((g.shape[0], 1)), np.cumsum(beta * g**2, axis=1)[:, :-1]], axis=1)
    ratio = hist / beta
    rounds = g[None, :, :] - gammas[:, None, None] * ratio[None, :, :]
    total = rounds.max(axis=1).sum(axis=1) - gammas * instance.lam * np.sum(1.0 / beta)
    return total / (1.0 + 1.0 / (4.0 * gammas))


def min_gdc_bruteforce(instance: GdcInstance, gamma_grid: Sequence[float] | np.ndarray = DEFAULT_GAMMA_GRID) -> float:
    """Smallest dc making the decoupling inequality hold for every gamma in the grid.

    Only finitely many gamma are examined, so this is a lower bound on the
    coefficient over all gamma > 0.
    """
    return max(float(np.max(gdc_per_gamma(instance, gamma_grid))), 0.0)


def gen_eluder_dim(instance: GdcInstance) -> float:
    """sum_t min(1, beta_t D^2_t) with the pairwise sup taken exhaustively."""
    v = instance.values
    diff = v[:, None, :] - v[None, :, :]
    sq = diff**2
    beta = instance.beta
    hist = np.concatenate([np.zeros(sq.shape[:2] + (1,)), np.cumsum(beta * sq, axis=2)[:, :, :-1]], axis=2)
    D2 = (sq / (instance.lam + hist)).max(axis=(0, 1))
    return float(np.sum(np.minimum(1.0, beta * D2)))


def _unit_ball_grid(d: int, per_axis: int) -> np.ndarray:
    axis = np.linspace(-1.0, 1.0, per_axis)
    pts = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    return pts[np.linalg.norm(pts, axis=1) <= 1.0 + 1e-12]


# largest odd resolution per dimension keeping the ball grid at <= 64 points
_GRID_MAX = {1: 63, 2: 9, 3: 5}


def random_linear_instance(rng: np.random.Generator, max_d: int = 3, max_T: int = 8) -> GdcInstance:
    """Linear class on a ball grid (theta_* = 0 without loss of generality)."""
    d = int(rng.integers(1, max_d + 1))
    per_axis = int(rng.choice(np.arange(3, _GRID_MAX[d] + 1, 2)))
    thetas = _unit_ball_grid(d, per_axis)
    T = int(rng.integers(1, max_T + 1))
    dirs = rng.standard_normal((T, d))
    dirs /= np.maximum(np.linalg.norm(dirs, axis=1, keepdims=True), 1e-300)
    radii = np.where(rng.random(T) < 0.5, 1.0, rng.random(T))
    phis = dirs * radii[:, None]
    epsilon = float(rng.uniform(0.05, 4.0))
    beta = np.where(rng.random(T) < 0.3, epsilon, rng.uniform(0.0, epsilon, T))
    beta = np.maximum(beta, 1e-3 * epsilon)
    lam = float(rng.choice([0.1, 1.0, 10.0]))
    star = int(np.argmin(np.linalg.norm(thetas, axis=1)))
    return GdcInstance(thetas @ phis.T, star, beta, lam, epsilon, dim=d)


def random_tabular_instance(rng: np.random.Generator, max_size: int = 16, max_T: int = 6) -> GdcInstance:
    """Random [0, 1]-valued tabular class over a few context-action cells."""
    size = int(rng.integers(1, max_size + 1))
    cells = int(rng.integers(1, 5))
    T = int(rng.integers(1, max_T + 1))
    table = rng.random((size, cells))
    if rng.random() < 0.3:
        table = np.round(table)
    z = rng.integers(0, cells, T)
    epsilon = float(rng.uniform(0.05, 4.0))
    beta = np.maximum(rng.uniform(0.0, epsilon, T), 1e-3 * epsilon)
    lam = float(rng.choice([0.1, 1.0, 10.0]))
    return GdcInstance(table[:, z], int(rng.integers(0, size)), beta, lam, epsilon)


def _sweep(name: str, n: int, seed: int, make, value, bound) -> Report:
    failures = 0
    worst = 0.0
    witness = None
    for i in range(n):
        inst = make(_instance_rng(seed, i))
        v, b = value(inst), bound(inst)
        if b > 0.0:
            worst = max(worst, v / b)
        elif v > 0.0:
            worst = math.inf
        if v > b + DET_TOL:
            failures += 1
            if witness is None:
                witness = {"index": i, "value": v, "bound": b, "instance": inst.describe()}
    return Report(name, n, failures, worst, witness)


def check_prop1(n_instances: int = 200, seed: int = 0, gamma_grid=DEFAULT_GAMMA_GRID) -> Report:
    """Brute-forced dc on discretised linear classes vs. 2 d log(1 + eps T / (d lam))."""
    return _sweep(
        "gdc-linear",
        n_instances,
        seed,
        random_linear_instance,
        lambda inst: min_gdc_bruteforce(inst, gamma_grid),
        lambda inst: linear_dc_bound(inst.dim, inst.T, inst.lam, inst.epsilon),
    )


def check_prop2(n_instances: int = 200, seed: int = 0, gamma_grid=DEFAULT_GAMMA_GRID) -> Report:
    """Brute-forced dc vs. the generalized Eluder dimension on tabular classes."""
    return _sweep(
        "gdc-eluder",
        n_instances,
        seed,
        random_tabular_instance,
        lambda inst: min_gdc_bruteforce(inst, gamma_grid),
        gen_eluder_dim,
    )


def variance_sum_sweep(n_instances: int = 1000, seed: int = 0, max_len: int = 1000) -> Report:
    failures, worst, witness = 0, 0.0, None
    for i in range(n_instances):
        rng = _instance_rng(seed, i)
        n = int(rng.integers(1, max_len + 1))
        # log-uniform scales over 8 decades, with occasional repeated blocks
        s = np.exp(rng.uniform(-9.0, 9.0, n))
        if rng.random() < 0.2:
            s = np.repeat(s[: max(1, n // 10)], 10)[:n]
        lhs, rhs, ok = check_variance_sum_lemma(s)
        worst = max(worst, lhs / rhs)
        if not ok:
            failures += 1
            if witness is None:
                witness = {"index": i, "lhs": lhs, "rhs": rhs}
    return Report("variance-sum", n_instances, failures, worst, witness)


def elliptical_sweep(n_instances: int = 1000, seed: int = 0, max_d: int = 5, max_T: int = 50) -> Report:
    failures, worst, witness = 0, 0.0, None
    for i in range(n_instances):
        rng = _instance_rng(seed, i)
        d = int(rng.integers(1, max_d + 1))
        T = int(rng.integers(0, max_T + 1))
        epsilon = float(rng.uniform(0.01, 4.0))
        lam = float(rng.choice([0.1, 1.0, 10.0]))
        phis = rng.standard_normal((T, d))
        phis /= np.maximum(np.linalg.norm(phis, axis=1, keepdims=True), 1e-300)
        phis *= rng.random((T, 1)) ** (1.0 / d)
        beta = np.maximum(rng.uniform(0.0, epsilon, T), 1e-6)
        lhs, logdet, bound, ok = elliptical_potential_check(phis, beta, lam, epsilon)
        if bound > 0.0:
            worst = max(worst, lhs / bound)
        if not ok:
            failures += 1
            if witness is None:
                witness = {"index": i, "lhs": lhs, "logdet_bound": logdet, "bound": bound}
    return Report("elliptical", n_instances, failures, worst, witness)


# --------------------------------------------------------------------------
# subgaussian moment generating function
# --------------------------------------------------------------------------

_CONVENTIONS = {"eighth": 8.0, "half": 2.0}
_EXP_LIMIT = 700.0


def empirical_mgf_check(
    sample: Callable[[np.random.Generator, int], np.ndarray],
    declared_norm: float,
    lambda_grid: Sequence[float],
    n_samples: int = 100_000,
    convention: str = "eighth",
    seed: int = 0,
) -> dict[str, Any]:
    """Check log E exp(lam eps) <= declared_norm lam^2 / k for each lam.

    ``k`` is 8 under the "eighth" convention and 2 under the "half"
    one, so Normal(0, v) is tight at declared_norm = 4v and v respectively.
    The estimate gets 3 standard errors of slack (delta method on the log of
    the sample mean).  A lambda whose exponent would overflow is reported as
    out of range rather than checked.
    """
    if convention not in _CONVENTIONS:
        raise ValueError(f"convention must be one of {sorted(_CONVENTIONS)}")
    if n_samples < 100_000:
        raise ValueError("need at least 1e5 samples")
    k = _CONVENTIONS[convention]
    eps = np.asarray(sample(_instance_rng(seed, 0), n_samples), dtype=np.float64)
    rows = []
    failures = 0
    out_of_range = []
    worst = 0.0
    for lam in lambda_grid:
        x = lam * eps
        top = float(np.max(x))
        bound = declared_norm * lam * lam / k
        if not np.all(np.isfinite(x)) or top > _EXP_LIMIT:
            out_of_range.append(float(lam))
            continue
        w = np.exp(x - top)
        mean = float(np.mean(w))
        log_mgf = top + math.log(mean)
        se = float(np.std(w)) / (math.sqrt(n_samples) * mean)
        ok = log_mgf <= bound + 3.0 * se
        if not ok:
            failures += 1
        if bound > 0.0:
            worst = max(worst, log_mgf / bound)
        elif log_mgf > 3.0 * se:
            worst = math.inf
        rows.append({"lambda": float(lam), "log_mgf": log_mgf, "bound": bound, "stderr": se, "ok": ok})
    return {
        "declared_norm": declared_norm,
        "convention": convention,
        "n_samples": n_samples,
        "rows": rows,
        "out_of_range": out_of_range,
        "failures": failures,
        "max_ratio": worst,
        "holds": failures == 0,
    }


def mgf_report(
    declared_norm: float = 4.0,
    convention: str = "eighth",
    lambda_grid: Sequence[float] = (-1.0, -0.5, 0.5, 1.0),
    n_samples: int = 100_000,
    seed: int = 0,
) -> Report:
    """Standard normal at the declared norm, plus zero noise."""
    gauss = empirical_mgf_check(lambda g, n: g.standard_normal(n), declared_norm, lambda_grid, n_samples,
                                convention, seed)
    zero = empirical_mgf_check(lambda g, n: np.zeros(n), declared_norm, lambda_grid, n_samples, convention, seed)
    checks = {"normal(0,1)": gauss, "zero": zero}
    failures = gauss["failures"] + zero["failures"]
    worst = max(gauss["max_ratio"], zero["max_ratio"])
    return Report("mgf", len(checks) * len(lambda_grid), failures, worst, details=checks)
