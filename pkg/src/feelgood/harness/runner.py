"""Episodes, paired batches and aggregation."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..baselines import FGTSTypeA, Oracle, WeightedOFUL
from ..core import Linear, argmax_action
from ..environments import LinearEnv, sample_theta_star
from ..fgtsva import FGTSVA, FGTSVADiscrete, default_hyperparams, linear_dc_bound
from ..rng import AGENT, SETUP, RoundStream
from .config import AgentSpec, ExperimentConfig

__all__ = ["RunResult", "Aggregate", "BatchResult", "run_episode", "build_agent", "make_env", "run_batch", "aggregate"]


@dataclass(frozen=True, eq=False)
class RunResult:
    agent: str
    run_id: int
    cum_regret: np.ndarray
    sigma_sq: np.ndarray


@dataclass(frozen=True, eq=False)
class Aggregate:
    agent: str
    mean: np.ndarray
    stderr: np.ndarray
    runs: int


@dataclass(frozen=True, eq=False)
class BatchResult:
    config: ExperimentConfig
    raw: list[RunResult]
    aggregates: list[Aggregate]

    def final_regrets(self, agent: str) -> np.ndarray:
        """Final cumulative regret per run id (sorted by run id)."""
        rows = sorted((r for r in self.raw if r.agent == agent), key=lambda r: r.run_id)
        return np.array([r.cum_regret[-1] for r in rows])


def run_episode(env: LinearEnv, agent, T: int, name: str = "agent", run_id: int = 0) -> RunResult:
    """Play ``T`` rounds of begin_round -> act -> step -> observe."""
    regret = np.empty(T)
    sig = np.empty(T)
    total = 0.0
    best: dict[tuple[int, int], float] = {}
    theta_star = env.f_star.theta
    for t in range(1, T + 1):
        try:
            ctx, actions, sigma_sq = env.begin_round(t)
            _, feat = agent.act(t, ctx, actions, sigma_sq)
            reward = env.step(t, feat)
            agent.observe(reward)
        except Exception as exc:
            raise RuntimeError(f"{name} run {run_id}: protocol failure at round {t}: {exc}") from exc
        key = (id(actions), ctx)
        if key not in best:
            best[key] = argmax_action(env.f_star, actions, ctx)[2]
        total += max(best[key] - float(theta_star @ feat), 0.0)
        regret[t - 1] = total
        sig[t - 1] = sigma_sq
    return RunResult(name, run_id, regret, sig)


def make_env(config: ExperimentConfig, run_id: int) -> LinearEnv:
    return LinearEnv.sampled(config.d, config.noise, config.T, config.seed, run_id)


def _discrete_class(config: ExperimentConfig, run_id: int, theta_star: np.ndarray, size: int) -> list[Linear]:
    # round 1 of the setup stream; round 0 produced theta_star
    gen = RoundStream(config.seed, run_id, SETUP).at(1)
    others = [sample_theta_star(gen, config.d) for _ in range(size - 1)]
    members = [theta_star] + others
    order = gen.permutation(size)
    return [Linear(members[i]) for i in order]


def build_agent(spec: AgentSpec, config: ExperimentConfig, env: LinearEnv, run_id: int):
    p = dict(spec.params)
    T, d = config.T, config.d
    stream = RoundStream(config.seed, run_id, AGENT)
    if spec.kind == "fgtsva":
        alpha, c = default_hyperparams(T, p.get("class_size"), p.get("dc"), p.get("c"))
        alpha = p.get("alpha", alpha)
        return FGTSVA(d, alpha, c, stream, K=p.get("K", 20), delta0=p.get("delta0", 0.1),
                      sampler=p.get("sampler", "preconditioned"))
    if spec.kind == "fgtsva-discrete":
        size = p.get("class_size", 16)
        dc = linear_dc_bound(d, T)
        alpha, c = default_hyperparams(T, size, dc, p.get("c"))
        alpha = p.get("alpha", alpha)
        return FGTSVADiscrete(_discrete_class(config, run_id, env.theta_star, size), alpha, c, stream)
    if spec.kind == "weighted-oful":
        alpha = p.get("alpha", 1.0 / math.sqrt(T))
        return WeightedOFUL(d, T, alpha, p.get("lambda_reg", 1.0), p.get("nu", 1.0),
                            p.get("delta_conf", 0.01), p.get("beta"))
    if spec.kind == "fgts-a":
        return FGTSTypeA(d, T, stream, p.get("eta", 1.0), p.get("lambda0", 1.0),
                         p.get("K", 20), p.get("delta0", 0.1), p.get("sampler", "preconditioned"))
    if spec.kind == "oracle":
        return Oracle(env.f_star)
    raise ValueError(f"unknown agent kind {spec.kind!r}")


def _episode_task(args: tuple[ExperimentConfig, int, int]) -> RunResult:
    config, agent_index, run_id = args
    spec = config.agents[agent_index]
    env = make_env(config, run_id)
    agent = build_agent(spec, config, env, run_id)
    return run_episode(env, agent, config.T, spec.name, run_id)


def aggregate(raw: list[RunResult], agent_names: list[str]) -> list[Aggregate]:
    out = []
    for name in agent_names:
        rows = sorted((r for r in raw if r.agent == name), key=lambda r: r.run_id)
        if not rows:
            continue
        mat = np.stack([r.cum_regret for r in rows])
        n = mat.shape[0]
        mean = mat.mean(axis=0)
        se = mat.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(mat.shape[1])
        out.append(Aggregate(name, mean, se, n))
    return out


def run_batch(config: ExperimentConfig, parallel: int = 1) -> BatchResult:
    """Run every (run_id, agent) episode; results are collected in canonical order.

    All agents sharing a run id see the same theta_star and noise realisation.
    """
    tasks = [(config, a, r) for a in range(len(config.agents)) for r in range(config.runs)]
    if parallel > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            raw = list(pool.map(_episode_task, tasks, chunksize=max(1, len(tasks) // (4 * parallel))))
    else:
        raw = [_episode_task(t) for t in tasks]
    return BatchResult(config, raw, aggregate(raw, [a.name for a in config.agents]))
