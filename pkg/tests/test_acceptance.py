"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (the lines are repeated
in the terminal summary) or as a script, ``python3 tests/test_acceptance.py``.
"""
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from feelgood.baselines import fgts_typeA_grad, fgts_typeA_log_posterior
from feelgood.core import Explicit, HypercubeD, Tabular, Transcript
from feelgood.diagnostics import (
    check_prop1,
    check_prop2,
    elliptical_sweep,
    empirical_mgf_check,
    variance_sum_sweep,
)
from feelgood.fgtsva import (
    FGTSVADiscrete,
    categorical_draw,
    discrete_posterior_weights,
    grad_log_posterior,
    log_posterior_unnorm,
)
from feelgood.harness import load_config, run_batch
from feelgood.harness.cli import sweep_config
from feelgood.rng import AGENT, RoundStream

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
RESULTS: list[str] = []


def _report(n, name, ok, detail):
    line = f"criterion {n:>2} [{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# 1 ----------------------------------------------------------------------


def test_c01_exact_sampler_fidelity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    acts = Explicit(np.eye(3))
    fs = [Tabular(rng.random((1, 3))) for _ in range(4)]
    stream = RoundStream(101, 0, AGENT)
    agent = FGTSVADiscrete(fs, alpha=1.0, c=0.2, stream=stream)
    for t in range(1, 6):
        agent.act(t, 0, acts, 1.0)
        agent.observe(float(rng.random()))
    agent.act(6, 0, acts, 1.0)
    lam = agent.last_lambda
    assert lam > 0
    w = discrete_posterior_weights(fs, agent.transcript, lam, acts)
    consistent = np.allclose(agent.weights, w, atol=1e-12)
    n = 10_000
    draws = np.array([categorical_draw(w, stream.at(t).random()) for t in range(1, n + 1)])
    counts = np.bincount(draws, minlength=4)
    p = stats.chisquare(counts, n * w).pvalue
    dt = time.perf_counter() - t0
    _report(1, "exact-sampler fidelity", consistent and p > 0.01 and dt < 1.0,
            f"chi-square p={p:.3f} (> 0.01), agent weights match={consistent}, {dt:.2f}s (< 1s)")


# 2 ----------------------------------------------------------------------


def _fd_worst(f, g, d, rng, n_points=100, h=1e-7, boundary=1e-6):
    worst = 0.0
    done = 0
    while done < n_points:
        th = rng.standard_normal(d)
        if np.min(np.abs(th)) < boundary:
            continue
        grad = g(th)
        fd = np.array([(f(th + h * e) - f(th - h * e)) / (2 * h) for e in np.eye(d)])
        worst = max(worst, np.linalg.norm(fd - grad) / max(np.linalg.norm(grad), 1e-12))
        done += 1
    return worst


def test_c02_gradient_correctness():
    t0 = time.perf_counter()
    d = 5
    H = HypercubeD(d)
    rng = np.random.default_rng(202)
    worst = {}
    for n in (0, 1, 50):
        tr = Transcript()
        for _ in range(n):
            tr.append(H.feature(int(rng.integers(len(H)))), rng.normal(), float(rng.choice([0.01, 1.0, 2.0])),
                      actions=H)
        worst[f"va/{n}"] = _fd_worst(lambda th: log_posterior_unnorm(th, tr, 0.37, H),
                                     lambda th: grad_log_posterior(th, tr, 0.37, H), d, rng)
        worst[f"typeA/{n}"] = _fd_worst(lambda th: fgts_typeA_log_posterior(th, tr, 1.0, 0.2),
                                        lambda th: fgts_typeA_grad(th, tr, 1.0, 0.2), d, rng)
    dt = time.perf_counter() - t0
    top = max(worst.values())
    _report(2, "gradient correctness", top < 1e-5 and dt < 5.0,
            f"max relative error {top:.2e} (< 1e-5) over 6 configurations x 100 points, {dt:.2f}s (< 5s)")


# 3-6 --------------------------------------------------------------------


def _timed(fn, *args):
    t0 = time.perf_counter()
    rep = fn(*args)
    return rep, time.perf_counter() - t0


def test_c03_variance_sum_lemma():
    rep, dt = _timed(variance_sum_sweep, 1000, 303)
    _report(3, "variance-sum lemma", rep.failures == 0 and rep.instances == 1000 and dt < 1.0,
            f"{rep.failures} failures / {rep.instances}, max lhs/rhs {rep.max_ratio:.4f}, {dt:.2f}s (< 1s)")


def test_c04_elliptical_potential():
    rep, dt = _timed(elliptical_sweep, 1000, 404)
    _report(4, "elliptical potential lemma", rep.failures == 0 and rep.instances == 1000 and dt < 30.0,
            f"{rep.failures} failures / {rep.instances}, max lhs/bound {rep.max_ratio:.4f}, {dt:.2f}s (< 30s)")


def test_c05_linear_decoupling_bound():
    rep, dt = _timed(check_prop1, 200, 505)
    _report(5, "linear-class dc bound", rep.failures == 0 and rep.instances == 200 and dt < 120.0,
            f"{rep.failures} failures / {rep.instances}, max dc/bound {rep.max_ratio:.4f}, {dt:.2f}s (< 120s)")


def test_c06_dc_below_eluder():
    rep, dt = _timed(check_prop2, 200, 606)
    _report(6, "dc <= generalized Eluder dimension", rep.failures == 0 and rep.instances == 200 and dt < 120.0,
            f"{rep.failures} failures / {rep.instances}, max dc/dim {rep.max_ratio:.4f}, {dt:.2f}s (< 120s)")


# 7-8 --------------------------------------------------------------------


def _ordering(config_name):
    cfg = load_config(CONFIGS / config_name)
    assert (cfg.d, cfg.T, cfg.runs) == (5, 2000, 100)
    batch = run_batch(cfg)
    va = batch.final_regrets("fgtsva")
    parts, ok = [f"fgtsva {va.mean():.2f}"], True
    for base in ("fgts-a", "weighted-oful"):
        other = batch.final_regrets(base)
        p = stats.ttest_rel(other, va, alternative="greater").pvalue
        ok &= bool(other.mean() > va.mean() and p < 0.05)
        parts.append(f"{base} {other.mean():.2f} (paired p={p:.1e})")
    return ok, ", ".join(parts)


@pytest.mark.slow
def test_c07_ordering_sparse():
    ok, detail = _ordering("sparse_noise.json")
    _report(7, "ordering, sparse noise", ok, detail)


@pytest.mark.slow
def test_c08_ordering_dense():
    ok, detail = _ordering("dense_noise.json")
    _report(8, "ordering, dense noise", ok, detail)


# 9 ----------------------------------------------------------------------


def test_c09_deterministic_plateau():
    t0 = time.perf_counter()
    cfg = load_config(CONFIGS / "deterministic_discrete.json")
    assert cfg.T == 500 and cfg.runs == 100 and cfg.agents[0].params["class_size"] == 16
    batch = run_batch(cfg)
    traces = np.stack([r.cum_regret for r in batch.raw])
    total = traces[:, -1].mean()
    late = (traces[:, -1] - traces[:, 249]).mean()
    dt = time.perf_counter() - t0
    share = late / total if total > 0 else 0.0
    _report(9, "deterministic plateau", share < 0.05 and dt < 60.0,
            f"rounds 251-500 carry {100 * share:.3f}% of mean regret {total:.3f} (< 5%), {dt:.1f}s (< 60s)")


# 10 ---------------------------------------------------------------------


@pytest.mark.slow
def test_c10_feel_good_ablation():
    values = [0.0, 0.003, 0.01, 0.03]
    cfg = sweep_config(load_config(CONFIGS / "feel_good_ablation.json"), "c", values)
    batch = run_batch(cfg)
    finals = {v: batch.final_regrets(f"fgtsva[c={v:g}]") for v in values}
    means = {v: f.mean() for v, f in finals.items()}
    best = min(values, key=lambda v: means[v])
    if best == 0.0:
        ok, p = False, float("nan")
    else:
        p = stats.ttest_rel(finals[0.0], finals[best], alternative="greater").pvalue
        ok = bool(p < 0.05)
    table = ", ".join(f"c={v:g}: {means[v]:.3f}" for v in values)
    _report(10, "feel-good ablation", ok, f"mean final regret {table}; best c={best:g}, paired p vs c=0 = {p:.3f} (< 0.05)")


# 11 ---------------------------------------------------------------------


def test_c11_subgaussian_mgf():
    t0 = time.perf_counter()
    grid = [-1.0, -0.5, 0.5, 1.0]
    normal = lambda g, n: g.standard_normal(n)
    at4 = empirical_mgf_check(normal, 4.0, grid, 100_000, "eighth", seed=11)
    at1 = empirical_mgf_check(normal, 1.0, grid, 100_000, "eighth", seed=11)
    zero = empirical_mgf_check(lambda g, n: np.zeros(n), 0.0, grid, 100_000, "eighth", seed=11)
    dt = time.perf_counter() - t0
    ok = at4["holds"] and not at1["holds"] and zero["holds"] and dt < 5.0
    _report(11, "subgaussian MGF diagnostic", ok,
            f"N(0,1) at norm 4 holds={at4['holds']}, at norm 1 holds={at1['holds']}, "
            f"zero noise holds={zero['holds']}, {dt:.2f}s (< 5s)")


# 12 ---------------------------------------------------------------------


def test_c12_determinism_across_parallelism():
    outs = []
    with tempfile.TemporaryDirectory() as tmp:
        for par in ("1", "8"):
            agg, raw = Path(tmp) / f"agg{par}.csv", Path(tmp) / f"raw{par}.csv"
            subprocess.run([sys.executable, "-m", "feelgood", "run", "--config", str(CONFIGS / "sparse_noise.json"),
                            "--runs", "8", "--seed", "12", "--parallel", par, "--out", str(agg), "--raw", str(raw)],
                           check=True, capture_output=True)
            outs.append((agg.read_bytes(), raw.read_bytes()))
    same = outs[0] == outs[1]
    _report(12, "determinism across --parallel", same,
            f"aggregate and raw CSV byte-identical at --parallel 1 vs 8: {same} ({len(outs[0][1])} raw bytes)")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_c") and callable(fn):
            try:
                fn()
            except AssertionError:
                failed += 1
    print(f"{12 - failed}/12 criteria passed")
    sys.exit(1 if failed else 0)
