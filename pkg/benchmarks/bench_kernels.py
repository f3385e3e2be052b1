"""Time the numba loop kernels against their numpy twins, then a full episode
under each backend.

    python3 benchmarks/bench_kernels.py [--repeat N] [--no-episode]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from feelgood import kernels
from feelgood._accel import HAVE_NUMBA


def _case(d, n_actions=None, K=20, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((50, d)) / np.sqrt(d)
    A = X.T @ X
    b = X.T @ rng.standard_normal(50)
    theta = rng.standard_normal(d)
    noise = rng.standard_normal((K, d))
    feats = kernels.hypercube_corners(d) if n_actions is None else rng.standard_normal((n_actions, d)) / np.sqrt(d)
    P, C = kernels._metric_factors_numpy(A, float(d))
    Sinv = np.linalg.inv(A + np.eye(d))
    return dict(theta=theta, A=A, b=b, noise=noise, feats=np.ascontiguousarray(feats), P=P, C=C, Sinv=Sinv)


def kernel_table(repeat):
    rows = []
    for d in (5, 10):
        c = _case(d)
        pairs = {
            "sgld_hypercube": lambda impl: impl(c["theta"], c["A"], c["b"], float(d), 0.1, 0.01, c["noise"]),
            "sgld_explicit": lambda impl: impl(c["theta"], c["A"], c["b"], float(d), 0.1, 0.01, c["noise"], c["feats"]),
            "psgld": lambda impl: impl(c["theta"], c["A"], c["b"], float(d), 0.1, 0.1, c["noise"], c["P"], c["C"],
                                       c["feats"], False),
            "metric_factors": lambda impl: impl(c["A"], float(d)),
            "ucb_scores": lambda impl: impl(c["theta"], c["Sinv"], 1.5, c["feats"]),
            "sherman_morrison": lambda impl: impl(c["Sinv"].copy(), c["theta"] / np.linalg.norm(c["theta"]), 0.5),
        }
        for name, call in pairs.items():
            loop = getattr(kernels, f"_{name}_loop")
            vec = getattr(kernels, f"_{name}_numpy")
            call(loop)  # compile outside the timer
            n = 200
            t_loop = min(timeit.repeat(lambda: call(loop), number=n, repeat=repeat)) / n
            t_vec = min(timeit.repeat(lambda: call(vec), number=n, repeat=repeat)) / n
            rows.append((name, d, t_loop, t_vec))
    return rows


_EPISODE = """
import time
from feelgood.harness import parse_config, run_batch
cfg = parse_config({"d": 5, "T": 2000, "runs": 1, "env": {"noise": {"kind": "sparse", "p": 0.1}},
                    "agents": [{"name": "fgtsva", "params": {"c": 0.003}}, {"name": "weighted-oful"}]})
run_batch(cfg.with_overrides(T=20))
t0 = time.perf_counter()
run_batch(cfg.with_overrides(runs=3))
print((time.perf_counter() - t0) / 3)
"""


def episode_time(backend):
    env = dict(os.environ, FEELGOOD_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", _EPISODE], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-episode", action="store_true")
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba is not installed; the loop kernels run as plain python")
    print(f"{'kernel':<18}{'d':>4}{'loop (us)':>12}{'numpy (us)':>12}{'speedup':>9}")
    for name, d, t_loop, t_vec in kernel_table(args.repeat):
        print(f"{name:<18}{d:>4}{t_loop * 1e6:>12.2f}{t_vec * 1e6:>12.2f}{t_vec / t_loop:>9.1f}")
    if not args.no_episode:
        print()
        print("one T=2000 run of fgtsva + weighted-oful, d=5")
        for backend in ("numba", "numpy"):
            print(f"  FEELGOOD_BACKEND={backend:<6} {episode_time(backend):.3f} s")


if __name__ == "__main__":
    main()
