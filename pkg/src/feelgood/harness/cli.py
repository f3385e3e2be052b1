"""Command line entry point: ``feelgood run | sweep | diag``."""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .. import diagnostics
from .config import AgentSpec, ConfigError, ExperimentConfig, load_config
from .output import emit_csv, emit_plot, summary_lines
from .runner import run_batch

__all__ = ["main", "build_parser", "sweep_config"]

EXIT_OK, EXIT_CONFIG, EXIT_DIAG = 0, 1, 2

SWEEPABLE = {"c": ("fgtsva", "fgtsva-discrete")}
DIAG_CHECKERS = ("variance-sum", "elliptical", "gdc", "eluder", "mgf")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; that code is taken by diagnostics
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="feelgood", description="Variance-aware Feel-Good TS experiments and diagnostics.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def outputs(sp):
        sp.add_argument("--config", required=True, help="experiment config (JSON)")
        sp.add_argument("--out", help="aggregate CSV path")
        sp.add_argument("--raw", help="per-run CSV path")
        sp.add_argument("--plot", help="SVG path")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--runs", type=int, help="override the number of runs")
        sp.add_argument("--parallel", type=int, default=1, help="worker processes (results do not depend on it)")

    outputs(sub.add_parser("run", help="run the agents of a config"))
    sw = sub.add_parser("sweep", help="run one copy of each sweepable agent per parameter value")
    outputs(sw)
    sw.add_argument("--param", required=True, choices=sorted(SWEEPABLE))
    sw.add_argument("--values", required=True, help="comma separated values, e.g. 0,0.003,0.01,0.03")

    dg = sub.add_parser("diag", help="numerical checks, printed as JSON")
    dg.add_argument("checker", choices=DIAG_CHECKERS)
    dg.add_argument("--instances", type=int, help="number of random instances (mgf: sample count)")
    dg.add_argument("--seed", type=int, default=0)
    dg.add_argument("--declared-norm", type=float, default=4.0, help="mgf only")
    dg.add_argument("--convention", choices=("eighth", "half"), default="eighth",
                    help="mgf only: lambda^2/8 or lambda^2/2 bound")
    return p


def _label(value: float) -> str:
    return f"{value:g}"


def sweep_config(config: ExperimentConfig, param: str, values: Sequence[float]) -> ExperimentConfig:
    """Replace each sweepable agent by one relabelled copy per value.

    Copies share run ids with each other and with the untouched agents, so
    every value is compared on the same environment realisations.
    """
    kinds = SWEEPABLE[param]
    agents: list[AgentSpec] = []
    touched = False
    for spec in config.agents:
        if spec.kind not in kinds:
            agents.append(spec)
            continue
        touched = True
        for v in values:
            params = dict(spec.params)
            params[param] = v
            agents.append(AgentSpec(f"{spec.name}[{param}={_label(v)}]", spec.kind, params))
    if not touched:
        raise ConfigError([f"no agent of kind {list(kinds)} to sweep {param!r} over"])
    names = [a.name for a in agents]
    if len(set(names)) != len(names):
        raise ConfigError(["sweep produced duplicate agent names"])
    return ExperimentConfig(config.d, config.T, config.runs, config.noise, tuple(agents), config.seed)


def _parse_values(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError([f"--values: {exc}"]) from exc
    if not vals:
        raise ConfigError(["--values: no values given"])
    if any(v < 0 for v in vals):
        raise ConfigError(["--values: values must be nonnegative"])
    if len(set(vals)) != len(vals):
        raise ConfigError(["--values: duplicate values"])
    return vals


def _experiment(args) -> int:
    base = config = load_config(args.config).with_overrides(seed=args.seed, runs=args.runs)
    if config.runs < 1:
        raise ConfigError(["--runs must be >= 1"])
    if args.parallel < 1:
        raise ConfigError(["--parallel must be >= 1"])
    if args.command == "sweep":
        values = _parse_values(args.values)
        config = sweep_config(config, args.param, values)
    batch = run_batch(config, parallel=args.parallel)
    if args.command == "sweep":
        by_name = {a.agent: a for a in batch.aggregates}
        swept = [a for a in base.agents if a.kind in SWEEPABLE[args.param]]
        fixed = [by_name[a.name] for a in base.agents if a.kind not in SWEEPABLE[args.param]]
        for v in values:
            tag = f"[{args.param}={_label(v)}]"
            print(f"== {args.param} = {_label(v)}")
            block = [by_name[a.name + tag] for a in swept] + fixed
            print("\n".join(summary_lines(block)))
    else:
        print("\n".join(summary_lines(batch.aggregates)))
    order = [a.name for a in config.agents]
    if args.out:
        emit_csv(batch.aggregates, args.out)
    if args.raw:
        emit_csv(batch.raw, args.raw, order)
    if args.plot:
        emit_plot(batch.aggregates, args.plot,
                  f"d={config.d}, T={config.T}, {type(config.noise).__name__} noise, {config.runs} runs")
    return EXIT_OK


def _diag(args) -> int:
    n = args.instances
    if n is not None and n < 1:
        raise ConfigError(["--instances must be >= 1"])
    if args.checker == "variance-sum":
        report = diagnostics.variance_sum_sweep(n or 1000, args.seed)
    elif args.checker == "elliptical":
        report = diagnostics.elliptical_sweep(n or 1000, args.seed)
    elif args.checker == "gdc":
        report = diagnostics.check_prop1(n or 200, args.seed)
    elif args.checker == "eluder":
        report = diagnostics.check_prop2(n or 200, args.seed)
    else:
        report = diagnostics.mgf_report(args.declared_norm, args.convention,
                                        n_samples=max(100_000, n or 0), seed=args.seed)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK if report.holds else EXIT_DIAG


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "diag":
            return _diag(args)
        return _experiment(args)
    except ConfigError as exc:
        print(f"feelgood: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"feelgood: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
