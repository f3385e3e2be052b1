"""Experiment configuration: JSON loading and exhaustive validation."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema

from ..environments import Constant, Deterministic, Dense, NoiseSchedule, Sparse

__all__ = ["ConfigError", "AgentSpec", "ExperimentConfig", "load_config", "parse_config", "SCHEMA", "AGENT_PARAMS"]


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every problem found."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid config:\n  " + "\n  ".join(self.errors))


_sampler = {"enum": ["preconditioned", "plain"]}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_posint = {"type": "integer", "minimum": 1}

AGENT_PARAMS: dict[str, dict[str, Any]] = {
    "fgtsva": {"c": _nonneg, "alpha": _pos, "K": _posint, "delta0": _pos, "class_size": _pos, "dc": _pos,
               "sampler": _sampler},
    "fgtsva-discrete": {"c": _nonneg, "alpha": _pos, "class_size": _posint},
    "weighted-oful": {"nu": _nonneg, "delta_conf": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                      "lambda_reg": _pos, "alpha": _pos, "beta": _nonneg},
    "fgts-a": {"eta": _pos, "lambda0": _nonneg, "K": _posint, "delta0": _pos, "sampler": _sampler},
    "oracle": {},
}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "feelgood experiment config",
    "type": "object",
    "additionalProperties": False,
    "required": ["d", "T", "runs", "env", "agents"],
    "properties": {
        "d": _posint,
        "T": _posint,
        "runs": _posint,
        "seed": {"type": "integer", "minimum": -(2**63), "maximum": 2**64 - 1},
        "env": {
            "type": "object",
            "additionalProperties": False,
            "required": ["noise"],
            "properties": {
                "noise": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["sparse", "dense", "deterministic", "constant"]},
                        "p": {"type": "number", "minimum": 0, "maximum": 1},
                        "v": _nonneg,
                    },
                },
            },
        },
        "agents": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "kind": {"enum": sorted(AGENT_PARAMS)},
                    "params": {"type": "object"},
                },
            },
        },
    },
}


@dataclass(frozen=True)
class AgentSpec:
    name: str
    kind: str
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    d: int
    T: int
    runs: int
    noise: NoiseSchedule
    agents: tuple[AgentSpec, ...]
    seed: int = 0

    def with_overrides(self, **kw) -> "ExperimentConfig":
        data = {f: getattr(self, f) for f in ("d", "T", "runs", "noise", "agents", "seed")}
        data.update({k: v for k, v in kw.items() if v is not None})
        return ExperimentConfig(**data)


def _path(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def parse_config(raw: Any) -> ExperimentConfig:
    """Validate a decoded JSON document and build the config.

    All problems are collected and raised together as a :class:`ConfigError`.
    """
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = [f"{_path(e)}: {e.message}" for e in sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))]
    agents: list[AgentSpec] = []
    if isinstance(raw, dict):
        nz = raw.get("env", {}).get("noise") if isinstance(raw.get("env"), dict) else None
        if isinstance(nz, dict):
            kind = nz.get("kind")
            if kind == "sparse" and "p" not in nz:
                errors.append("env/noise: sparse noise needs 'p'")
            if kind == "constant" and "v" not in nz:
                errors.append("env/noise: constant noise needs 'v'")
            extra = set(nz) - {"kind"} - {"sparse": {"p"}, "constant": {"v"}}.get(kind, set())
            if extra and kind in {"sparse", "dense", "deterministic", "constant"}:
                errors.append(f"env/noise: unexpected keys for {kind} noise: {sorted(extra)}")
        seen: set[str] = set()
        for i, spec in enumerate(raw.get("agents", []) if isinstance(raw.get("agents"), list) else []):
            if not isinstance(spec, dict) or not isinstance(spec.get("name"), str):
                continue
            name = spec["name"]
            if name in seen:
                errors.append(f"agents/{i}/name: duplicate agent name {name!r}")
            seen.add(name)
            kind = spec.get("kind", name)
            if kind not in AGENT_PARAMS:
                errors.append(f"agents/{i}: unknown agent kind {kind!r} (set 'kind' to one of {sorted(AGENT_PARAMS)})")
                continue
            params = spec.get("params", {})
            if not isinstance(params, dict):
                continue
            pschema = {"type": "object", "additionalProperties": False, "properties": AGENT_PARAMS[kind]}
            for e in jsonschema.Draft202012Validator(pschema).iter_errors(params):
                errors.append(f"agents/{i}/params/{_path(e)}: {e.message}".replace("/<root>", ""))
            if kind == "fgtsva" and "c" not in params and not {"class_size", "dc"} <= set(params):
                errors.append(f"agents/{i}/params: fgtsva needs 'c' or both 'class_size' and 'dc'")
            if kind == "weighted-oful" and isinstance(raw.get("d"), int) and raw["d"] > 12:
                errors.append(f"agents/{i}: weighted-oful enumerates the hypercube and needs d <= 12")
            agents.append(AgentSpec(name, kind, copy.deepcopy(params)))
    if errors:
        raise ConfigError(errors)
    nz = raw["env"]["noise"]
    noise = {
        "sparse": lambda: Sparse(float(nz["p"])),
        "dense": Dense,
        "deterministic": Deterministic,
        "constant": lambda: Constant(float(nz["v"])),
    }[nz["kind"]]()
    return ExperimentConfig(
        d=raw["d"], T=raw["T"], runs=raw["runs"], noise=noise, agents=tuple(agents), seed=raw.get("seed", 0)
    )


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read config file {str(p)!r}: {exc.strerror or exc}"]) from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{p}: invalid JSON ({exc})"]) from exc
    return parse_config(raw)
