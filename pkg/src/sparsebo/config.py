"""Run-file parsing and validation.

A run file is JSON with three sections::

    {
      "search_space": [{"name": "PE-x", "kind": "integer-range",
                        "lower": 1, "upper": 64, "role": "hardware"}, ...],
      "optimizer": {"iterations": 30, "initial_samples": 100, ...},
      "evaluators": {"kind": "synthetic", "problem": "convex-front"}
    }

``evaluators`` is either one backend shared by both objectives or
``{"error": {...}, "edp": {...}}``. Errors name the offending field by its
dotted path; unknown keys are rejected with a spelling suggestion.
"""
from __future__ import annotations

import dataclasses
import difflib
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, NamedTuple

from .acquisition import WEIGHT_SCHEMES
from .errors import ConfigError, ValidationError
from .evaluators import (
    CommandEvaluator,
    EvaluatorBinding,
    RNNEvaluator,
    SyntheticEvaluator,
    TabularEvaluator,
)
from .search_space import SearchSpace


@dataclass(frozen=True)
class OptimizerConfig:
    iterations: int = 30
    initial_samples: int = 100
    pool_size: int = 512
    inducing_m: int | str = "auto"
    weight_scheme: str = "random-dirichlet-per-iteration"
    epsilon_diversity: float = 1e-6
    thresholds: tuple | None = None  # (error_cutoff, log_edp_cutoff)
    seed: int = 0
    fitc_correction: bool = True
    refit_hypers_each_iter: bool = True
    decompose: bool = True
    hyper_subset: int = 300

    def __post_init__(self):
        check = _Checker("optimizer")
        check.int_at_least("iterations", self.iterations, 1)
        check.int_at_least("initial_samples", self.initial_samples, 2)
        check.int_at_least("pool_size", self.pool_size, 1)
        check.int_at_least("hyper_subset", self.hyper_subset, 2)
        if self.inducing_m != "auto":
            check.int_at_least("inducing_m", self.inducing_m, 1)
        if self.weight_scheme not in WEIGHT_SCHEMES:
            raise ConfigError(f"optimizer.weight_scheme: must be one of {list(WEIGHT_SCHEMES)}")
        if not isinstance(self.epsilon_diversity, (int, float)) or self.epsilon_diversity < 0:
            raise ConfigError("optimizer.epsilon_diversity: must be a number >= 0")
        if self.thresholds is not None:
            t = self.thresholds
            if (not isinstance(t, (list, tuple)) or len(t) != 2
                    or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in t)):
                raise ConfigError("optimizer.thresholds: must be [error_cutoff, log_edp_cutoff]")
            object.__setattr__(self, "thresholds", (float(t[0]), float(t[1])))
        for name in ("fitc_correction", "refit_hypers_each_iter", "decompose"):
            if not isinstance(getattr(self, name), bool):
                raise ConfigError(f"optimizer.{name}: must be true or false")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("optimizer.seed: must be an integer")


class _Checker:
    def __init__(self, prefix):
        self.prefix = prefix

    def int_at_least(self, name, value, lo):
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{self.prefix}.{name}: must be an integer, got {value!r}")
        if value < lo:
            raise ConfigError(f"{self.prefix}.{name}: must be >= {lo}, got {value}")


class RunConfig(NamedTuple):
    optimizer: OptimizerConfig
    space: SearchSpace
    evaluators: EvaluatorBinding
    raw: dict
    config_hash: str


def _suggest(word: str, options) -> str:
    """Closest option, preferring ones that share the first letter (typos rarely hit it)."""
    close = difflib.get_close_matches(word, list(options), n=3, cutoff=0.5)
    same_start = [c for c in close if word and c[:1] == word[:1]]
    pick = (same_start or close or [None])[0]
    return f"; did you mean {pick!r}?" if pick else ""


def _reject_unknown(section: str, given: dict, allowed) -> None:
    allowed = list(allowed)
    for key in given:
        if key not in allowed:
            extra = _suggest(key, allowed)
            raise ConfigError(f"{section}.{key}: unknown key{extra}")


_DIM_KEYS = ("name", "kind", "lower", "upper", "role", "levels")
_REQUIRED_DIM_KEYS = ("name", "kind", "role")


def parse_space(items, section="search_space") -> SearchSpace:
    if not isinstance(items, list) or not items:
        raise ConfigError(f"{section}: must be a non-empty list of dimensions")
    dims = []
    for i, item in enumerate(items):
        where = f"{section}[{i}]"
        if not isinstance(item, dict):
            raise ConfigError(f"{where}: must be an object")
        _reject_unknown(where, item, _DIM_KEYS)
        for key in _REQUIRED_DIM_KEYS:
            if key not in item:
                raise ConfigError(f"{where}.{key}: missing required field")
        if "levels" not in item:
            for key in ("lower", "upper"):
                if key not in item:
                    raise ConfigError(f"{where}.{key}: missing required field")
                if not isinstance(item[key], int) or isinstance(item[key], bool):
                    raise ConfigError(f"{where}.{key}: must be an integer, got {item[key]!r}")
        dims.append(item)
    try:
        return SearchSpace.from_dicts(dims)
    except ValidationError as exc:
        raise ConfigError(f"{section}: {exc}") from exc


def _build_backend(block: dict, space: SearchSpace, where: str, base: Path, objective: str | None):
    if not isinstance(block, dict) or "kind" not in block:
        raise ConfigError(f"{where}.kind: missing required field")
    kind = block["kind"]
    try:
        if kind == "synthetic":
            _reject_unknown(where, block, ("kind", "problem"))
            return SyntheticEvaluator(space, block.get("problem", "convex-front"))
        if kind == "tabular":
            _reject_unknown(where, block, ("kind", "path", "key_dims"))
            if "path" not in block:
                raise ConfigError(f"{where}.path: missing required field")
            return TabularEvaluator(_resolve(block["path"], base), space, block.get("key_dims"))
        if kind == "rnn":
            _reject_unknown(where, block, ("kind", "ops"))
            if objective != "edp":
                raise ConfigError(f"{where}.kind: the rnn backend only supplies the edp objective")
            return RNNEvaluator(space, block.get("ops", []))
        if kind == "command":
            _reject_unknown(where, block, ("kind", "command", "timeout"))
            if "command" not in block:
                raise ConfigError(f"{where}.command: missing required field")
            return CommandEvaluator(block["command"], space, float(block.get("timeout", 600.0)), cwd=str(base))
    except ConfigError:
        raise
    except (ValidationError, OSError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    extra = _suggest(str(kind), ["synthetic", "tabular", "rnn", "command"])
    raise ConfigError(f"{where}.kind: unknown backend {kind!r}{extra}")


def _resolve(path: str, base: Path) -> str:
    if path.startswith("builtin:"):
        return path
    p = Path(path)
    return str(p if p.is_absolute() else base / p)


def parse_evaluators(block, space: SearchSpace, base: Path) -> EvaluatorBinding:
    if not isinstance(block, dict):
        raise ConfigError("evaluators: must be an object")
    if "kind" in block:
        shared = _build_backend(block, space, "evaluators", base, None)
        if "error" not in shared.provides:
            raise ConfigError("evaluators.kind: a shared backend must supply both objectives")
        return EvaluatorBinding(shared, shared)
    _reject_unknown("evaluators", block, ("error", "edp"))
    for key in ("error", "edp"):
        if key not in block:
            raise ConfigError(f"evaluators.{key}: missing required field")
    err = _build_backend(block["error"], space, "evaluators.error", base, "error")
    edp = _build_backend(block["edp"], space, "evaluators.edp", base, "edp")
    try:
        return EvaluatorBinding(err, edp)
    except ValidationError as exc:
        raise ConfigError(f"evaluators: {exc}") from exc


def parse_optimizer(block) -> OptimizerConfig:
    if block is None:
        block = {}
    if not isinstance(block, dict):
        raise ConfigError("optimizer: must be an object")
    _reject_unknown("optimizer", block, [f.name for f in dataclasses.fields(OptimizerConfig)])
    return OptimizerConfig(**block)


def config_from_dict(raw: dict, base: Path | str = ".") -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>: run file must hold a JSON object")
    _reject_unknown("<root>", raw, ("search_space", "optimizer", "evaluators"))
    for key in ("search_space", "evaluators"):
        if key not in raw:
            raise ConfigError(f"{key}: missing required section")
    space = parse_space(raw["search_space"])
    opt = parse_optimizer(raw.get("optimizer"))
    binding = parse_evaluators(raw["evaluators"], space, Path(base))
    digest = hashlib.sha256(json.dumps(raw, sort_keys=True).encode()).hexdigest()
    return RunConfig(opt, space, binding, raw, digest)


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"<file>: cannot read {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<file>: {path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return config_from_dict(raw, path.parent)


def with_overrides(cfg: RunConfig, **changes: Any) -> RunConfig:
    opt = dataclasses.replace(cfg.optimizer, **changes)
    return cfg._replace(optimizer=opt)
