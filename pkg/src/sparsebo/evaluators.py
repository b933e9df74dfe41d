"""Objective backends: analytical RNN cost, tabular benchmark, synthetic, external command.

Every backend maps a :class:`~sparsebo.search_space.Candidate` to an
:class:`EvaluationResult` and bumps a shared, thread-safe call counter.
"""
from __future__ import annotations

import csv
import difflib
import math
import subprocess
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError, EvaluationError, TableLookupError, TableParseError, ValidationError
from .search_space import Candidate, SearchSpace


@dataclass(frozen=True)
class EvaluationResult:
    error_metric: float = math.nan
    energy: float = math.nan  # J
    latency: float = math.nan  # s
    edp: float = math.nan  # J*s
    cycles: float | None = None
    evaluator_calls: int = 1

    @classmethod
    def from_energy_latency(cls, error_metric, energy, latency, **kw):
        if energy < 0 or latency < 0:
            raise DomainError("energy and latency must be >= 0")
        return cls(error_metric, energy, latency, energy * latency, **kw)


class CallCounter:
    def __init__(self):
        self._n = 0
        self._lock = threading.Lock()

    def increment(self) -> int:
        with self._lock:
            self._n += 1
            return self._n

    @property
    def value(self) -> int:
        return self._n


# --------------------------------------------------------------------------
# analytical RNN model


@dataclass(frozen=True)
class RNNCostParams:
    """One operation type of the RNN cost model.

    Frequencies are in MHz; ``alpha`` is typically 28 / node_nm.
    """

    e_ref: float  # J per op at f_ref
    freq_mhz: float
    f_ref_mhz: float
    beta: float
    d: float  # data dimension, e.g. hidden size
    n: float  # ops per data unit
    n_pe: float
    alpha: float = 1.0
    eta: float = 1.0

    def __post_init__(self):
        if not (self.freq_mhz > 0 and self.f_ref_mhz > 0):
            raise DomainError("clock frequencies must be > 0")
        if not 0.5 <= self.beta <= 2.0:
            raise DomainError(f"beta must lie in [0.5, 2.0], got {self.beta}")
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError(f"eta must lie in [0, 1], got {self.eta}")
        if self.n_pe < 1:
            raise DomainError(f"n_pe must be >= 1, got {self.n_pe}")


def rnn_cost(ops: Sequence[RNNCostParams]) -> EvaluationResult:
    """Energy, latency and EDP summed over operation types."""
    energy = 0.0
    latency = 0.0
    for op in ops:
        energy += op.e_ref * (op.f_ref_mhz / op.freq_mhz) ** op.beta * op.d * op.n * op.alpha * op.eta
        latency += op.d * op.n / (op.n_pe * op.freq_mhz * 1e6)
    return EvaluationResult(math.nan, energy, latency, energy * latency)


# --------------------------------------------------------------------------
# backends


class Evaluator:
    """Base class. ``provides`` names the objectives a backend can supply."""

    provides: tuple = ("error", "edp")
    log_edp: bool = True

    def __init__(self, counter: CallCounter | None = None):
        self.counter = counter or CallCounter()

    def __call__(self, c: Candidate) -> EvaluationResult:
        self.counter.increment()
        return self._evaluate(c)

    def _evaluate(self, c: Candidate) -> EvaluationResult:
        raise NotImplementedError


def _key_str(key: tuple) -> str:
    return ",".join(str(k) for k in key)


class TabularEvaluator(Evaluator):
    """Lookup in a CSV keyed by one column per key dimension.

    Value columns are either ``err, edp`` or ``err, energy_j, cycles,
    freq_mhz``; in the latter case latency = cycles / (freq_mhz * 1e6).
    """

    def __init__(self, path, space: SearchSpace, key_dims: Sequence[str] | None = None,
                 counter: CallCounter | None = None):
        super().__init__(counter)
        self.space = space
        if key_dims is None:
            key_dims = [space.dims[i].name for i in space.role_indices("software")] or list(space.names)
        self.key_dims = list(key_dims)
        self._key_idx = [space.names.index(k) for k in self.key_dims]
        self.rows = load_table(path, self.key_dims)
        self.path = str(path)

    def lookup(self, key: tuple) -> EvaluationResult:
        skey = tuple(str(k) for k in key)
        try:
            return self.rows[skey]
        except KeyError:
            near = difflib.get_close_matches(_key_str(skey), [_key_str(k) for k in self.rows], n=3, cutoff=0.0)
            raise TableLookupError(f"no table row for key {_key_str(skey)!r}; nearest: {near}") from None

    def _evaluate(self, c: Candidate) -> EvaluationResult:
        return self.lookup(tuple(c.values[i] for i in self._key_idx))


def _open_table(path):
    path = str(path)
    if path.startswith("builtin:"):
        return resources.files("sparsebo").joinpath("data", path[len("builtin:"):]).open("r", newline="")
    return open(path, "r", newline="")


def load_table(path, key_dims: Sequence[str]) -> dict:
    rows: dict = {}
    with _open_table(path) as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise TableParseError(f"{path}: empty table") from None
        missing = [k for k in key_dims if k not in header]
        if missing:
            raise TableParseError(f"{path}: line 1: missing key columns {missing}")
        if "err" not in header:
            raise TableParseError(f"{path}: line 1: missing column 'err'")
        direct = "edp" in header
        if not direct and not all(c in header for c in ("energy_j", "cycles", "freq_mhz")):
            raise TableParseError(f"{path}: line 1: need 'edp' or 'energy_j, cycles, freq_mhz'")
        col = {h: i for i, h in enumerate(header)}
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not x.strip() for x in raw):
                continue
            if len(raw) != len(header):
                raise TableParseError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(raw)}")
            key = tuple(raw[col[k]].strip() for k in key_dims)
            if key in rows:
                raise TableParseError(f"{path}: line {lineno}: duplicate key {_key_str(key)!r}")
            try:
                err = float(raw[col["err"]])
                if direct:
                    res = EvaluationResult(err, math.nan, math.nan, float(raw[col["edp"]]))
                else:
                    energy = float(raw[col["energy_j"]])
                    cycles = float(raw[col["cycles"]])
                    freq = float(raw[col["freq_mhz"]])
                    if freq <= 0:
                        raise ValueError("freq_mhz must be > 0")
                    res = EvaluationResult.from_energy_latency(err, energy, cycles / (freq * 1e6), cycles=cycles)
            except (ValueError, DomainError) as exc:
                raise TableParseError(f"{path}: line {lineno}: {exc}") from None
            rows[key] = res
    if not rows:
        raise TableParseError(f"{path}: table has no data rows")
    return rows


def synthetic_biobjective(u: Sequence[float], problem: str = "convex-front") -> tuple[float, float]:
    """Two-objective test problems on [0,1]^d with the front at g = 1.

    convex-front:  f2 = g (1 - sqrt(f1 / g))
    concave-front: f2 = g (1 - (f1 / g)^2)
    with f1 = u1 and g = 1 + 9 mean(u2..ud).
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size < 1 or np.any(u < -1e-12) or np.any(u > 1 + 1e-12):
        raise ValidationError("synthetic problems take a point of [0, 1]^d")
    u = np.clip(u, 0.0, 1.0)
    f1 = float(u[0])
    g = 1.0 + 9.0 * float(np.mean(u[1:])) if u.size > 1 else 1.0
    if problem == "convex-front":
        f2 = g * (1.0 - math.sqrt(f1 / g))
    elif problem == "concave-front":
        f2 = g * (1.0 - (f1 / g) ** 2)
    else:
        raise ValidationError(f"unknown synthetic problem {problem!r}")
    return f1, f2


def convex_front_hypervolume(ref=(1.1, 1.1)) -> float:
    """Exact dominated hypervolume of the convex-front true front w.r.t. ``ref``."""
    r1, r2 = ref
    if r1 < 1 or r2 < 1:
        raise ValidationError("closed form assumes ref >= (1, 1)")
    # integral of (r2 - (1 - sqrt x)) over [0, 1], plus the strip (1, r1] under (1, 0)
    return (r2 - 1.0) + 2.0 / 3.0 + (r1 - 1.0) * r2


class SyntheticEvaluator(Evaluator):
    """Objectives are reported as (error_metric, edp) = (f1, f2); f2 is not log-scaled."""

    log_edp = False

    def __init__(self, space: SearchSpace, problem: str = "convex-front", counter: CallCounter | None = None):
        super().__init__(counter)
        if problem not in ("convex-front", "concave-front"):
            raise ValidationError(f"unknown synthetic problem {problem!r}")
        self.space = space
        self.problem = problem

    def _evaluate(self, c: Candidate) -> EvaluationResult:
        f1, f2 = synthetic_biobjective(self.space.encode(c.values), self.problem)
        return EvaluationResult(f1, math.nan, math.nan, f2)


class RNNEvaluator(Evaluator):
    """EDP from the analytical RNN model with op fields bound to dimensions.

    Each op field is a number, a dimension name, or a list of those whose
    product is taken (e.g. ``["PE-x", "PE-y"]`` for ``n_pe``).
    """

    provides = ("edp",)
    FIELDS = ("e_ref", "freq_mhz", "f_ref_mhz", "beta", "d", "n", "n_pe", "alpha", "eta")

    def __init__(self, space: SearchSpace, ops: Sequence[dict], counter: CallCounter | None = None):
        super().__init__(counter)
        self.space = space
        self.ops = []
        for i, op in enumerate(ops):
            unknown = set(op) - set(self.FIELDS)
            if unknown:
                raise ValidationError(f"ops[{i}]: unknown fields {sorted(unknown)}")
            for name, value in op.items():
                for term in value if isinstance(value, list) else [value]:
                    if isinstance(term, str) and term not in space.names:
                        raise ValidationError(f"ops[{i}].{name}: unknown dimension {term!r}")
            self.ops.append(dict(op))

    def _resolve(self, setting, values: dict) -> float:
        terms = setting if isinstance(setting, list) else [setting]
        out = 1.0
        for t in terms:
            out *= float(values[t]) if isinstance(t, str) else float(t)
        return out

    def _evaluate(self, c: Candidate) -> EvaluationResult:
        values = c.as_dict(self.space)
        params = [
            RNNCostParams(**{k: self._resolve(v, values) for k, v in op.items()}) for op in self.ops
        ]
        return rnn_cost(params)


class CommandEvaluator(Evaluator):
    """Run an external command per candidate.

    The candidate goes to stdin as ``name=value`` lines; the command prints
    ``err=<x>`` and ``edp=<y>`` (or two bare numbers) on stdout.
    """

    def __init__(self, command: Sequence[str] | str, space: SearchSpace, timeout: float = 600.0,
                 counter: CallCounter | None = None, cwd=None):
        super().__init__(counter)
        self.command = [command] if isinstance(command, str) else list(command)
        self.space = space
        self.timeout = timeout
        self.cwd = cwd

    def _evaluate(self, c: Candidate) -> EvaluationResult:
        payload = "".join(f"{k}={v}\n" for k, v in zip(self.space.names, c.values))
        try:
            proc = subprocess.run(self.command, input=payload, capture_output=True, text=True,
                                  timeout=self.timeout, cwd=self.cwd)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise EvaluationError(f"{self.command[0]}: {exc}") from exc
        if proc.returncode != 0:
            raise EvaluationError(f"{self.command[0]} exited {proc.returncode}: {proc.stderr.strip()[:200]}")
        return parse_command_output(proc.stdout)


def parse_command_output(text: str) -> EvaluationResult:
    found: dict = {}
    bare = []
    for tok in text.replace(",", " ").split():
        if "=" in tok:
            k, _, v = tok.partition("=")
            found[k.strip()] = v
        else:
            bare.append(tok)
    try:
        if "err" in found and "edp" in found:
            return EvaluationResult(float(found["err"]), math.nan, math.nan, float(found["edp"]))
        if len(bare) >= 2:
            return EvaluationResult(float(bare[0]), math.nan, math.nan, float(bare[1]))
    except ValueError:
        pass
    raise EvaluationError(f"could not parse evaluator output {text.strip()[:200]!r}")


@dataclass
class EvaluatorBinding:
    """Which backend supplies each objective. A shared backend is called once per candidate."""

    error: Evaluator
    edp: Evaluator
    counter: CallCounter = field(default_factory=CallCounter)

    def __post_init__(self):
        self.error.counter = self.counter
        self.edp.counter = self.counter
        if "error" not in self.error.provides:
            raise ValidationError(f"{type(self.error).__name__} cannot supply the error objective")
        if "edp" not in self.edp.provides:
            raise ValidationError(f"{type(self.edp).__name__} cannot supply the edp objective")

    @property
    def log_edp(self) -> bool:
        return self.edp.log_edp

    def evaluate(self, c: Candidate) -> tuple[float, float, EvaluationResult]:
        if self.error is self.edp:
            res = self.error(c)
            return res.error_metric, res.edp, res
        r_err = self.error(c)
        r_edp = self.edp(c)
        merged = EvaluationResult(r_err.error_metric, r_edp.energy, r_edp.latency, r_edp.edp, r_edp.cycles, 2)
        return r_err.error_metric, r_edp.edp, merged
