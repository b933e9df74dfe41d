"""Joint software/hardware search space, unit-cube encoding and LHS.

Every dimension is discrete. Surrogates see points through :meth:`SearchSpace.encode`,
which maps a setting into ``[0, 1]``; proposals are snapped back onto the grid
with :meth:`SearchSpace.decode`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import (
    BoundsError,
    DecompositionError,
    EmptyRequestError,
    ValidationError,
)

KINDS = ("integer-range", "categorical", "log-integer-range")
ROLES = ("software", "hardware")


@dataclass(frozen=True)
class DimensionSpec:
    """One axis of the search space.

    For categorical axes ``levels`` holds the labels; when omitted the labels
    are the integers ``lower..upper``. When given, ``lower``/``upper`` are
    reset to the index range ``0..len(levels)-1``.
    """

    name: str
    kind: str
    lower: int
    upper: int
    role: str
    levels: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"{self.name}: kind must be one of {KINDS}, got {self.kind!r}")
        if self.role not in ROLES:
            raise ValidationError(f"{self.name}: role must be one of {ROLES}, got {self.role!r}")
        if self.levels is not None:
            if self.kind != "categorical":
                raise ValidationError(f"{self.name}: levels only apply to categorical dimensions")
            levels = tuple(self.levels)
            if len(levels) < 1:
                raise ValidationError(f"{self.name}: categorical dimension needs at least one level")
            if len(set(levels)) != len(levels):
                raise ValidationError(f"{self.name}: duplicate categorical levels")
            object.__setattr__(self, "levels", levels)
            object.__setattr__(self, "lower", 0)
            object.__setattr__(self, "upper", len(levels) - 1)
        if int(self.lower) != self.lower or int(self.upper) != self.upper:
            raise ValidationError(f"{self.name}: bounds must be integers")
        if self.lower > self.upper:
            raise ValidationError(f"{self.name}: lower ({self.lower}) > upper ({self.upper})")
        if self.kind == "log-integer-range" and self.lower < 1:
            raise ValidationError(f"{self.name}: log-integer-range needs lower >= 1")

    @property
    def n_levels(self) -> int:
        return self.upper - self.lower + 1

    def level_labels(self) -> tuple:
        if self.levels is not None:
            return self.levels
        return tuple(range(self.lower, self.upper + 1))

    def contains(self, value: Any) -> bool:
        if self.kind == "categorical":
            return value in self.level_labels()
        try:
            iv = int(value)
        except (TypeError, ValueError):
            return False
        return iv == value and self.lower <= iv <= self.upper

    def encode(self, value: Any) -> float:
        if not self.contains(value):
            raise BoundsError(f"{self.name}: value {value!r} outside [{self.lower}, {self.upper}]")
        if self.kind == "categorical":
            i = self.level_labels().index(value)
            return (i + 0.5) / self.n_levels
        if self.lower == self.upper:
            return 0.0
        if self.kind == "integer-range":
            return (int(value) - self.lower) / (self.upper - self.lower)
        lo, hi = math.log(self.lower), math.log(self.upper)
        return (math.log(int(value)) - lo) / (hi - lo)

    def decode(self, u: float) -> Any:
        if not (-1e-12 <= u <= 1.0 + 1e-12) or not np.isfinite(u):
            raise BoundsError(f"{self.name}: unit coordinate {u!r} outside [0, 1]")
        u = min(max(float(u), 0.0), 1.0)
        if self.kind == "log-integer-range":
            lo, hi = math.log(self.lower), math.log(self.upper)
            v = int(round(math.exp(lo + u * (hi - lo))))
            return min(max(v, self.lower), self.upper)
        idx = min(int(math.floor(u * self.n_levels)), self.n_levels - 1)
        if self.kind == "categorical":
            return self.level_labels()[idx]
        return self.lower + idx

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind, "lower": self.lower,
             "upper": self.upper, "role": self.role}
        if self.levels is not None:
            d["levels"] = list(self.levels)
        return d


@dataclass(frozen=True)
class Candidate:
    """A point of the joint space.

    ``unit`` is where the point sits in ``[0, 1]^d``. Candidates built from
    settings carry the canonical encoding; LHS draws keep the raw stratified
    coordinate they were drawn at, so ``unit`` may differ from
    ``space.encode(values)`` while lying in the same cell.
    """

    values: tuple
    unit: tuple = field(compare=False)

    def as_dict(self, space: "SearchSpace") -> dict:
        return dict(zip(space.names, self.values))


@dataclass(frozen=True)
class SearchSpace:
    dims: tuple

    def __post_init__(self):
        dims = tuple(self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims:
            raise ValidationError("search space has no dimensions")
        names = [d.name for d in dims]
        seen = set()
        for n in names:
            if n in seen:
                raise ValidationError(f"duplicate dimension name {n!r}")
            seen.add(n)

    @classmethod
    def from_dicts(cls, items: Iterable[dict]) -> "SearchSpace":
        dims = []
        for item in items:
            item = dict(item)
            if "levels" in item and item["levels"] is not None:
                item["levels"] = tuple(item["levels"])
                item.setdefault("lower", 0)
                item.setdefault("upper", len(item["levels"]) - 1)
            dims.append(DimensionSpec(**item))
        return cls(tuple(dims))

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def names(self) -> tuple:
        return tuple(dim.name for dim in self.dims)

    def log10_cardinality(self) -> float:
        return float(sum(math.log10(dim.n_levels) for dim in self.dims))

    def role_indices(self, role: str) -> list[int]:
        return [i for i, dim in enumerate(self.dims) if dim.role == role]

    def encode(self, values: Sequence | Candidate) -> np.ndarray:
        if isinstance(values, Candidate):
            values = values.values
        if len(values) != self.d:
            raise BoundsError(f"expected {self.d} values, got {len(values)}")
        return np.array([dim.encode(v) for dim, v in zip(self.dims, values)])

    def decode(self, u: Sequence[float]) -> Candidate:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.d,):
            raise BoundsError(f"expected unit vector of length {self.d}, got shape {u.shape}")
        values = tuple(dim.decode(x) for dim, x in zip(self.dims, u))
        return Candidate(values, tuple(float(x) for x in u))

    def candidate(self, values: Sequence) -> Candidate:
        values = tuple(values)
        return Candidate(values, tuple(self.encode(values).tolist()))

    def snap(self, u: Sequence[float]) -> Candidate:
        """Decode onto the grid and re-encode canonically."""
        return self.candidate(self.decode(u).values)

    def encode_many(self, cands: Sequence[Candidate]) -> np.ndarray:
        if not cands:
            return np.empty((0, self.d))
        return np.vstack([self.encode(c) for c in cands])

    def subspace(self, indices: Sequence[int]) -> "SearchSpace":
        return SearchSpace(tuple(self.dims[i] for i in indices))


def encode(space: SearchSpace, c: Candidate | Sequence) -> np.ndarray:
    return space.encode(c)


def decode(space: SearchSpace, u: Sequence[float]) -> Candidate:
    return space.decode(u)


def lhs_unit(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """n x d Latin hypercube in [0, 1): one point per stratum [i/n, (i+1)/n) per column."""
    if n < 1:
        raise EmptyRequestError("LHS needs n >= 1")
    if d < 1:
        raise ValidationError("LHS needs d >= 1")
    jitter = rng.random((n, d))
    strata = np.column_stack([rng.permutation(n) for _ in range(d)])
    u = (strata + jitter) / n
    # rounding can push a point across a stratum edge; recentre those
    off = np.floor(u * n) != strata
    u[off] = (strata[off] + 0.5) / n
    return u


def lhs_sample(space: SearchSpace, n: int, seed: int) -> list[Candidate]:
    """Latin hypercube draw of ``n`` candidates, deterministic in ``(space, n, seed)``.

    Duplicated grid cells are kept; deduplication happens when observations
    are recorded.
    """
    if not isinstance(space, SearchSpace):
        raise ValidationError("lhs_sample needs a SearchSpace")
    if n < 1:
        raise EmptyRequestError("LHS needs n >= 1")
    rng = np.random.default_rng(seed)
    u = lhs_unit(space.d, n, rng)
    return [space.decode(row) for row in u]


def decompose(space: SearchSpace) -> tuple[SearchSpace, SearchSpace]:
    """Split into (software-role, hardware-role) subspaces, keeping order."""
    sw = space.role_indices("software")
    hw = space.role_indices("hardware")
    if not sw or not hw:
        raise DecompositionError(
            f"decomposition needs both roles; got {len(sw)} software and "
            f"{len(hw)} hardware dimensions (use single-part mode instead)"
        )
    return space.subspace(sw), space.subspace(hw)


@dataclass(frozen=True)
class ValidityReport:
    valid: bool
    violations: dict

    def __bool__(self):
        return self.valid


def validate_candidate(space: SearchSpace, c: Candidate | Sequence) -> ValidityReport:
    values = c.values if isinstance(c, Candidate) else tuple(c)
    violations = {}
    if len(values) != space.d:
        violations["<shape>"] = f"expected {space.d} values, got {len(values)}"
        return ValidityReport(False, violations)
    for dim, v in zip(space.dims, values):
        if not dim.contains(v):
            if dim.kind == "categorical":
                violations[dim.name] = f"{v!r} is not a level of {dim.name}"
            else:
                violations[dim.name] = f"{v!r} outside [{dim.lower}, {dim.upper}]"
    return ValidityReport(not violations, violations)


def write_samples_csv(space: SearchSpace, cands: Sequence[Candidate], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(space.names)
        for c in cands:
            w.writerow(c.values)
