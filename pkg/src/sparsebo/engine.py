"""The optimization loop.

Per iteration: fit one sparse GP per objective on its subspace (software
dims for error, hardware dims for EDP), score a fresh candidate pool with
the weighted sum of per-part EI, evaluate the winner, refresh the Pareto
archive and log front metrics.

All randomness comes from one generator seeded by ``config.seed`` and is
consumed in a fixed order, so a run is a deterministic function of its
config.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from ._backend import BACKEND
from .acquisition import AcquisitionSpec, argmax_first, draw_weights, ei_minimize
from .config import OptimizerConfig
from .errors import EvaluationError, SparseBOError, TableLookupError, ValidationError
from .evaluators import EvaluatorBinding
from .gp_full import select_hyperparameters
from .gp_sparse import default_inducing_count, fit_sparse, select_inducing
from .pareto import (
    ParetoArchive,
    dominated_hypervolume,
    pareto_filter,
    pareto_optimal_region,
    top1_distance,
)
from .search_space import Candidate, SearchSpace, decompose, lhs_sample

logger = logging.getLogger(__name__)

HV_REF = (1.1, 1.1)
PERTURB_STD = 0.1

HISTORY_COLUMNS = (
    "iter",
    "pareto_count",
    "log_pareto_count",
    "dominated_hv",
    "pareto_region",
    "top1_distance",
    "best_error",
    "best_log_edp",
    "evaluator_calls_cum",
    "fused_pairs_scored",
    "x_next",
    "y_error",
    "y_edp",
    "reused",
    "failed_candidates",
    "error_threshold_met",
    "edp_threshold_met",
)


class RunAborted(SparseBOError):
    """Every candidate of an iteration (or the initial design) failed to evaluate."""


@dataclass(frozen=True)
class Observation:
    candidate: Candidate
    error: float
    edp: float
    objective: tuple  # (error, modeled edp) as minimized by the surrogates
    iteration: int  # 0 for the initial design


@dataclass
class IterationRecord:
    iter: int
    pareto_count: int
    log_pareto_count: float
    dominated_hv: float
    pareto_region: float
    top1_distance: float
    best_error: float
    best_log_edp: float
    evaluator_calls_cum: int
    wall_time_s: float
    x_next: Candidate
    fused_pairs_scored: int
    y_error: float = math.nan
    y_edp: float = math.nan
    reused: bool = False
    failed_candidates: int = 0
    error_threshold_met: bool = False
    edp_threshold_met: bool = False


@dataclass
class RunResult:
    archive: ParetoArchive
    history: list
    observations: list
    space: SearchSpace
    config: OptimizerConfig
    meta: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.archive, self.history))

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "history.csv").write_text(history_csv(self.history, self.space))
        (out / "timing.csv").write_text(
            "iter,wall_time_s\n" + "".join(f"{r.iter},{r.wall_time_s!r}\n" for r in self.history)
        )
        (out / "observations.csv").write_text(observations_csv(self.observations, self.space))
        (out / "pareto.json").write_text(json.dumps(pareto_payload(self), indent=2) + "\n")
        (out / "run_meta.json").write_text(json.dumps(self.meta, indent=2, default=str) + "\n")


# --------------------------------------------------------------------------
# pool and fusion


def reinitialize_pool(archive: ParetoArchive | Sequence[Candidate], space: SearchSpace,
                      pool_size: int, seed: int) -> list[Candidate]:
    """Half fresh LHS draws, half Gaussian perturbations of archive members.

    Perturbations add N(0, 0.1^2) in the unit cube to members taken
    round-robin, clip to [0, 1] and snap to the grid. The fresh half gets
    the extra slot when ``pool_size`` is odd.
    """
    members = archive.candidates if isinstance(archive, ParetoArchive) else list(archive)
    if not members:
        raise ValidationError("reinitialize_pool needs a non-empty archive")
    if pool_size < 1:
        raise ValidationError("pool_size must be >= 1")
    rng = np.random.default_rng(seed)
    n_perturb = pool_size // 2
    n_fresh = pool_size - n_perturb
    fresh_seed = int(rng.integers(2**32))
    pool = [space.candidate(c.values) for c in lhs_sample(space, n_fresh, fresh_seed)]
    base = [space.encode(c) for c in members]
    for j in range(n_perturb):
        u = base[j % len(base)] + rng.normal(0.0, PERTURB_STD, space.d)
        pool.append(space.snap(np.clip(u, 0.0, 1.0)))
    return pool


def fuse_and_propose(error_model, energy_model, pool: np.ndarray, spec: AcquisitionSpec,
                     split: tuple[Sequence[int], Sequence[int]]):
    """Score joint candidates by ``w_err * EI_err(sw part) + w_edp * EI_edp(hw part)``.

    ``pool`` holds encoded joint candidates; ``split`` gives the column
    indices of the software and hardware parts. Returns ``(index, scores)``
    with ties going to the lowest index.
    """
    pool = np.asarray(pool, dtype=float)
    if pool.ndim != 2 or pool.shape[0] == 0:
        raise ValidationError("candidate pool is empty")
    sw, hw = (list(s) for s in split)
    w_err, w_edp = spec.weights
    scores = np.zeros(pool.shape[0])
    if w_err > 0:
        mu, var = error_model.predict(pool[:, sw])
        scores += w_err * ei_minimize(mu, var, spec.f_best[0])
    if w_edp > 0:
        mu, var = energy_model.predict(pool[:, hw])
        scores += w_edp * ei_minimize(mu, var, spec.f_best[1])
    return argmax_first(scores), scores


# --------------------------------------------------------------------------
# the loop


class _Normalizer:
    """Min-max scaling frozen at the initial design, so per-iteration HV is comparable."""

    def __init__(self, F: np.ndarray):
        self.lo = F.min(axis=0)
        span = F.max(axis=0) - self.lo
        self.span = np.where(span > 0, span, 1.0)

    def __call__(self, F):
        return (np.asarray(F, dtype=float) - self.lo) / self.span


def _front_metrics(archive: ParetoArchive, norm: _Normalizer) -> tuple[float, float, float]:
    Z = norm(archive.objectives)
    inside = Z[np.all(Z <= np.asarray(HV_REF), axis=1)]
    hv = dominated_hypervolume(inside, HV_REF) if len(inside) else 0.0
    region = pareto_optimal_region(np.maximum(Z, 0.0), np.zeros(Z.shape[1]))
    _, dist = top1_distance(Z)
    return float(hv), float(region), float(dist)


def _subset_rows(n: int, k: int) -> np.ndarray:
    if n <= k:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, k).round().astype(int))


class Engine:
    def __init__(self, space: SearchSpace, evaluators: EvaluatorBinding, config: OptimizerConfig):
        self.space = space
        self.ev = evaluators
        self.cfg = config
        if config.decompose:
            decompose(space)  # raises on a degenerate split
            self.split = (space.role_indices("software"), space.role_indices("hardware"))
        else:
            self.split = (list(range(space.d)), list(range(space.d)))
        self.obs: list[Observation] = []
        self.seen: dict[tuple, Observation] = {}
        self._hypers: list = [None, None]

    # evaluation ---------------------------------------------------------
    def _transform_edp(self, edp: float) -> float:
        if not self.ev.log_edp:
            return float(edp)
        if not edp > 0:
            raise EvaluationError(f"EDP must be > 0 for log scaling, got {edp}")
        return math.log(edp)

    def _evaluate(self, c: Candidate, iteration: int) -> tuple[Observation, bool]:
        hit = self.seen.get(c.values)
        if hit is not None:
            logger.info("reusing cached result for %s", c.values)
            return hit, True
        err, edp, _ = self.ev.evaluate(c)
        if not (math.isfinite(err) and math.isfinite(edp)):
            raise EvaluationError(f"non-finite objectives ({err}, {edp})")
        o = Observation(c, float(err), float(edp), (float(err), self._transform_edp(edp)), iteration)
        self.obs.append(o)
        self.seen[c.values] = o
        return o, False

    # modelling ----------------------------------------------------------
    def _fit(self, which: int, X: np.ndarray, y: np.ndarray, F: np.ndarray, seed: int, refit: bool):
        if refit or self._hypers[which] is None:
            rows = _subset_rows(len(y), self.cfg.hyper_subset)
            self._hypers[which] = select_hyperparameters(X[rows], y[rows])
        h = self._hypers[which]
        m = default_inducing_count(len(y)) if self.cfg.inducing_m == "auto" else self.cfg.inducing_m
        Z = select_inducing(X, F, m, seed)
        return fit_sparse(X, y, Z, h.params, h.noise, fitc=self.cfg.fitc_correction)

    # driver -------------------------------------------------------------
    def run(self) -> RunResult:
        cfg = self.cfg
        t_start = time.perf_counter()
        rng = np.random.default_rng(cfg.seed)
        init_seed = int(rng.integers(2**32))

        init_failures = 0
        for c in lhs_sample(self.space, cfg.initial_samples, init_seed):
            try:
                self._evaluate(c, 0)
            except (EvaluationError, TableLookupError) as exc:
                init_failures += 1
                logger.warning("initial candidate %s failed: %s", c.values, exc)
        if len(self.obs) < 2:
            raise RunAborted(f"only {len(self.obs)} initial candidates evaluated ({init_failures} failed)")

        norm = _Normalizer(np.array([o.objective for o in self.obs]))
        history: list[IterationRecord] = []
        stop_reason = "budget"
        sw, hw = self.split
        for it in range(1, cfg.iterations + 1):
            t0 = time.perf_counter()
            pool_seed, ind_seed = (int(s) for s in rng.integers(2**32, size=2))
            weights = draw_weights(2, cfg.weight_scheme, rng)

            X = self.space.encode_many([o.candidate for o in self.obs])
            F = np.array([o.objective for o in self.obs])
            refit = cfg.refit_hypers_each_iter or it == 1
            err_model = self._fit(0, X[:, sw], F[:, 0], F, ind_seed, refit)
            edp_model = self._fit(1, X[:, hw], F[:, 1], F, ind_seed, refit)

            archive = pareto_filter([(o.candidate, o.objective) for o in self.obs], cfg.epsilon_diversity)
            pool = reinitialize_pool(archive, self.space, cfg.pool_size, pool_seed)
            unique: dict[tuple, Candidate] = {}
            for c in pool:
                unique.setdefault(c.values, c)
            fresh = [c for c in unique.values() if c.values not in self.seen]
            candidates = fresh or list(unique.values())
            P = self.space.encode_many(candidates)

            spec = AcquisitionSpec((float(F[:, 0].min()), float(F[:, 1].min())), weights, cfg.weight_scheme)
            _, scores = fuse_and_propose(err_model, edp_model, P, spec, self.split)

            failed = 0
            chosen = None
            for idx in np.lexsort((np.arange(len(scores)), -scores)):
                try:
                    obs, reused = self._evaluate(candidates[idx], it)
                except (EvaluationError, TableLookupError) as exc:
                    failed += 1
                    logger.warning("iteration %d: candidate %s failed: %s", it, candidates[idx].values, exc)
                    continue
                chosen = (obs, reused)
                break
            if chosen is None:
                raise RunAborted(f"iteration {it}: all {len(candidates)} candidates failed to evaluate")
            obs, reused = chosen

            archive = pareto_filter([(o.candidate, o.objective) for o in self.obs], cfg.epsilon_diversity)
            hv, region, dist = _front_metrics(archive, norm)
            best_err = min(o.objective[0] for o in self.obs)
            best_edp = min(o.objective[1] for o in self.obs)
            met = (False, False)
            if cfg.thresholds is not None:
                met = (best_err <= cfg.thresholds[0], best_edp <= cfg.thresholds[1])
            rec = IterationRecord(
                iter=it,
                pareto_count=len(archive),
                log_pareto_count=math.log(len(archive)),
                dominated_hv=hv,
                pareto_region=region,
                top1_distance=dist,
                best_error=best_err,
                best_log_edp=best_edp,
                evaluator_calls_cum=self.ev.counter.value,
                wall_time_s=time.perf_counter() - t0,
                x_next=obs.candidate,
                fused_pairs_scored=len(candidates),
                y_error=obs.error,
                y_edp=obs.edp,
                reused=reused,
                failed_candidates=failed,
                error_threshold_met=met[0],
                edp_threshold_met=met[1],
            )
            history.append(rec)
            logger.info("iter %d: front %d, hv %.4f, best err %.4g, best edp %.4g",
                        it, rec.pareto_count, hv, best_err, best_edp)
            if all(met) and cfg.thresholds is not None:
                stop_reason = "thresholds"
                break

        archive = pareto_filter([(o.candidate, o.objective) for o in self.obs], cfg.epsilon_diversity)
        meta = {
            "seed": cfg.seed,
            "versions": {
                "sparsebo": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
                "core_backend": BACKEND,
            },
            "stop_reason": stop_reason,
            "iterations_run": len(history),
            "evaluator_calls": self.ev.counter.value,
            "initial_failures": init_failures,
            "total_wall_time_s": time.perf_counter() - t_start,
        }
        return RunResult(archive, history, list(self.obs), self.space, cfg, meta)


def run(space: SearchSpace, evaluators: EvaluatorBinding, config: OptimizerConfig) -> RunResult:
    """Run the loop; the result unpacks as ``archive, history``."""
    return Engine(space, evaluators, config).run()


# --------------------------------------------------------------------------
# serialization


def format_candidate(c: Candidate, space: SearchSpace) -> str:
    return ";".join(f"{k}={v}" for k, v in zip(space.names, c.values))


def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def history_csv(history: Sequence[IterationRecord], space: SearchSpace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HISTORY_COLUMNS)
    for r in history:
        row = []
        for col in HISTORY_COLUMNS:
            v = getattr(r, col)
            row.append(format_candidate(v, space) if col == "x_next" else _cell(v))
        w.writerow(row)
    return buf.getvalue()


def observations_csv(obs: Sequence[Observation], space: SearchSpace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", *space.names, "error", "edp", "objective_edp"])
    for o in obs:
        w.writerow([o.iteration, *o.candidate.values, _cell(o.error), _cell(o.edp), _cell(o.objective[1])])
    return buf.getvalue()


def final_top1(result: RunResult) -> dict:
    """Top-1 entry with objectives min-max scaled over every observation of the run."""
    F = np.array([o.objective for o in result.observations])
    ranges = np.column_stack([F.min(axis=0), F.max(axis=0)])
    ranges[:, 1] = np.where(ranges[:, 1] > ranges[:, 0], ranges[:, 1], ranges[:, 0] + 1.0)
    idx, dist = top1_distance(result.archive, normalization=ranges)
    return {"index": idx, "distance": dist, "normalization": ranges.tolist()}


def pareto_payload(result: RunResult) -> dict:
    names = result.space.names
    entries = []
    for c, f in result.archive:
        o = next(o for o in result.observations if o.candidate.values == c.values)
        entries.append({
            "values": dict(zip(names, c.values)),
            "error": o.error,
            "edp": o.edp,
            "objective": list(f),
        })
    return {"entries": entries, "top1": final_top1(result)}
