import csv
import io
import json

import numpy as np
import pytest

import sparsebo.engine as engine_mod
from sparsebo.acquisition import AcquisitionSpec, ei_minimize
from sparsebo.config import config_from_dict, with_overrides
from sparsebo.engine import (
    HISTORY_COLUMNS,
    RunAborted,
    final_top1,
    fuse_and_propose,
    history_csv,
    reinitialize_pool,
    run,
)
from sparsebo.errors import EvaluationError, ValidationError
from sparsebo.evaluators import Evaluator, EvaluationResult, EvaluatorBinding, SyntheticEvaluator
from sparsebo.pareto import ParetoArchive
from sparsebo.search_space import lhs_sample


def synth_raw(**opt):
    dims = [{"name": f"u{i}", "kind": "integer-range", "lower": 0, "upper": 20,
             "role": "software" if i == 0 else "hardware"} for i in range(4)]
    o = {"iterations": 3, "initial_samples": 10, "pool_size": 32, "seed": 1}
    o.update(opt)
    return {"search_space": dims, "optimizer": o, "evaluators": {"kind": "synthetic", "problem": "convex-front"}}


def synth_cfg(**opt):
    return config_from_dict(synth_raw(**opt))


class StubModel:
    def __init__(self, fn):
        self.fn = fn

    def predict(self, X):
        return self.fn(np.asarray(X))


def test_call_accounting_shared_backend():
    cfg = synth_cfg(iterations=1, pool_size=1, initial_samples=12)
    res = run(cfg.space, cfg.evaluators, cfg.optimizer)
    assert res.meta["evaluator_calls"] == 12 + 1
    assert len(res.history) == 1 and res.history[0].evaluator_calls_cum == 13


def test_call_accounting_separate_backends():
    raw = synth_raw(iterations=2, pool_size=1, initial_samples=6)
    raw["evaluators"] = {"error": {"kind": "synthetic"}, "edp": {"kind": "synthetic"}}
    cfg = config_from_dict(raw)
    res = run(cfg.space, cfg.evaluators, cfg.optimizer)
    assert res.meta["evaluator_calls"] == 2 * (6 + 2)


def test_early_stop_on_thresholds():
    cfg = synth_cfg(iterations=10, thresholds=[100.0, 100.0])
    res = run(cfg.space, cfg.evaluators, cfg.optimizer)
    assert len(res.history) == 1
    assert res.history[0].error_threshold_met and res.history[0].edp_threshold_met
    assert res.meta["stop_reason"] == "thresholds"


def test_history_columns_and_hv_monotone():
    cfg = synth_cfg(iterations=6)
    res = run(cfg.space, cfg.evaluators, cfg.optimizer)
    rows = list(csv.DictReader(io.StringIO(history_csv(res.history, res.space))))
    assert tuple(rows[0]) == HISTORY_COLUMNS
    hv = [float(r["dominated_hv"]) for r in rows]
    assert all(b >= a for a, b in zip(hv, hv[1:]))
    assert [int(r["iter"]) for r in rows] == list(range(1, 7))


def test_archive_unpacking_and_front():
    cfg = synth_cfg()
    archive, history = run(cfg.space, cfg.evaluators, cfg.optimizer)
    assert isinstance(archive, ParetoArchive) and len(history) == 3


def test_x_next_is_pool_member(monkeypatch):
    pools = []
    original = engine_mod.reinitialize_pool

    def recording(*args, **kw):
        pool = original(*args, **kw)
        pools.append({c.values for c in pool})
        return pool

    monkeypatch.setattr(engine_mod, "reinitialize_pool", recording)
    cfg = synth_cfg(iterations=4)
    res = run(cfg.space, cfg.evaluators, cfg.optimizer)
    for rec, pool in zip(res.history, pools):
        assert rec.x_next.values in pool


def test_deterministic_outputs(tmp_path):
    cfg = synth_cfg(iterations=4)
    for name in ("a", "b"):
        run(cfg.space, synth_cfg().evaluators, cfg.optimizer).write(tmp_path / name)
    for f in ("history.csv", "pareto.json", "observations.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    meta = json.loads((tmp_path / "a" / "run_meta.json").read_text())
    assert meta["seed"] == 1 and "numpy" in meta["versions"]


def test_seed_changes_trajectory():
    a = run(*synth_cfg(seed=1)[1:3], synth_cfg(seed=1).optimizer)
    b = run(*synth_cfg(seed=2)[1:3], synth_cfg(seed=2).optimizer)
    assert [r.x_next for r in a.history] != [r.x_next for r in b.history]


def test_reused_when_space_exhausted():
    raw = {"search_space": [{"name": "arch", "kind": "categorical", "lower": 0, "upper": 7,
                             "role": "software", "levels": [f"arch{c}" for c in "ABCDEFGH"]}],
           "optimizer": {"iterations": 2, "initial_samples": 8, "pool_size": 16, "decompose": False},
           "evaluators": {"kind": "tabular", "path": "builtin:toy_table.csv"}}
    cfg = config_from_dict(raw)
    res = run(cfg.space, cfg.evaluators, cfg.optimizer)
    assert res.meta["evaluator_calls"] == 8
    assert all(r.reused for r in res.history)


class FlakyEvaluator(Evaluator):
    """Synthetic objectives, but fails whenever u0 is odd (or always)."""

    log_edp = False

    def __init__(self, space, always=False):
        super().__init__()
        self.inner = SyntheticEvaluator(space)
        self.always = always

    def _evaluate(self, c):
        if self.always or c.values[0] % 2:
            raise EvaluationError("simulated failure")
        return self.inner._evaluate(c)


def test_failures_are_skipped():
    cfg = synth_cfg(iterations=3)
    flaky = FlakyEvaluator(cfg.space)
    res = run(cfg.space, EvaluatorBinding(flaky, flaky), cfg.optimizer)
    assert all(o.candidate.values[0] % 2 == 0 for o in res.observations)
    assert len(res.history) == 3


def test_all_failures_abort():
    cfg = synth_cfg()
    flaky = FlakyEvaluator(cfg.space, always=True)
    with pytest.raises(RunAborted):
        run(cfg.space, EvaluatorBinding(flaky, flaky), cfg.optimizer)


def test_reinitialize_pool_split():
    cfg = synth_cfg()
    member = cfg.space.candidate((10, 10, 10, 10))
    pool = reinitialize_pool([member], cfg.space, 10, seed=3)
    fresh_seed = int(np.random.default_rng(3).integers(2**32))
    assert pool[:5] == lhs_sample(cfg.space, 5, fresh_seed)
    for c in pool[5:]:
        assert max(abs(a - b) for a, b in zip(c.values, member.values)) <= 20
    assert pool == reinitialize_pool([member], cfg.space, 10, seed=3)
    assert len(reinitialize_pool([member], cfg.space, 7, seed=3)) == 7
    with pytest.raises(ValidationError):
        reinitialize_pool([], cfg.space, 10, 0)


def test_fuse_degenerate_weights(rng):
    pool = rng.random((30, 4))
    err = StubModel(lambda X: (X.sum(axis=1), np.full(len(X), 0.3)))
    edp = StubModel(lambda X: (-X.sum(axis=1), np.full(len(X), 0.3)))
    split = ([0, 1], [2, 3])
    idx, _ = fuse_and_propose(err, edp, pool, AcquisitionSpec((1.0, -1.0), (1.0, 0.0)), split)
    alone = ei_minimize(*err.predict(pool[:, [0, 1]]), 1.0)
    assert idx == int(np.argmax(alone))


def test_fuse_dominating_candidate():
    pool = np.array([[0.1, 0.2], [0.4, 0.5]])
    err = StubModel(lambda X: (X[:, 0], np.full(len(X), 0.2)))
    edp = StubModel(lambda X: (X[:, 0] * 2 - 1, np.full(len(X), 0.2)))
    for w in (0.1, 0.5, 0.9):
        idx, s = fuse_and_propose(err, edp, pool, AcquisitionSpec((0.3, 0.0), (w, 1 - w)), ([0], [1]))
        assert idx == 0


def test_fuse_brute_force(rng):
    pool = rng.random((64, 5))
    mk = lambda a: StubModel(lambda X: (np.sin(X @ a), 0.1 + X[:, 0] ** 2))
    err, edp = mk(rng.random(2)), mk(rng.random(3))
    spec = AcquisitionSpec((0.2, -0.1), (0.35, 0.65))
    split = ([0, 3], [1, 2, 4])
    idx, scores = fuse_and_propose(err, edp, pool, spec, split)
    brute = [0.35 * ei_minimize(*err.predict(pool[i:i + 1, [0, 3]]), 0.2)[0]
             + 0.65 * ei_minimize(*edp.predict(pool[i:i + 1, [1, 2, 4]]), -0.1)[0] for i in range(64)]
    np.testing.assert_allclose(scores, brute, rtol=1e-12)
    assert idx == int(np.argmax(brute))
    with pytest.raises(ValidationError):
        fuse_and_propose(err, edp, np.empty((0, 5)), spec, split)


def test_single_part_mode_needs_explicit_flag():
    raw = synth_raw()
    for d in raw["search_space"]:
        d["role"] = "hardware"
    with pytest.raises(ValidationError):
        cfg = config_from_dict(raw)
        run(cfg.space, cfg.evaluators, cfg.optimizer)
    cfg = config_from_dict(synth_raw(decompose=False) | {"search_space": raw["search_space"]})
    assert len(run(cfg.space, cfg.evaluators, cfg.optimizer).history) == 3


def test_final_top1_uses_all_observations():
    cfg = synth_cfg()
    res = run(cfg.space, cfg.evaluators, cfg.optimizer)
    top = final_top1(res)
    F = np.array([o.objective for o in res.observations])
    Z = (res.archive.objectives - F.min(axis=0)) / (F.max(axis=0) - F.min(axis=0))
    assert top["distance"] == pytest.approx(np.sqrt((Z ** 2).sum(axis=1)).min(), rel=1e-12)
