"""Expected Improvement and weighted scalarization over a candidate pool."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .errors import DomainError, ValidationError

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)

WEIGHT_SCHEMES = ("fixed-uniform", "random-dirichlet-per-iteration")


def expected_improvement(mu, sigma, f_best):
    """E[max(0, f - f_best)] for f ~ N(mu, sigma^2), maximization form.

    Works elementwise on arrays. ``sigma == 0`` gives ``max(0, mu - f_best)``.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise DomainError("sigma must be >= 0")
    imp = mu - f_best
    # tiny sigma sends z*z to inf; exp(-inf) = 0 is the right limit
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        z = np.where(sigma > 0, imp / np.where(sigma > 0, sigma, 1.0), 0.0)
        ei = np.where(
            sigma > 0,
            imp * ndtr(z) + sigma * _INV_SQRT_2PI * np.exp(-0.5 * z * z),
            np.maximum(imp, 0.0),
        )
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


def ei_minimize(mu, var, incumbent):
    """EI for a minimized objective: apply the maximization form to -f."""
    sigma = np.sqrt(np.maximum(np.asarray(var, dtype=float), 0.0))
    return expected_improvement(-np.asarray(mu, dtype=float), sigma, -float(incumbent))


@dataclass
class AcquisitionSpec:
    """Per-objective incumbents (best observed, minimization) and scalarization weights."""

    f_best: tuple
    weights: tuple
    weight_scheme: str = "random-dirichlet-per-iteration"
    kind: str = field(default="EI", init=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or len(w) != len(self.f_best):
            raise ValidationError("need one weight per objective")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError(f"weights must be >= 0 and sum to 1, got {w.tolist()}")
        if self.weight_scheme not in WEIGHT_SCHEMES:
            raise ValidationError(f"weight_scheme must be one of {WEIGHT_SCHEMES}")


def draw_weights(k: int, scheme: str, rng: np.random.Generator) -> tuple:
    if scheme == "fixed-uniform":
        return tuple([1.0 / k] * k)
    w = rng.dirichlet(np.ones(k))
    w = w / w.sum()
    # make the sum exact to the last bit
    w[-1] = 1.0 - w[:-1].sum()
    return tuple(float(x) for x in w)


def argmax_first(scores) -> int:
    """Index of the maximum; lowest index on ties."""
    scores = np.asarray(scores, dtype=float)
    return int(np.flatnonzero(scores == scores.max())[0])


def scalarize_and_select(pool: np.ndarray, models: Sequence, spec: AcquisitionSpec,
                         weights: Sequence[float] | None = None):
    """Pick the pool row maximizing sum_k w_k * EI_k.

    ``pool`` is an (n, d) array of encoded candidates; each model exposes
    ``predict(X) -> (mu, var)``. Returns ``(index, scores)``.
    """
    pool = np.asarray(pool, dtype=float)
    if pool.ndim != 2 or pool.shape[0] == 0:
        raise ValidationError("candidate pool is empty")
    if len(models) != len(spec.f_best):
        raise ValidationError("need one model per objective")
    w = spec.weights if weights is None else weights
    scores = np.zeros(pool.shape[0])
    for wk, model, best in zip(w, models, spec.f_best):
        if wk == 0:
            continue
        mu, var = model.predict(pool)
        scores += wk * ei_minimize(mu, var, best)
    return argmax_first(scores), scores
