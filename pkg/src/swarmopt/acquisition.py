"""Acquisition functions and constant-liar batch proposal (minimization)."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from swarmopt import gp
from swarmopt.errors import BatchDegenerate
from swarmopt.space import SearchSpace, denormalize, iter_grid, normalize, sample_uniform, snap_unit

N_RANDOM_CANDIDATES = 1024
N_LOCAL_SEEDS = 10
LOCAL_STD = 0.05
_FALLBACK_ATTEMPTS = 1000
_ENUMERATE_LIMIT = 2_000_000

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class AcquisitionKind(str, enum.Enum):
    EI = "ei"
    LCB = "lcb"


class LieStrategy(str, enum.Enum):
    MIN = "min"
    MAX = "max"
    MEAN = "mean"

    def lie_value(self, observed) -> float:
        observed = np.asarray(observed, dtype=float)
        if self is LieStrategy.MIN:
            return float(observed.min())
        if self is LieStrategy.MAX:
            return float(observed.max())
        return float(observed.mean())


@dataclass(frozen=True)
class AcquisitionSpec:
    kind: AcquisitionKind = AcquisitionKind.EI
    kappa: float = 1.96
    xi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", AcquisitionKind(self.kind))
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise ValueError(f"kappa must be finite and positive, got {self.kappa}")
        if not (math.isfinite(self.xi) and self.xi >= 0):
            raise ValueError(f"xi must be finite and non-negative, got {self.xi}")


def expected_improvement(mean, variance, best, xi=0.0):
    """EI for minimization. Zero wherever the posterior variance is zero.

    Accepts scalars or arrays; returns the same shape.
    """
    mean = np.asarray(mean, dtype=float)
    sigma = np.sqrt(np.maximum(np.asarray(variance, dtype=float), 0.0))
    improvement = best - mean - xi
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, improvement / np.where(sigma > 0, sigma, 1.0), 0.0)
    ei = improvement * ndtr(z) + sigma * _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    ei = np.where(sigma > 0, np.maximum(ei, 0.0), 0.0)
    return float(ei) if ei.ndim == 0 else ei


def lower_confidence_bound(mean, variance, kappa):
    lcb = np.asarray(mean, dtype=float) - kappa * np.sqrt(np.maximum(np.asarray(variance, dtype=float), 0.0))
    return float(lcb) if lcb.ndim == 0 else lcb


def _candidates(model: gp.GpModel, space: SearchSpace, rng: np.random.Generator) -> np.ndarray:
    d = len(space)
    uniform = rng.random((N_RANDOM_CANDIDATES, d))
    parts = [uniform]
    if model.n:
        order = np.argsort(model.train_targets, kind="stable")[:N_LOCAL_SEEDS]
        seeds = model.train_inputs[order]
        local = np.clip(seeds + rng.normal(0.0, LOCAL_STD, seeds.shape), 0.0, 1.0)
        parts.append(local)
    return snap_unit(space, np.vstack(parts))


def _scores(model: gp.GpModel, U: np.ndarray, spec: AcquisitionSpec) -> np.ndarray:
    """Higher is better for both acquisition kinds."""
    mean, var = model.predict_many(U)
    if spec.kind is AcquisitionKind.EI:
        best = float(model.raw_targets.min()) if model.n else 0.0
        return expected_improvement(mean, var, best, spec.xi)
    return -lower_confidence_bound(mean, var, spec.kappa)


def propose(model: gp.GpModel, space: SearchSpace, spec: AcquisitionSpec, rng: np.random.Generator):
    U = _candidates(model, space, rng)
    scores = _scores(model, U, spec)
    return denormalize(space, U[int(np.argmax(scores))])


def _random_unvisited(space: SearchSpace, visited: set, rng: np.random.Generator):
    for _ in range(_FALLBACK_ATTEMPTS):
        p = sample_uniform(space, rng)
        if p not in visited:
            return p
    if space.cardinality <= _ENUMERATE_LIMIT:
        free = [p for p in iter_grid(space) if p not in visited]
        if free:
            return free[int(rng.integers(len(free)))]
    raise BatchDegenerate(f"no unvisited point left in a space of {space.cardinality} cells")


def propose_batch(model: gp.GpModel, space: SearchSpace, spec: AcquisitionSpec, q: int,
                  lie: LieStrategy, rng: np.random.Generator, refit_hyper: bool = False):
    """Greedy constant-liar batch of ``q`` distinct points.

    Each proposal is appended to a shadow training set with the lie value and
    the shadow model refit before the next proposal. ``model`` is not touched.
    Shadow refits reuse ``model.hyper`` unless ``refit_hyper`` is set.
    """
    if q < 1:
        raise ValueError(f"batch size must be >= 1, got {q}")
    observed = model.raw_targets
    lie_value = lie.lie_value(observed) if model.n else 0.0
    X = [row for row in model.train_inputs]
    y = list(observed)
    visited = {denormalize(space, row) for row in model.train_inputs}
    shadow = model
    batch = []
    for i in range(q):
        if i:
            hyper = gp.select_hyperparameters(X, y, len(space)) if refit_hyper else model.hyper
            shadow = gp.fit(np.array(X), np.array(y), hyper)
        p = propose(shadow, space, spec, rng)
        if p in visited:
            p = _random_unvisited(space, visited, rng)
        batch.append(p)
        visited.add(p)
        X.append(normalize(space, p))
        y.append(lie_value)
    return batch
