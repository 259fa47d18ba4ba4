"""Ask/tell search strategies consumed by the coordinator.

All strategies minimize. Points are tuples of floats; every point handed out
by ``initial_points`` or ``ask`` is tracked as pending until it is told.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from swarmopt import gp
from swarmopt.acquisition import AcquisitionSpec, LieStrategy, propose_batch
from swarmopt.errors import DuplicateTell, GridExhausted, NoCompletedTrials, UnknownTrial
from swarmopt.space import SearchSpace, grid_points, normalize, sample_uniform


class TrialState(str, enum.Enum):
    DISPATCHED = "dispatched"
    COMPLETED = "completed"


@dataclass
class Trial:
    trial_id: int
    point: tuple
    agent_id: int = 0
    value: float = math.nan
    eval_duration: float = 0.0
    state: TrialState = TrialState.DISPATCHED
    phase: str = "initial"
    batch: int = 0
    dispatched_at: float = 0.0
    completed_at: float = 0.0

    def complete(self, value: float, eval_duration: float, completed_at: float = 0.0) -> "Trial":
        if self.state is not TrialState.DISPATCHED:
            raise ValueError(f"trial {self.trial_id} already completed")
        if math.isnan(value):
            raise ValueError(f"trial {self.trial_id}: NaN objective value")
        self.value = float(value)
        self.eval_duration = float(eval_duration)
        self.completed_at = completed_at
        self.state = TrialState.COMPLETED
        return self

    def to_record(self) -> dict:
        return {
            "trial_id": self.trial_id,
            "agent_id": self.agent_id,
            "point": list(self.point),
            "value": self.value if math.isfinite(self.value) else "inf",
            "eval_duration_s": self.eval_duration,
            "dispatched_at_s": self.dispatched_at,
            "completed_at_s": self.completed_at,
            "phase": self.phase,
            "batch": self.batch,
        }


class Strategy:
    """Common bookkeeping: pending points, observations and the incumbent."""

    kind = "base"

    def __init__(self, space: SearchSpace, seed: int = 0):
        self.space = space
        self.rng = np.random.default_rng(seed)
        self._pending: Counter = Counter()
        self._told: set[int] = set()
        self.observations: list[Trial] = []
        self._best: Optional[Trial] = None

    # hooks
    def _initial(self, num: int) -> list:
        raise NotImplementedError

    def _ask(self, n: int) -> list:
        raise NotImplementedError

    def _observe(self, trial: Trial) -> None:
        pass

    # public interface
    def initial_points(self, num_ips: int) -> list:
        if num_ips < 1:
            raise ValueError(f"numIps must be >= 1, got {num_ips}")
        points = self._initial(num_ips)
        self._pending.update(points)
        return points

    def ask(self, n: int) -> list:
        if n < 1:
            raise ValueError(f"ask needs n >= 1, got {n}")
        points = self._ask(n)
        self._pending.update(points)
        return points

    def tell(self, trial: Trial) -> None:
        if trial.state is not TrialState.COMPLETED:
            raise ValueError(f"trial {trial.trial_id} is not completed")
        if trial.trial_id in self._told:
            raise DuplicateTell(f"trial {trial.trial_id} was already told")
        point = tuple(trial.point)
        if self._pending[point] <= 0:
            raise UnknownTrial(f"point {point} was never issued by this strategy")
        self._pending[point] -= 1
        if self._pending[point] == 0:
            del self._pending[point]
        self._told.add(trial.trial_id)
        self.observations.append(trial)
        if self._best is None or (trial.value, trial.trial_id) < (self._best.value, self._best.trial_id):
            self._best = trial
        self._observe(trial)

    def best(self) -> tuple[tuple, float]:
        if self._best is None:
            raise NoCompletedTrials("no completed trials yet")
        return self._best.point, self._best.value

    @property
    def pending(self) -> list:
        return list(self._pending.elements())


class RandomSearch(Strategy):
    kind = "random"

    def _initial(self, num):
        return [sample_uniform(self.space, self.rng) for _ in range(num)]

    _ask = _initial


class GridSearch(Strategy):
    kind = "grid"

    def __init__(self, space: SearchSpace, seed: int = 0):
        super().__init__(space, seed)
        self._cells = grid_points(space)
        self._next = 0

    @property
    def remaining(self) -> int:
        return len(self._cells) - self._next

    def _take(self, n):
        cells = self._cells[self._next:self._next + n]
        self._next += len(cells)
        return cells

    def _initial(self, num):
        if num > self.remaining:
            raise GridExhausted(f"{num} initial points requested but the grid has {self.remaining} cells left")
        return self._take(num)

    def _ask(self, n):
        return self._take(n)


class BayesianSearch(Strategy):
    """GP surrogate refit (with hyperparameter re-selection) after every tell."""

    kind = "bayesian"

    def __init__(self, space: SearchSpace, seed: int = 0,
                 acquisition: AcquisitionSpec = AcquisitionSpec(),
                 lie: LieStrategy = LieStrategy.MIN):
        super().__init__(space, seed)
        self.acquisition = acquisition
        self.lie = LieStrategy(lie)
        self.model: Optional[gp.GpModel] = None
        self._X: list[np.ndarray] = []
        self._y: list[float] = []

    def _initial(self, num):
        return [sample_uniform(self.space, self.rng) for _ in range(num)]

    def _ask(self, n):
        if self.model is None:
            raise NoCompletedTrials("Bayesian strategy needs at least one completed trial before ask")
        return propose_batch(self.model, self.space, self.acquisition, n, self.lie, self.rng)

    def _observe(self, trial):
        self._X.append(normalize(self.space, trial.point))
        self._y.append(trial.value)
        X = np.array(self._X)
        y = _finite_targets(self._y)
        d = len(self.space)
        if len(y) >= 2:
            hyper = gp.select_hyperparameters(X, y, d)
        else:
            hyper = gp.KernelHyper.isotropic(1.0, 0.2, 1e-8, d)
        self.model = gp.fit(X, y, hyper)


def _finite_targets(values) -> np.ndarray:
    """Replace failed (infinite) observations by a value worse than any finite one."""
    y = np.array(values, dtype=float)
    bad = ~np.isfinite(y)
    if bad.any():
        finite = y[~bad]
        if finite.size:
            spread = float(finite.max() - finite.min()) or 1.0
            y[bad] = finite.max() + spread
        else:
            y[bad] = 0.0
    return y


def make_strategy(kind: str, space: SearchSpace, seed: int = 0, **options) -> Strategy:
    kind = kind.lower()
    if kind == "random":
        return RandomSearch(space, seed)
    if kind == "grid":
        return GridSearch(space, seed)
    if kind in ("bayesian", "bo"):
        return BayesianSearch(space, seed, **options)
    raise ValueError(f"unknown strategy kind {kind!r}")
