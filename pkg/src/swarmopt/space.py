"""Search spaces, points, sampling, grid enumeration and unit-cube encoding."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np

from swarmopt.errors import (
    ConfigError,
    ContinuousDimensionInGrid,
    PointOutOfSpace,
    UnitCoordinateOutOfRange,
)

Point = tuple  # tuple[float, ...], one coordinate per dimension


@dataclass(frozen=True)
class Continuous:
    name: str
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ConfigError(f"dimension {self.name!r}: bounds must be finite")
        if not self.lo < self.hi:
            raise ConfigError(f"dimension {self.name!r}: need lo < hi, got {self.lo}, {self.hi}")
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def to_unit(self, x: float) -> float:
        return (x - self.lo) / (self.hi - self.lo)

    def from_unit(self, u: float) -> float:
        x = self.lo + u * (self.hi - self.lo)
        # guard the endpoints against rounding past the bounds
        return min(max(x, self.lo), self.hi)

    def to_dict(self) -> dict:
        return {"name": self.name, "type": "continuous", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Discrete:
    """Ordered set of numeric values; encoded ordinally by index."""

    name: str
    values: tuple

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ConfigError(f"dimension {self.name!r}: empty value set")
        if not all(math.isfinite(v) for v in values):
            raise ConfigError(f"dimension {self.name!r}: values must be finite")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError(f"dimension {self.name!r}: values must be strictly increasing")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(values)})

    def __len__(self) -> int:
        return len(self.values)

    def contains(self, x: float) -> bool:
        return x in self._index

    def to_unit(self, x: float) -> float:
        m = len(self.values)
        if m == 1:
            return 0.5
        return self._index[x] / (m - 1)

    def from_unit(self, u: float) -> float:
        m = len(self.values)
        if m == 1:
            return self.values[0]
        return self.values[int(round(u * (m - 1)))]

    def to_dict(self) -> dict:
        return {"name": self.name, "type": "discrete", "values": list(self.values)}


Dimension = Union[Continuous, Discrete]


def integer_range(name: str, start: int, stop: int, step: int = 1) -> Discrete:
    """Discrete dimension over ``start, start+step, ..., stop`` (inclusive)."""
    return Discrete(name, tuple(range(start, stop + 1, step)))


@dataclass(frozen=True)
class SearchSpace:
    dims: tuple

    def __post_init__(self):
        dims = tuple(self.dims)
        if not dims:
            raise ConfigError("search space needs at least one dimension")
        names = [d.name for d in dims]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate dimension names in {names}")
        object.__setattr__(self, "dims", dims)

    def __len__(self) -> int:
        return len(self.dims)

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dims]

    @property
    def is_discrete(self) -> bool:
        return all(isinstance(d, Discrete) for d in self.dims)

    @property
    def cardinality(self) -> float:
        """Number of grid cells, or ``inf`` if any dimension is continuous."""
        if not self.is_discrete:
            return math.inf
        return math.prod(len(d) for d in self.dims)

    def contains(self, p: Sequence[float]) -> bool:
        return len(p) == len(self.dims) and all(d.contains(x) for d, x in zip(self.dims, p))

    def check(self, p: Sequence[float]) -> Point:
        if not self.contains(p):
            raise PointOutOfSpace(f"point {tuple(p)} is not in space {self.names}")
        return tuple(float(x) for x in p)

    def to_list(self) -> list[dict]:
        return [d.to_dict() for d in self.dims]

    @classmethod
    def from_list(cls, entries: Sequence[dict]) -> "SearchSpace":
        dims = []
        for e in entries:
            try:
                kind = e["type"]
                if kind == "continuous":
                    dims.append(Continuous(e["name"], e["lo"], e["hi"]))
                elif kind == "discrete":
                    dims.append(Discrete(e["name"], tuple(e["values"])))
                else:
                    raise ConfigError(f"unknown dimension type {kind!r}")
            except KeyError as exc:
                raise ConfigError(f"dimension entry {e!r} missing field {exc}") from None
        return cls(tuple(dims))


def sample_uniform(space: SearchSpace, rng: np.random.Generator) -> Point:
    coords = []
    for d in space.dims:
        if isinstance(d, Continuous):
            coords.append(d.from_unit(float(rng.random())))
        else:
            coords.append(d.values[int(rng.integers(len(d.values)))])
    return tuple(coords)


def grid_points(space: SearchSpace) -> list[Point]:
    """Full Cartesian product, first dimension varying slowest."""
    return list(iter_grid(space))


def iter_grid(space: SearchSpace) -> Iterator[Point]:
    for d in space.dims:
        if not isinstance(d, Discrete):
            raise ContinuousDimensionInGrid(
                f"grid search needs a discretized space; {d.name!r} is continuous"
            )
    return itertools.product(*(d.values for d in space.dims))


def normalize(space: SearchSpace, p: Sequence[float]) -> np.ndarray:
    p = space.check(p)
    return np.array([d.to_unit(x) for d, x in zip(space.dims, p)], dtype=float)


def denormalize(space: SearchSpace, u: Sequence[float]) -> Point:
    if len(u) != len(space.dims):
        raise UnitCoordinateOutOfRange(f"expected {len(space.dims)} coordinates, got {len(u)}")
    coords = []
    for d, ui in zip(space.dims, u):
        ui = float(ui)
        if not 0.0 <= ui <= 1.0:
            raise UnitCoordinateOutOfRange(f"unit coordinate {ui} outside [0, 1]")
        coords.append(d.from_unit(ui))
    return tuple(coords)


def snap_unit(space: SearchSpace, U: np.ndarray) -> np.ndarray:
    """Round discrete columns of a batch of unit points to their grid positions."""
    U = np.array(U, dtype=float, copy=True)
    for j, d in enumerate(space.dims):
        if isinstance(d, Discrete):
            m = len(d.values)
            if m == 1:
                U[:, j] = 0.5
            else:
                U[:, j] = np.round(U[:, j] * (m - 1)) / (m - 1)
    return U


# Fixtures mirroring the two discrete experiment spaces.

def satellite_space() -> SearchSpace:
    """Turning rate x view height x satellite count: 9 * 6 * 5 = 270 cells."""
    return SearchSpace((
        Discrete("turning_rate", tuple(1.0 + 0.25 * i for i in range(9))),
        Discrete("view_height", tuple(0.25 * i for i in range(1, 7))),
        integer_range("num_satellites", 2, 6),
    ))


def citation_space() -> SearchSpace:
    """Four-parameter graph-classifier space; tau+ and tau- share one dimension."""
    return SearchSpace((
        integer_range("paper_to_paper_weight", 100, 500),
        integer_range("train_to_topic_weight", 1, 10),
        integer_range("val_to_topic_tau", 20, 60),
        integer_range("simulation_steps", 5, 13, 2),
    ))


def ackley_space(d: int = 2, bound: float = 5.0) -> SearchSpace:
    return SearchSpace(tuple(Continuous(f"x{j}", -bound, bound) for j in range(d)))
