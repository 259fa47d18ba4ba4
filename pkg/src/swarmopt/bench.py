"""Objective functions evaluated by agents."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from swarmopt.space import SearchSpace, citation_space, normalize, satellite_space

# optimum of the multimodal surrogate, in unit-cube coordinates of the citation space
MULTIMODAL_SHIFT = (100 / 400, 2 / 9, 10 / 40, 3 / 4)
MULTIMODAL_SCALE = 2.0


@dataclass
class ObjectiveBinding:
    name: str
    evaluate: Callable[[Sequence[float]], float]
    params: dict = field(default_factory=dict)

    def __call__(self, point: Sequence[float]) -> float:
        return self.evaluate(point)


def ackley(x: Sequence[float], a: float = 20.0, b: float = 0.2, c: float = 2 * math.pi) -> float:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("ackley needs at least one coordinate")
    # grouped as two non-negative terms so the origin evaluates to exactly 0
    radial = a * (1.0 - math.exp(-b * math.sqrt(float(np.mean(x * x)))))
    cosine = math.e - math.exp(float(np.mean(np.cos(c * x))))
    return radial + cosine


def with_delay(base: ObjectiveBinding, delay_s: float) -> ObjectiveBinding:
    if not (math.isfinite(delay_s) and delay_s >= 0):
        raise ValueError(f"delay must be finite and >= 0, got {delay_s}")
    if delay_s == 0:
        return base

    def evaluate(point):
        time.sleep(delay_s)
        return base.evaluate(point)

    return ObjectiveBinding(base.name, evaluate, {**base.params, "delay_s": delay_s})


_SATELLITE = satellite_space()


def synthetic_satellite(p: Sequence[float]) -> float:
    """Separable quadratic over the 270-cell satellite grid, minimized at (2.0, 1.0, 4)."""
    turning, view, sats = _SATELLITE.check(p)
    return (turning - 2.0) ** 2 + 4.0 * (view - 1.0) ** 2 + 0.5 * (sats - 4) ** 2


def synthetic_multimodal(p: Sequence[float], noise_std: float = 0.0,
                         rng: Optional[np.random.Generator] = None,
                         space: Optional[SearchSpace] = None,
                         scale: float = MULTIMODAL_SCALE,
                         shift: Sequence[float] = MULTIMODAL_SHIFT) -> float:
    """Rastrigin over shifted, scaled unit-cube coordinates, plus optional gaussian noise."""
    space = space or citation_space()
    u = normalize(space, p)
    z = scale * (u - np.asarray(shift[:len(u)], dtype=float))
    value = float(10 * len(z) + np.sum(z * z - 10 * np.cos(2 * math.pi * z)))
    if noise_std > 0:
        rng = rng if rng is not None else np.random.default_rng()
        value += float(rng.normal(0.0, noise_std))
    return value


OBJECTIVES = ("ackley", "ackley+delay", "synthetic_satellite", "synthetic_multimodal")


def make_objective(name: str, params: Optional[dict] = None, space: Optional[SearchSpace] = None,
                   seed: int = 0, agent_id: int = 0) -> ObjectiveBinding:
    """Build a fresh binding; called once per agent.

    Any objective accepts a ``delay_s`` parameter; ``ackley+delay`` requires it.
    """
    params = dict(params or {})
    if name == "ackley+delay" and "delay_s" not in params:
        raise ValueError("objective 'ackley+delay' needs a delay_s parameter")
    delay_s = float(params.pop("delay_s", 0.0))
    if name in ("ackley", "ackley+delay"):
        a = float(params.pop("a", 20.0))
        b = float(params.pop("b", 0.2))
        c = float(params.pop("c", 2 * math.pi))
        params.pop("d", None)
        base = ObjectiveBinding(name, lambda x: ackley(x, a, b, c), {"a": a, "b": b, "c": c})
    elif name == "synthetic_satellite":
        base = ObjectiveBinding(name, synthetic_satellite)
    elif name == "synthetic_multimodal":
        noise_std = float(params.pop("noise_std", 0.0))
        if noise_std < 0:
            raise ValueError(f"noise_std must be >= 0, got {noise_std}")
        rng = np.random.default_rng([seed, agent_id])
        mm_space = space if space is not None else citation_space()
        base = ObjectiveBinding(
            name,
            lambda p: synthetic_multimodal(p, noise_std, rng, mm_space),
            {"noise_std": noise_std},
        )
    else:
        raise ValueError(f"unknown objective {name!r}; choose from {', '.join(OBJECTIVES)}")
    if params:
        raise ValueError(f"unknown parameters for {name!r}: {sorted(params)}")
    return with_delay(base, delay_s)
