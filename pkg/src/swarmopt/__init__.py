"""Multi-agent asynchronous optimization: a central solver dispatching
candidate points to concurrent worker agents over message ports."""

from swarmopt.space import Continuous, Discrete, SearchSpace
from swarmopt.strategy import Trial, make_strategy
from swarmopt.coordinator import RunResult, run
from swarmopt.config import RunConfig, load_config

__all__ = [
    "Continuous",
    "Discrete",
    "SearchSpace",
    "Trial",
    "make_strategy",
    "RunConfig",
    "RunResult",
    "load_config",
    "run",
]

__version__ = "0.1.0"
