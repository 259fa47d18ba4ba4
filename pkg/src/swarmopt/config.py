"""Run configuration: JSON grammar, validation and strategy/objective wiring."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

from swarmopt.acquisition import AcquisitionKind, AcquisitionSpec, LieStrategy
from swarmopt.bench import OBJECTIVES, make_objective
from swarmopt.errors import ConfigError
from swarmopt.space import SearchSpace
from swarmopt.strategy import Strategy, make_strategy

SEED_ENV = "SWARMOPT_SEED"


@dataclass(frozen=True)
class StrategyConfig:
    kind: str = "bayesian"
    acquisition: AcquisitionSpec = AcquisitionSpec()
    lie: LieStrategy = LieStrategy.MIN

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind}
        if self.kind == "bayesian":
            out["acquisition"] = {"kind": self.acquisition.kind.value,
                                  "kappa": self.acquisition.kappa, "xi": self.acquisition.xi}
            out["lie"] = self.lie.value
        return out


@dataclass(frozen=True)
class TransportConfig:
    kind: str = "inprocess"  # or "tcp"
    listen: str = "127.0.0.1:0"
    spawn: str = "local"  # tcp only: "local" threads, or "external" agents

    def to_dict(self) -> dict:
        if self.kind == "inprocess":
            return {"kind": "inprocess"}
        return {"kind": "tcp", "listen": self.listen, "spawn": self.spawn}


@dataclass(frozen=True)
class RunConfig:
    space: SearchSpace
    strategy: StrategyConfig = StrategyConfig()
    num_agents: int = 1
    num_ips: int = 10
    num_iter: int = 50
    seed: int = 0
    transport: TransportConfig = TransportConfig()
    objective: str = "ackley"
    objective_params: dict = field(default_factory=dict)
    log_path: Optional[str] = None

    def __post_init__(self):
        validate(self)

    def to_dict(self) -> dict:
        return {
            "space": self.space.to_list(),
            "strategy": self.strategy.to_dict(),
            "num_agents": self.num_agents,
            "num_ips": self.num_ips,
            "num_iter": self.num_iter,
            "seed": self.seed,
            "transport": self.transport.to_dict(),
            "objective": {"name": self.objective, "params": dict(self.objective_params)},
            "log_path": self.log_path,
        }

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def build_strategy(self) -> Strategy:
        if self.strategy.kind == "bayesian":
            return make_strategy("bayesian", self.space, self.seed,
                                 acquisition=self.strategy.acquisition, lie=self.strategy.lie)
        return make_strategy(self.strategy.kind, self.space, self.seed)

    def objective_factory(self):
        def build(agent_id: int):
            return make_objective(self.objective, self.objective_params, self.space, self.seed, agent_id)
        return build


def validate(cfg: RunConfig) -> None:
    for name in ("num_agents", "num_ips", "num_iter", "seed"):
        value = getattr(cfg, name)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
    if cfg.num_agents < 1:
        raise ConfigError(f"num_agents >= 1 violated: num_agents={cfg.num_agents}")
    if cfg.num_ips < cfg.num_agents:
        raise ConfigError(f"num_ips >= num_agents violated: num_ips={cfg.num_ips}, num_agents={cfg.num_agents}")
    if cfg.num_iter < cfg.num_ips:
        raise ConfigError(f"num_iter >= num_ips violated: num_iter={cfg.num_iter}, num_ips={cfg.num_ips}")
    if cfg.strategy.kind not in ("random", "grid", "bayesian"):
        raise ConfigError(f"unknown strategy kind {cfg.strategy.kind!r}")
    if cfg.strategy.kind == "grid":
        if not cfg.space.is_discrete:
            raise ConfigError("grid strategy needs an all-discrete space")
        if cfg.num_iter > cfg.space.cardinality:
            raise ConfigError(f"num_iter <= grid size violated: num_iter={cfg.num_iter}, "
                              f"grid has {cfg.space.cardinality} cells")
    if cfg.transport.kind not in ("inprocess", "tcp"):
        raise ConfigError(f"unknown transport {cfg.transport.kind!r}")
    if cfg.transport.spawn not in ("local", "external"):
        raise ConfigError(f"unknown tcp spawn mode {cfg.transport.spawn!r}")
    if cfg.objective not in OBJECTIVES:
        raise ConfigError(f"unknown objective {cfg.objective!r}; choose from {', '.join(OBJECTIVES)}")
    try:
        make_objective(cfg.objective, cfg.objective_params, cfg.space, cfg.seed, 0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _strategy_from(obj) -> StrategyConfig:
    if isinstance(obj, str):
        obj = {"kind": obj}
    kind = str(obj.get("kind", "bayesian")).lower()
    if kind == "bo":
        kind = "bayesian"
    acq = obj.get("acquisition", {})
    if isinstance(acq, str):
        acq = {"kind": acq}
    try:
        spec = AcquisitionSpec(AcquisitionKind(str(acq.get("kind", "ei")).lower()),
                               float(acq.get("kappa", 1.96)), float(acq.get("xi", 0.0)))
        lie = LieStrategy(str(obj.get("lie", "min")).lower())
    except ValueError as exc:
        raise ConfigError(f"bad strategy settings: {exc}") from None
    return StrategyConfig(kind, spec, lie)


def config_from_dict(doc: dict, env: Optional[dict] = None) -> RunConfig:
    """Parse the JSON grammar shared by config files and log headers."""
    env = os.environ if env is None else env
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    try:
        space = SearchSpace.from_list(doc["space"])
    except KeyError:
        raise ConfigError("config is missing 'space'") from None
    transport = doc.get("transport", {"kind": "inprocess"})
    if isinstance(transport, str):
        transport = {"kind": transport}
    objective = doc.get("objective", {"name": "ackley"})
    if isinstance(objective, str):
        objective = {"name": objective}
    seed = doc.get("seed", 0)
    if env.get(SEED_ENV):
        try:
            seed = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={env[SEED_ENV]!r} is not an integer") from None
    return RunConfig(
        space=space,
        strategy=_strategy_from(doc.get("strategy", {})),
        num_agents=doc.get("num_agents", 1),
        num_ips=doc.get("num_ips", 10),
        num_iter=doc.get("num_iter", 50),
        seed=seed,
        transport=TransportConfig(str(transport.get("kind", "inprocess")).lower(),
                                  transport.get("listen", "127.0.0.1:0"),
                                  transport.get("spawn", "local")),
        objective=objective.get("name", "ackley"),
        objective_params=dict(objective.get("params", {})),
        log_path=doc.get("log_path"),
    )


def load_config(path, env: Optional[dict] = None) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    cfg = config_from_dict(doc, env)
    if cfg.log_path and not Path(cfg.log_path).is_absolute():
        cfg = cfg.with_(log_path=str(path.parent / cfg.log_path))
    return cfg
