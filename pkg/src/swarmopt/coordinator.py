"""Central solver event loop.

Two phases over any strategy and transport:

* initial: seed every agent with one initial point, then refill whichever
  agent reports back until the initial queue is drained and collected;
* heuristic: repeatedly ask the strategy for ``min(remaining, num_agents)``
  points, hand one to each of the first agents, and wait for the whole batch
  before asking again.

The loop never blocks on a port: every ``recv`` follows a successful ``probe``.
"""

from __future__ import annotations

import json
import logging
import math
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from swarmopt.errors import ProtocolError
from swarmopt.strategy import Strategy, Trial
from swarmopt.transport import (
    AgentPool,
    Candidate,
    PortPair,
    Result,
    spawn_inprocess,
    spawn_tcp,
    wait_for_tcp_agents,
)

log = logging.getLogger(__name__)

IDLE_SLEEP_S = 0.001
LOG_SCHEMA = 1


class TrialLog:
    """JSONL trial log: one header line, then one line per completed trial."""

    def __init__(self, path, config: dict):
        self.path = Path(path)
        self._fh = self.path.open("w", encoding="utf-8")
        self._write({"schema": LOG_SCHEMA, "config": config})
        self.flush()

    def _write(self, obj: dict) -> None:
        self._fh.write(json.dumps(obj, allow_nan=False, separators=(",", ":")) + "\n")

    def append(self, trial: Trial) -> None:
        self._write(trial.to_record())

    def flush(self) -> None:
        self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()


def write_log(trials: Sequence[Trial], path, config: Optional[dict] = None) -> Path:
    out = TrialLog(path, config or {})
    try:
        for t in trials:
            out.append(t)
    finally:
        out.close()
    return out.path


def read_log(path) -> tuple[dict, list[dict]]:
    """Return ``(header, trial_records)``; an ``"inf"`` value decodes to ``math.inf``."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = json.loads(lines[0])
    records = []
    for line in lines[1:]:
        rec = json.loads(line)
        if rec["value"] == "inf":
            rec["value"] = math.inf
        records.append(rec)
    return header, records


@dataclass
class RunResult:
    trials: list
    best_point: tuple
    best_value: float
    wall_time: float
    per_agent_counts: list
    batches: int = 0
    log_path: Optional[str] = None


class Coordinator:
    def __init__(self, strategy: Strategy, ports: Sequence[PortPair],
                 trial_log: Optional[TrialLog] = None, clock=time.perf_counter):
        self.strategy = strategy
        self.ports = list(ports)
        self.num_agents = len(self.ports)
        self.trial_log = trial_log
        self._clock = clock
        self._t0 = clock()
        self._next_id = 0
        self.outstanding: dict[int, Trial] = {}
        self.completed: list[Trial] = []
        self.batches = 0

    def _now(self) -> float:
        return self._clock() - self._t0

    def _dispatch(self, agent: int, point, phase: str, batch: int) -> Trial:
        if agent in self.outstanding:
            raise ProtocolError(f"agent {agent} already has trial {self.outstanding[agent].trial_id} outstanding")
        trial = Trial(self._next_id, tuple(point), agent_id=agent, phase=phase, batch=batch,
                      dispatched_at=self._now())
        self._next_id += 1
        self.outstanding[agent] = trial
        self.ports[agent].to_agent.send(Candidate(trial.trial_id, trial.point))
        return trial

    def _collect(self, agent: int) -> Optional[Trial]:
        """Receive, record and tell one Result from ``agent`` if one is ready."""
        port = self.ports[agent].from_agent
        if not port.probe():
            return None
        msg = port.recv()
        trial = self.outstanding.pop(agent, None)
        if not isinstance(msg, Result) or trial is None or msg.trial_id != trial.trial_id:
            raise ProtocolError(f"agent {agent} sent {msg!r}, expected result for "
                                f"{None if trial is None else trial.trial_id}")
        trial.complete(msg.value, msg.duration_s, self._now())
        self.strategy.tell(trial)
        self.completed.append(trial)
        if self.trial_log:
            self.trial_log.append(trial)
        return trial

    def phase_initial(self, num_ips: int) -> int:
        if num_ips < self.num_agents:
            raise ValueError(f"num_ips={num_ips} < num_agents={self.num_agents}")
        queue = deque(self.strategy.initial_points(num_ips))
        for i in range(self.num_agents):
            self._dispatch(i, queue.popleft(), "initial", 0)
        completed = 0
        while completed < num_ips:
            progressed = False
            for i in range(self.num_agents):
                if self._collect(i) is None:
                    continue
                progressed = True
                completed += 1
                if queue:
                    self._dispatch(i, queue.popleft(), "initial", 0)
            if not progressed:
                time.sleep(IDLE_SLEEP_S)
        if self.trial_log:
            self.trial_log.flush()
        return completed

    def phase_heuristic(self, num_iter: int, num_ips: int) -> int:
        completed = num_ips
        while True:
            num_points = min(num_iter - completed, self.num_agents)
            if num_points <= 0:
                return completed
            points = self.strategy.ask(num_points)
            if not points:
                log.warning("strategy returned no points with %d iterations left", num_iter - completed)
                return completed
            self.batches += 1
            for i, p in enumerate(points):
                self._dispatch(i, p, "heuristic", self.batches)
            num_complete = 0
            while num_complete < len(points):
                progressed = False
                for i in range(len(points)):
                    if i in self.outstanding and self._collect(i) is not None:
                        progressed = True
                        num_complete += 1
                        completed += 1
                if not progressed:
                    time.sleep(IDLE_SLEEP_S)
            if self.trial_log:
                self.trial_log.flush()


def start_agents(config) -> AgentPool:
    factory = config.objective_factory()
    transport = config.transport
    if transport.kind == "inprocess":
        return spawn_inprocess(factory, config.num_agents)
    if transport.spawn == "external":
        return wait_for_tcp_agents(config.num_agents, transport.listen)
    return spawn_tcp(factory, config.num_agents, transport.listen)


def run(config, pool: Optional[AgentPool] = None) -> RunResult:
    """Execute one configured run end to end and shut the agents down."""
    t0 = time.perf_counter()
    trial_log = TrialLog(config.log_path, config.to_dict()) if config.log_path else None
    own_pool = pool is None
    try:
        pool = pool or start_agents(config)
        try:
            coord = Coordinator(config.build_strategy(), pool.ports, trial_log)
            coord.phase_initial(config.num_ips)
            coord.phase_heuristic(config.num_iter, config.num_ips)
        finally:
            if own_pool:
                pool.shutdown()
    finally:
        if trial_log:
            trial_log.close()
    wall = time.perf_counter() - t0
    best_point, best_value = coord.strategy.best()
    counts = [0] * config.num_agents
    for t in coord.completed:
        counts[t.agent_id] += 1
    return RunResult(coord.completed, best_point, best_value, wall, counts, coord.batches,
                     config.log_path)
