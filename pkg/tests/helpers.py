"""Shared helpers for coordinator-level tests."""

from swarmopt.bench import make_objective
from swarmopt.strategy import Trial


def sequential_oracle(cfg):
    """Direct initial_points / ask(1) / tell loop on a fresh strategy for ``cfg``."""
    strategy = cfg.build_strategy()
    objective = make_objective(cfg.objective, cfg.objective_params, cfg.space, cfg.seed, 0)
    out = []
    tid = 0
    for p in strategy.initial_points(cfg.num_ips):
        v = objective(p)
        strategy.tell(Trial(tid, p).complete(v, 0.0))
        out.append((p, v))
        tid += 1
    while tid < cfg.num_iter:
        (p,) = strategy.ask(1)
        v = objective(p)
        strategy.tell(Trial(tid, p).complete(v, 0.0))
        out.append((p, v))
        tid += 1
    return out


def check_barrier(records):
    """Every heuristic batch is dispatched after the previous batch (or phase) fully returned."""
    by_batch = {}
    for r in records:
        by_batch.setdefault(r["batch"], []).append(r)
    batches = sorted(by_batch)
    for prev, cur in zip(batches, batches[1:]):
        last_done = max(r["completed_at_s"] for r in by_batch[prev])
        first_sent = min(r["dispatched_at_s"] for r in by_batch[cur])
        assert first_sent >= last_done, (prev, cur)


def check_counts(result, records, cfg):
    assert len(result.trials) == cfg.num_iter == len(records)
    assert sorted(r["trial_id"] for r in records) == list(range(cfg.num_iter))
    assert sum(result.per_agent_counts) == cfg.num_iter
    assert result.best_value == min(r["value"] for r in records)
