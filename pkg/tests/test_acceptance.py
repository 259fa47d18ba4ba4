"""Exit criteria for the build, one test per criterion.

Each test records a PASS/FAIL line shown in the terminal summary.
"""

import math
import statistics
import sys
import threading

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from helpers import check_barrier, check_counts, sequential_oracle
from oracles import dense_lml, dense_posterior
from swarmopt import gp
from swarmopt.acquisition import AcquisitionSpec, LieStrategy, propose_batch
from swarmopt.config import RunConfig, StrategyConfig
from swarmopt.coordinator import read_log, run
from swarmopt.space import Continuous, SearchSpace, ackley_space, citation_space, normalize, sample_uniform, satellite_space
from swarmopt.transport import Candidate, Hello, Result, Shutdown, TcpListener, connect_agent


def report(number, title, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
    print(ACCEPTANCE_LINES[-1])
    assert ok, detail


def bo(**kw):
    return StrategyConfig("bayesian", **kw)


def test_01_grid_scaling():
    def wall(agents, seed):
        cfg = RunConfig(space=satellite_space(), strategy=StrategyConfig("grid"), objective="synthetic_satellite",
                        objective_params={"delay_s": 0.1}, num_agents=agents, num_ips=10, num_iter=270, seed=seed)
        return run(cfg).wall_time

    one = statistics.median(wall(1, r) for r in range(3))
    ten = statistics.median(wall(10, r) for r in range(3))
    ratio = one / ten
    report(1, "grid scaling 1->10 agents", ratio >= 5.0,
           f"median wall 1 agent {one:.2f}s, 10 agents {ten:.2f}s, ratio {ratio:.2f} (need >= 5.0)")


def test_02_delay_crossover():
    def wall(agents, delay, seed=0):
        params = {"delay_s": delay} if delay else {}
        cfg = RunConfig(space=ackley_space(2), strategy=bo(), num_agents=agents, num_ips=10, num_iter=30,
                        seed=seed, objective="ackley", objective_params=params)
        return run(cfg).wall_time

    w1_0 = statistics.median(wall(1, 0.0, s) for s in range(3))
    w5_0 = statistics.median(wall(5, 0.0, s) for s in range(3))
    w1_1, w5_1 = wall(1, 1.0), wall(5, 1.0)
    ok0 = w5_0 >= 0.5 * w1_0
    ok1 = w5_1 <= 0.6 * w1_1
    report(2, "delay crossover", ok0 and ok1,
           f"delay 0: 5 agents {w5_0:.3f}s vs 1 agent {w1_0:.3f}s (ratio {w5_0 / w1_0:.2f}, need >= 0.5); "
           f"delay 1s: {w5_1:.2f}s vs {w1_1:.2f}s (ratio {w5_1 / w1_1:.2f}, need <= 0.6)")


def test_03_bo_converges_on_ackley():
    bests = [run(RunConfig(space=ackley_space(2), strategy=bo(), num_agents=1, num_ips=10, num_iter=50,
                           seed=s)).best_value for s in range(10)]
    med, low = statistics.median(bests), min(bests)
    report(3, "BO convergence on Ackley", med <= 1.0 and low <= 0.3,
           f"median best {med:.4f} (need <= 1.0), min best {low:.4f} (need <= 0.3)")


def test_04_gp_oracle_equivalence():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(200):
        n, d = int(rng.integers(1, 21)), int(rng.integers(1, 5))
        X = rng.random((n, d))
        y = rng.normal(size=n) * rng.uniform(0.1, 10) + rng.uniform(-5, 5)
        h = gp.KernelHyper(float(rng.choice(gp.SIGNAL_GRID)), tuple(rng.uniform(0.05, 1.6, d)),
                           float(rng.choice([1e-4, 1e-2])))
        model = gp.fit(X, y, h)
        xq = rng.random(d)
        mu, var = model.predict(xq)
        mu_o, var_o = dense_posterior(X, y, xq, h.signal_variance, h.length_scales, h.noise_variance, model.jitter)
        lml = gp.log_marginal_likelihood(X, y, h) if n > 0 else 0.0
        lml_o = dense_lml(X, y, h.signal_variance, h.length_scales, h.noise_variance, model.jitter)
        for got, want in ((mu, mu_o), (var, max(var_o, 0.0)), (lml, lml_o)):
            worst = max(worst, abs(got - want) / max(1.0, abs(want)))
    report(4, "GP vs dense-inverse oracle", worst <= 1e-8, f"worst error {worst:.2e} over 200 instances (need <= 1e-8)")


def test_05_constant_liar_batches_distinct():
    spaces = {
        "2-d continuous": SearchSpace((Continuous("a", -5, 5), Continuous("b", -5, 5))),
        "citation discrete": citation_space(),
    }
    failures = []
    for label, space in spaces.items():
        for seed in range(100):
            rng = np.random.default_rng(seed)
            pts = [sample_uniform(space, rng) for _ in range(10)]
            X = np.array([normalize(space, p) for p in pts])
            y = np.array([np.sin(3 * x).sum() + (x ** 2).sum() for x in X])
            model = gp.fit(X, y, gp.select_hyperparameters(X, y, len(space)))
            batch = propose_batch(model, space, AcquisitionSpec(), 5, LieStrategy.MIN, rng)
            if len(set(batch)) != 5 or not all(space.contains(p) for p in batch):
                failures.append((label, seed))
    report(5, "constant-liar batch distinctness", not failures, f"{200 - len(failures)}/200 batches distinct")


def test_06_single_agent_sequential_equivalence():
    mismatches = []
    for kind in ("random", "grid", "bayesian"):
        for seed in range(3):
            space = satellite_space() if kind == "grid" else ackley_space(2)
            objective = "synthetic_satellite" if kind == "grid" else "ackley"
            cfg = RunConfig(space=space, strategy=StrategyConfig(kind), objective=objective,
                            num_agents=1, num_ips=10, num_iter=25, seed=seed)
            got = [(t.point, t.value) for t in run(cfg).trials]
            if got != sequential_oracle(cfg):
                mismatches.append((kind, seed))
    report(6, "single-agent sequential equivalence", not mismatches, f"9 runs, mismatches: {mismatches or 'none'}")


def test_07_count_and_protocol_invariants(tmp_path):
    rng = np.random.default_rng(77)
    checked = 0
    for i in range(12):
        agents = int(rng.integers(1, 7))
        ips = int(rng.integers(agents, agents + 8))
        iters = int(rng.integers(ips, ips + 20))
        kind = ["random", "bayesian"][i % 2]
        cfg = RunConfig(space=ackley_space(2), strategy=StrategyConfig(kind), num_agents=agents, num_ips=ips,
                        num_iter=iters, seed=i, objective_params={"delay_s": float(rng.choice([0.0, 0.002]))},
                        log_path=str(tmp_path / f"run{i}.jsonl"))
        result = run(cfg)
        _, records = read_log(cfg.log_path)
        check_counts(result, records, cfg)
        check_barrier(records)
        for k in range(agents):
            spans = sorted((r["dispatched_at_s"], r["completed_at_s"]) for r in records if r["agent_id"] == k)
            assert all(a[1] <= b[0] for a, b in zip(spans, spans[1:])), f"agent {k} overlapped"
        checked += 1
    report(7, "count and protocol invariants", checked == 12, f"{checked}/12 fuzzed runs satisfied all invariants")


def test_08_wire_round_trip_over_tcp():
    rng = np.random.default_rng(8)
    extremes = [sys.float_info.max, -sys.float_info.max, sys.float_info.min, 5e-324, -5e-324, -0.0, 0.0]

    def real():
        """Finite double: extremes, wide magnitudes, or raw random bit patterns."""
        while True:
            r = rng.random()
            if r < 0.2:
                x = float(rng.choice(extremes))
            elif r < 0.4:
                x = float(rng.normal() * 10.0 ** int(rng.integers(-300, 300)))
            elif r < 0.7:
                x = float(np.frombuffer(rng.bytes(8), dtype=np.float64)[0])
            else:
                x = float(rng.normal())
            if math.isfinite(x):
                return x

    msgs = []
    for i in range(10_000):
        kind = i % 4
        if kind == 0:
            coords = tuple(real() for _ in range(int(rng.integers(0, 6))))
            msgs.append(Candidate(int(rng.integers(0, 2**53)), coords))
        elif kind == 1:
            value = math.inf if rng.random() < 0.2 else real()
            msgs.append(Result(int(rng.integers(0, 2**53)), value, abs(real())))
        elif kind == 2:
            msgs.append(Shutdown())
        else:
            msgs.append(Hello(int(rng.integers(0, 100))))

    listener = TcpListener("127.0.0.1:0")
    sender = connect_agent(listener.address, 0)
    (pair,) = listener.accept_agents(1, timeout=5)
    receiver = pair.from_agent
    got = []

    def pump():
        while len(got) < len(msgs):
            receiver.wait(5)
            while len(got) < len(msgs) and receiver.probe():
                got.append(receiver.recv())

    t = threading.Thread(target=pump, daemon=True)
    t.start()
    for m in msgs:
        if isinstance(m, Shutdown):
            sender._sock.sendall(b'{"type":"shutdown"}\n')  # raw write: Shutdown closes the port for sends
        else:
            sender.send(m)
    t.join(30)
    sender.close()
    listener.close()
    bad = sum(repr(a) != repr(b) for a, b in zip(msgs, got)) + abs(len(msgs) - len(got))
    report(8, "wire-format round trip over TCP", bad == 0, f"{len(got)}/{len(msgs)} messages received, {bad} mismatches")


def test_09_multi_agent_bo_trend():
    def best(agents, seed):
        cfg = RunConfig(space=citation_space(), strategy=bo(), objective="synthetic_multimodal",
                        objective_params={"noise_std": 0.0}, num_agents=agents, num_ips=10, num_iter=30, seed=seed)
        return run(cfg).best_value

    def wall(agents, seed):
        cfg = RunConfig(space=citation_space(), strategy=bo(), objective="synthetic_multimodal",
                        objective_params={"noise_std": 0.0, "delay_s": 0.5}, num_agents=agents,
                        num_ips=10, num_iter=30, seed=seed)
        return run(cfg).wall_time

    q1 = statistics.median(best(1, s) for s in range(10))
    q5 = statistics.median(best(5, s) for s in range(10))
    w1 = statistics.median(wall(1, s) for s in range(3))
    w5 = statistics.median(wall(5, s) for s in range(3))
    ok = q5 <= 1.25 * q1 and w5 <= 0.6 * w1
    report(9, "multi-agent BO trend", ok,
           f"median best 5 agents {q5:.3f} vs 1 agent {q1:.3f} (ratio {q5 / q1:.2f}, need <= 1.25); "
           f"wall with 0.5s delay {w5:.2f}s vs {w1:.2f}s (ratio {w5 / w1:.2f}, need <= 0.6)")
