"""Command-line entry point: ``swarmopt run|sweep|agent|validate``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import statistics
import sys
from pathlib import Path
from typing import Optional, Sequence

from swarmopt import coordinator
from swarmopt.bench import make_objective
from swarmopt.config import RunConfig, load_config
from swarmopt.errors import ConfigError, SwarmOptError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_CONNECT = 4

SWEEP_FIELDS = ["agents", "delay_s", "repeat", "seed", "wall_time_s", "best_value", "status"]
SUMMARY_FIELDS = ["agents", "delay_s", "runs_ok", "median_wall_time_s", "median_best_value"]


def _err(msg: str) -> None:
    print(f"swarmopt: {msg}", file=sys.stderr)


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def format_summary(result: coordinator.RunResult) -> str:
    point = "[" + ",".join(repr(float(x)) for x in result.best_point) + "]"
    return (f"best_value={result.best_value!r} best_point={point} "
            f"wall_time_s={result.wall_time:.3f} trials={len(result.trials)}")


def cmd_validate(path) -> int:
    try:
        load_config(path)
    except ConfigError as exc:
        _err(f"invalid config: {exc}")
        return EXIT_CONFIG
    print("ok")
    return EXIT_OK


def cmd_run(path) -> int:
    try:
        cfg = load_config(path)
    except ConfigError as exc:
        _err(f"invalid config: {exc}")
        return EXIT_CONFIG
    try:
        result = coordinator.run(cfg)
    except OSError as exc:
        _err(f"IoError: {exc}")
        return EXIT_RUNTIME
    except SwarmOptError as exc:
        _err(f"run aborted: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME
    print(format_summary(result))
    return EXIT_OK


def _sweep_log_path(cfg: RunConfig, agents: int, delay: float, repeat: int) -> Optional[str]:
    if not cfg.log_path:
        return None
    base = Path(cfg.log_path)
    return str(base.with_name(f"{base.stem}_a{agents}_d{delay:g}_r{repeat}{base.suffix or '.jsonl'}"))


def sweep_rows(cfg: RunConfig, agents: Sequence[int], delays: Sequence[float], repeats: int):
    """Yield one CSV row per (agents, delay, repeat) cell; failures become status rows."""
    for n in agents:
        for delay in delays:
            for r in range(repeats):
                seed = cfg.seed + r
                row = {"agents": n, "delay_s": delay, "repeat": r, "seed": seed,
                       "wall_time_s": "", "best_value": "", "status": "ok"}
                try:
                    params = {k: v for k, v in cfg.objective_params.items() if k != "delay_s"}
                    if delay > 0 or cfg.objective == "ackley+delay":
                        params["delay_s"] = delay
                    run_cfg = cfg.with_(num_agents=n, seed=seed, objective_params=params,
                                        log_path=_sweep_log_path(cfg, n, delay, r))
                    result = coordinator.run(run_cfg)
                    row["wall_time_s"] = result.wall_time
                    row["best_value"] = result.best_value
                except Exception as exc:  # one failed cell must not stop the sweep
                    row["status"] = f"error: {type(exc).__name__}: {exc}"
                yield row


def summarize(rows: Sequence[dict]) -> list[dict]:
    cells: dict[tuple, list[dict]] = {}
    for row in rows:
        cells.setdefault((row["agents"], row["delay_s"]), []).append(row)
    out = []
    for (n, delay), group in cells.items():
        ok = [r for r in group if r["status"] == "ok"]
        out.append({
            "agents": n,
            "delay_s": delay,
            "runs_ok": len(ok),
            "median_wall_time_s": statistics.median(r["wall_time_s"] for r in ok) if ok else "",
            "median_best_value": statistics.median(r["best_value"] for r in ok) if ok else "",
        })
    return out


def cmd_sweep(path, agents: Sequence[int], delays: Sequence[float], repeats: int, out) -> int:
    if repeats < 1:
        _err("--repeats must be >= 1")
        return EXIT_CONFIG
    try:
        cfg = load_config(path)
    except ConfigError as exc:
        _err(f"invalid config: {exc}")
        return EXIT_CONFIG
    out = Path(out)
    rows = []
    try:
        with out.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=SWEEP_FIELDS)
            writer.writeheader()
            for row in sweep_rows(cfg, agents, delays, repeats):
                writer.writerow(row)
                fh.flush()
                rows.append(row)
                print(f"agents={row['agents']} delay_s={row['delay_s']} repeat={row['repeat']} "
                      f"wall_time_s={row['wall_time_s']} status={row['status']}", file=sys.stderr)
        summary_path = out.with_name(out.stem + "_summary.csv")
        with summary_path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS)
            writer.writeheader()
            writer.writerows(summarize(rows))
    except OSError as exc:
        _err(f"IoError: {exc}")
        return EXIT_RUNTIME
    failed = sum(r["status"] != "ok" for r in rows)
    print(f"rows={len(rows)} failed={failed} csv={out} summary={summary_path}")
    return EXIT_OK


def cmd_agent(address: str, objective: str, params: Optional[dict] = None,
              agent_id: Optional[int] = None, seed: int = 0, config_path=None) -> int:
    from swarmopt.transport import agent_loop, connect_agent

    space = None
    if config_path:
        try:
            cfg = load_config(config_path)
        except ConfigError as exc:
            _err(f"invalid config: {exc}")
            return EXIT_CONFIG
        space, seed = cfg.space, cfg.seed
        objective, params = cfg.objective, {**cfg.objective_params, **(params or {})}
    try:
        binding = make_objective(objective, params, space, seed, agent_id or 0)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    try:
        endpoint = connect_agent(address, agent_id)
    except (OSError, ValueError) as exc:
        _err(f"cannot connect to {address}: {exc}")
        return EXIT_CONNECT
    agent_loop(endpoint, endpoint, binding, -1 if agent_id is None else agent_id)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swarmopt", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute one configured run")
    p.add_argument("config")

    p = sub.add_parser("validate", help="check a config without running it")
    p.add_argument("config")

    p = sub.add_parser("sweep", help="run agents x delays x repeats and write CSV")
    p.add_argument("config")
    p.add_argument("--agents", type=_ints, default=[1])
    p.add_argument("--delays", type=_floats, default=[0.0])
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--out", default="sweep.csv")

    p = sub.add_parser("agent", help="serve evaluations for a TCP coordinator")
    p.add_argument("--connect", required=True, metavar="HOST:PORT")
    p.add_argument("--objective", default="ackley")
    p.add_argument("--params", type=json.loads, default=None, help="objective parameters as JSON")
    p.add_argument("--agent-id", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None, help="take objective, space and seed from a run config")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    if args.command == "run":
        return cmd_run(args.config)
    if args.command == "validate":
        return cmd_validate(args.config)
    if args.command == "sweep":
        return cmd_sweep(args.config, args.agents, args.delays, args.repeats, args.out)
    return cmd_agent(args.connect, args.objective, args.params, args.agent_id, args.seed, args.config)


if __name__ == "__main__":
    sys.exit(main())
