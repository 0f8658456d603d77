"""Command-line entry point.

Subcommands: simulate (roll a policy, write log + summary + figures),
benchmark (multi-run metric report as CSV/table/JSON + figures), generate
(write a predefined scenario file), ingest (road network -> scenario file),
serve (start the session service), replay (verify a log reproduces exactly).

Exit codes: 0 success, 1 usage error, 2 runtime error (including replay
divergence).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .benchmarks import PREDEFINED, generate_predefined, run_benchmark
from .episode_log import read_episode_log, replay_episode, write_episode_log
from .policies import parse_policy
from .scenario_io import (
    fingerprint,
    ingest_road_network,
    parse_scenario,
    sample_network_path,
    write_scenario,
)
from .simulator import run_episode


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _load_scenario(ref: str, seed: int | None):
    """A scenario flag is either a predefined name or a file path."""
    if ref in PREDEFINED:
        return generate_predefined(ref, seed=seed or 0)
    path = Path(ref)
    if not path.exists():
        raise UsageError(
            f"scenario {ref!r} is neither a predefined name ({', '.join(PREDEFINED)}) "
            f"nor an existing file"
        )
    config = parse_scenario(path)
    if seed is not None:
        import dataclasses

        config = dataclasses.replace(config, master_seed=seed)
    return config


def _cmd_generate(args) -> int:
    config = generate_predefined(args.name, seed=args.seed)
    out = Path(args.out or f"{args.name}.json")
    write_scenario(config, out)
    print(f"wrote {out} ({config.n_components} components, fingerprint {fingerprint(config)[:12]})")
    return 0


def _cmd_simulate(args) -> int:
    config = _load_scenario(args.scenario, args.seed)
    policy = parse_policy(args.policy)
    log = run_episode(config, policy, seed=args.seed, include_true_ci=not args.omit_true_ci)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    log_path = outdir / "episode.jsonl"
    write_episode_log(log, log_path)

    summary = {
        "scenario": config.name,
        "fingerprint": log.fingerprint,
        "policy": log.policy,
        "seed": log.seed,
        "summary": log.summary.__dict__,
    }
    (outdir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )

    rows = ["t,reward,cost_total,budget_remaining,mean_true_ci,min_true_ci,new_failures"]
    for rec in log.records:
        if rec.true_ci is not None:
            mean_ci = sum(rec.true_ci) / len(rec.true_ci)
            min_ci = min(rec.true_ci)
        else:
            mean_ci = min_ci = float("nan")
        rows.append(
            f"{rec.t},{rec.reward!r},{rec.cost_total!r},{rec.budget_remaining!r},"
            f"{mean_ci!r},{min_ci!r},{len(rec.new_failures)}"
        )
    (outdir / "steps.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")

    if not args.no_plots:
        from .plotting import save_budget_figure, save_condition_figure

        save_condition_figure(log, outdir / "condition.png")
        save_budget_figure(log, outdir / "budget.png")

    s = log.summary
    print(
        f"episode: {s.steps} steps  return {s.episode_return:.6g}  "
        f"ettf {s.ettf:.6g}  spent {s.spent_total:.6g}/{s.allocated_total:.6g}  "
        f"replacements {s.replacements_total}"
    )
    print(f"outputs in {outdir}")
    return 0


def _cmd_benchmark(args) -> int:
    config = _load_scenario(args.scenario, None)
    report = run_benchmark(
        config, args.policy, n_runs=args.runs, base_seed=args.seed, jobs=args.jobs
    )
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    (outdir / "report.json").write_text(report.to_json(), encoding="utf-8")
    (outdir / "report.txt").write_text(report.to_table(), encoding="utf-8")
    if not args.no_plots:
        from .plotting import save_benchmark_figure

        save_benchmark_figure(report, outdir / "benchmark.png")
    print(report.to_table() if args.format == "table" else report.to_csv(), end="")
    print(f"outputs in {outdir}", file=sys.stderr)
    return 0


def _cmd_ingest(args) -> int:
    network = args.network or str(sample_network_path())
    config = ingest_road_network(
        network,
        scale_base=args.scale_base,
        speed_ref=args.speed_ref,
        cost_rate=args.cost_rate,
        budget_cycle_amount=args.budget_cycle_amount,
        budget_cycle_length=args.budget_cycle_length,
        horizon=args.horizon,
        max_rehabs_per_step=args.max_rehabs_per_step,
        seed=args.seed,
    )
    write_scenario(config, args.out)
    print(
        f"wrote {args.out}: {config.n_components} road segments, "
        f"horizon {config.horizon}, fingerprint {fingerprint(config)[:12]}"
    )
    return 0


def _cmd_replay(args) -> int:
    log = read_episode_log(args.log)
    result = replay_episode(log)
    if result.ok:
        print(f"replay ok: {result.steps_checked} steps reproduced exactly")
        return 0
    print(
        f"replay DIVERGED at step {result.first_divergence_step} "
        f"({result.field}): {result.detail}",
        file=sys.stderr,
    )
    return 2


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        session_cap=args.session_cap,
        snapshot_path=args.snapshot,
        ui_dir=args.ui,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="infrasim", description=__doc__)
    parser.add_argument("--version", action="version", version=f"infrasim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a predefined scenario file")
    p.add_argument("name", choices=PREDEFINED)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output path (default <name>.json)")
    p.set_defaults(fn=_cmd_generate)

    p = sub.add_parser("simulate", help="run one policy episode and write its artifacts")
    p.add_argument("--scenario", required=True, help="predefined name or scenario file")
    p.add_argument("--policy", default="no-action")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="sim-out")
    p.add_argument("--omit-true-ci", action="store_true", help="strict partial observability log")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("benchmark", help="multi-run metric report for a policy")
    p.add_argument("--scenario", required=True)
    p.add_argument("--policy", default="no-action")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="base seed (run i uses seed+i)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="bench-out")
    p.add_argument("--format", choices=("csv", "table"), default="table")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(fn=_cmd_benchmark)

    p = sub.add_parser("ingest", help="road network file -> scenario file")
    p.add_argument("--network", default=None, help="network file (default: bundled sample)")
    p.add_argument("--out", default="road-scenario.json")
    p.add_argument("--scale-base", type=float, default=60.0)
    p.add_argument("--speed-ref", type=float, default=40.0)
    p.add_argument("--cost-rate", type=float, default=5.0)
    p.add_argument("--budget-cycle-amount", type=float, default=50_000.0)
    p.add_argument("--budget-cycle-length", type=int, default=15)
    p.add_argument("--horizon", type=int, default=75)
    p.add_argument("--max-rehabs-per-step", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("replay", help="verify an episode log reproduces exactly")
    p.add_argument("--log", required=True)
    p.set_defaults(fn=_cmd_replay)

    # serve flags fall back to INFRASIM_* environment variables
    env = os.environ
    p = sub.add_parser("serve", help="start the session service")
    p.add_argument("--host", default=env.get("INFRASIM_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(env.get("INFRASIM_PORT", "8321")))
    p.add_argument("--session-cap", type=int, default=int(env.get("INFRASIM_SESSION_CAP", "256")))
    p.add_argument(
        "--snapshot",
        default=env.get("INFRASIM_SNAPSHOT"),
        help="pickle sessions here on shutdown",
    )
    p.add_argument(
        "--ui",
        default=env.get("INFRASIM_UI"),
        help="serve a built dashboard from this directory",
    )
    p.set_defaults(fn=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    try:
        return args.fn(args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    except Exception as e:  # runtime failures
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
