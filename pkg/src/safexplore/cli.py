"""Command-line entry point.

Exit status: 0 for SUCCESS or a clean TIMEOUT, 1 when a Violation was
recorded, 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .runlog import LogError, RunLog
from .scenario import ScenarioError, load_scenario, shipped_scenario

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2

log = logging.getLogger("safexplore")


def _scenario_path(text: str) -> Path:
    path = Path(text)
    if path.exists() or path.suffix:
        return path
    return shipped_scenario(text)


def _load(args) -> "ScenarioConfig":  # noqa: F821
    cfg = load_scenario(_scenario_path(args.scenario))
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if getattr(args, "max_ticks", None) is not None:
        if args.max_ticks < 0:
            raise ScenarioError("--max-ticks must be non-negative")
        cfg = replace(cfg, max_ticks=args.max_ticks)
    if getattr(args, "epsilon", None) is not None:
        if not 0.0 <= args.epsilon <= 1.0:
            raise ScenarioError("--epsilon must lie in [0, 1]")
        cfg = replace(cfg, epsilon=args.epsilon)
    if args.hj_cache is not None:
        cfg = replace(cfg, hj_cache=args.hj_cache)
    return cfg


def cmd_run(args) -> int:
    from . import sim
    from .plots import emit_plots

    try:
        cfg = _load(args)
        ts = sim.prepare_tracking(cfg)
        runner = sim.run_baseline_optimistic if args.baseline == "optimistic" else sim.run
        result = runner(cfg, ts)
    except ScenarioError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result.log.write(out / "runlog.jsonl")
    if not args.no_plots:
        emit_plots(result.log, out / "plots")
    (out / "result.json").write_text(json.dumps(result.metrics, indent=2, sort_keys=True) + "\n")
    print(f"{cfg.name} seed={cfg.seed}: {result.outcome.value} after {result.ticks} ticks ({result.metrics['time']:.1f} s)")
    for v in result.violations:
        print(f"  violation at t={v['t']:.2f}: {v.get('kind')}")
    return result.exit_code


def cmd_solve(args) -> int:
    from . import sim

    try:
        cfg = _load(args)
        ts = sim.prepare_tracking(cfg)
    except ScenarioError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    b = ts.bound
    print(f"artefact: {ts.artefact}")
    print(f"level {b.level:.4f}  radius {b.radius:.4f} m  kappa {b.kappa:.4f}  z_extent {b.z_extent:.4f} m")
    return EXIT_OK


def cmd_plot(args) -> int:
    from .plots import emit_plots

    try:
        log_ = RunLog.read(args.log)
    except (OSError, LogError) as exc:
        print(f"cannot read run log: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in emit_plots(log_, args.out):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="safexplore", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p):
        p.add_argument("--scenario", required=True, help="scenario file, or the name of a shipped scenario")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--hj-cache", default=None, help="value-grid file or cache directory")

    run = sub.add_parser("run", help="simulate a scenario")
    scenario_args(run)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--max-ticks", type=int, default=None)
    run.add_argument("--baseline", choices=["optimistic"], default=None)
    run.add_argument("--epsilon", type=float, default=None)
    run.add_argument("--no-plots", action="store_true")
    run.set_defaults(func=cmd_run)

    solve = sub.add_parser("solve", help="solve (or load) the tracking value functions")
    scenario_args(solve)
    solve.set_defaults(func=cmd_solve)

    plot = sub.add_parser("plot", help="regenerate figures from a run log")
    plot.add_argument("--log", required=True)
    plot.add_argument("--out", required=True)
    plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    level = logging.WARNING - 10 * args.verbose
    logging.basicConfig(level=max(level, logging.DEBUG), format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
