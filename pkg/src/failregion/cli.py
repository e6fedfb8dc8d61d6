"""Command-line front end.

Subcommands: simulate (one setting), sweep (matrix -> CSV/JSON),
summarize (CSV -> per-cell means), render (record JSON -> SVG), and
probe-external (search against a user-supplied command oracle).

Exit codes: 0 success, 2 partial failure (errors during runs), 3
configuration error.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, FailRegionError, NoFailureFoundError, \
    OracleUnavailableError
from .geometry import InputDomain, unit_domain
from .harness import ExperimentSetting, RunRecord, render_svg, run_setting, \
    summarize_csv, sweep
from .measure import inequality_report
from .oracles import ExternalProgramOracle
from .search import MODES, POLICIES, STRATEGIES, SearchConfig, \
    find_first_failure, run_strategy


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits with code 3 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(3, f"{self.prog}: error: {message}\n")


def _add_search_flags(p: argparse.ArgumentParser):
    p.add_argument("--strategy", choices=STRATEGIES, default="dsb")
    p.add_argument("--N", type=int, default=100, help="boundary inputs to harvest")
    p.add_argument("--L", type=float, default=1.0, help="initial extension length")
    p.add_argument("--lambda", dest="lam", type=int, default=20,
                   help="consecutive-miss threshold per ray")
    p.add_argument("--mode", choices=MODES, default="bracketing",
                   help="ray-search mode")
    p.add_argument("--orientation-policy", choices=POLICIES, default="all")
    p.add_argument("--probe-budget", type=int, default=1_000_000)
    p.add_argument("--k", type=int, default=10, help="diverse-orientation candidates")
    p.add_argument("--fscs-k", type=int, default=10, help="first-failure candidates")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="failregion",
                     description="Failure-region identification via boundary search")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", parents=[], help="run one simulated setting")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--theta", type=float, default=0.001)
    p.add_argument("--shape", choices=("rectangle", "ellipse"), default="rectangle")
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--mc-samples", type=int, default=200_000)
    p.add_argument("--no-timing", action="store_true",
                   help="record wall_time_ms as 0 for byte-reproducible output")
    p.add_argument("--out", type=Path, help="directory for record JSON files")
    _add_search_flags(p)

    p = sub.add_parser("sweep", help="run a settings matrix")
    p.add_argument("--matrix", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-timing", action="store_true")

    p = sub.add_parser("summarize", help="per-cell means from a results CSV")
    p.add_argument("--csv", type=Path, required=True)
    p.add_argument("--out", type=Path, help="write the summary here instead of stdout")

    p = sub.add_parser("render", help="render one record JSON to SVG")
    p.add_argument("--record", type=Path, required=True)
    p.add_argument("--axes", default="0,1", help="projection axes, e.g. 0,2")
    p.add_argument("--out", type=Path, help="output SVG path (default: record with .svg)")

    p = sub.add_parser("probe-external",
                       help="search against an external command oracle")
    p.add_argument("--command", required=True,
                   help="command template with one {x1}..{xd} placeholder per axis")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--domain", help="per-axis bounds lo:hi[,lo:hi...]; default unit cube")
    p.add_argument("--fail-convention", choices=ExternalProgramOracle.CONVENTIONS,
                   default="exit-code")
    p.add_argument("--timeout-ms", type=float, help="per-probe timeout in milliseconds")
    p.add_argument("--source", help="known failure-causing input x1,x2,...")
    p.add_argument("--out", type=Path, help="write the report JSON here")
    _add_search_flags(p)
    return parser


def _cmd_simulate(args) -> int:
    setting = ExperimentSetting(
        d=args.d, theta=args.theta, shape=args.shape, delta=args.delta,
        gamma=args.gamma, strategy=args.strategy, N=args.N, lam=args.lam,
        L=args.L, repetitions=args.reps, base_seed=args.seed)
    records = run_setting(setting, alg1_mode=args.mode,
                          orientation_policy=args.orientation_policy,
                          k=args.k, fscs_k=args.fscs_k,
                          probe_budget=args.probe_budget,
                          mc_samples=args.mc_samples,
                          timing=not args.no_timing)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
    failed = 0
    for rec in records:
        print(json.dumps(rec.to_dict()))
        if args.out:
            rec.save(args.out / f"{rec.setting_id}-r{rec.rep:04d}.json")
        if rec.status in ("infeasible-region", "no-failure-found"):
            failed += 1
    return 2 if failed else 0


def _cmd_sweep(args) -> int:
    result = sweep(args.matrix, args.out, jobs=args.jobs, timing=not args.no_timing)
    print(f"wrote {result.rows} rows to {result.csv_path}"
          + (f" ({result.errors} runs failed, see errors.log)" if result.errors else ""))
    return 2 if result.partial else 0


def _cmd_summarize(args) -> int:
    table = summarize_csv(args.csv)
    if args.out:
        args.out.write_text(table)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(table)
    return 0


def _cmd_render(args) -> int:
    record = RunRecord.load(args.record)
    try:
        axes = tuple(int(a) for a in args.axes.split(","))
        if len(axes) != 2:
            raise ValueError("need exactly two axes")
    except ValueError as exc:
        raise ConfigError(f"bad --axes {args.axes!r}: {exc}") from exc
    svg = render_svg(record, axes)
    out = args.out if args.out else args.record.with_suffix(".svg")
    Path(out).write_text(svg)
    print(f"wrote {out}")
    return 0


def _parse_domain(text: str | None, d: int) -> InputDomain:
    if text is None:
        return unit_domain(d)
    try:
        pairs = [part.split(":") for part in text.split(",")]
        lower = [float(p[0]) for p in pairs]
        upper = [float(p[1]) for p in pairs]
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bad --domain {text!r}: expected lo:hi,lo:hi,...") from exc
    if len(lower) != d:
        raise ConfigError(f"--domain lists {len(lower)} axes, --d says {d}")
    return InputDomain(np.array(lower), np.array(upper))


def _cmd_probe_external(args) -> int:
    domain = _parse_domain(args.domain, args.d)
    oracle = ExternalProgramOracle(args.command, args.d,
                                   fail_convention=args.fail_convention,
                                   timeout_ms=args.timeout_ms)
    rng = np.random.default_rng(args.seed)
    if args.source:
        source = np.array([float(v) for v in args.source.split(",")])
        if source.size != args.d:
            raise ConfigError(f"--source has {source.size} coordinates, --d says {args.d}")
        if not oracle(source):
            print("error: --source is not failure-causing under the oracle",
                  file=sys.stderr)
            return 2
    else:
        try:
            source = find_first_failure(oracle, domain, args.fscs_k, rng,
                                        budget=args.probe_budget)
        except NoFailureFoundError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    config = SearchConfig(strategy=args.strategy, N=args.N, L=args.L, lam=args.lam,
                          k=args.k, fscs_k=args.fscs_k,
                          orientation_policy=args.orientation_policy,
                          alg1_mode=args.mode, probe_budget=args.probe_budget,
                          seed=args.seed)
    harvest = run_strategy(config, [source], oracle, domain, rng)
    pts = np.asarray(harvest.boundary_inputs + harvest.source_inputs)
    report = {
        "command": args.command,
        "d": args.d,
        "strategy": args.strategy,
        "seed": args.seed,
        "source": [float(x) for x in source],
        "boundary_inputs": [[float(x) for x in p] for p in harvest.boundary_inputs],
        "probes": oracle.stats.probe_count,
        "fail_probes": oracle.stats.fail_count,
        "timeouts": oracle.timeouts,
        "iterations": harvest.iterations,
        "budget_exhausted": harvest.budget_exhausted,
        "afr_inequalities": inequality_report(pts),
    }
    text = json.dumps(report, indent=1)
    if args.out:
        args.out.write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "sweep": _cmd_sweep,
        "summarize": _cmd_summarize,
        "render": _cmd_render,
        "probe-external": _cmd_probe_external,
    }
    try:
        return handlers[args.subcommand](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 3
    except OracleUnavailableError as exc:
        print(f"oracle unavailable: {exc}", file=sys.stderr)
        return 2
    except FailRegionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
