"""Command-line interface.

Subcommands:

* ``gpbo run``     -- execute one configuration for R repeats into a
  campaign directory (resumable; traces are JSON-lines files).
* ``gpbo compare`` -- statistical comparison of the methods found in a
  campaign directory, printed as text.
* ``gpbo report``  -- write CSV/text report files for a campaign.

Flags can also be supplied through a JSON config file (``--config``);
explicit flags override file values. The ``GPBO_SEED`` environment
variable overrides the master seed everywhere.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .campaign import load_traces, make_campaign, run_campaign
from .report import build_comparisons, emit_report
from .stats import best_or_equivalent_summary

_RUN_OPTIONS: list[tuple[str, type, object, str]] = [
    # (name, type, default, help)
    ("function", str, None, "benchmark function name (required)"),
    ("noise", float, 0.0, "noise fraction (0 = noise-free)"),
    ("acq", str, "ei", "acquisition function: ei or ucb"),
    ("kernel", str, "ard", "kernel type: iso or ard"),
    ("inference", str, "map", "inference backend: map, mcmc, mfvi or frvi"),
    ("budget", int, 200, "total expensive evaluations per run"),
    ("init-samples", int, None, "initial design size (default 2d)"),
    ("repeats", int, 1, "number of repeated runs"),
    ("seed", int, 0, "master seed"),
    ("out", str, None, "output directory (required)"),
    ("parallelism", int, 1, "worker processes for repeats"),
    ("posterior-samples", int, 256, "posterior sample count M"),
    ("map-restarts", int, 10, "MAP multi-start count"),
    ("chains", int, 4, "NUTS chains"),
    ("burn-in", int, 2048, "NUTS burn-in iterations per chain"),
    ("thin", int, 50, "NUTS thinning factor"),
    ("advi-max-steps", int, 40000, "ADVI step cap"),
    ("advi-mc-samples", int, 8, "ADVI gradient draws per step"),
    ("acq-pool", int, 1024, "acquisition candidate pool size"),
    ("acq-starts", int, 10, "acquisition refinement starts"),
    ("range-samples", int, 10**6, "LHS probes for range estimation"),
]

_CHOICES = {
    "acq": ("ei", "ucb"),
    "kernel": ("iso", "ard"),
    "inference": ("map", "mcmc", "mfvi", "frvi"),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpbo",
        description="Bayesian optimisation benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute optimisation runs")
    run_p.add_argument("--config", type=str, default=None,
                       help="JSON file with defaults for any flag")
    for name, typ, _default, help_text in _RUN_OPTIONS:
        run_p.add_argument(
            f"--{name}", type=typ, default=None,
            choices=_CHOICES.get(name), help=help_text,
        )

    cmp_p = sub.add_parser("compare", help="compare methods in a directory")
    cmp_p.add_argument("--in", dest="in_dir", type=str, required=True)
    cmp_p.add_argument("--alpha", type=float, default=0.05)
    cmp_p.add_argument("--at-budget", type=int, default=None)

    rep_p = sub.add_parser("report", help="write report files")
    rep_p.add_argument("--in", dest="in_dir", type=str, required=True)
    rep_p.add_argument("--format", choices=("csv", "text"), default="csv")
    rep_p.add_argument("--alpha", type=float, default=0.05)
    rep_p.add_argument("--at-budget", type=int, default=None)
    return parser


def _resolve_run_options(args: argparse.Namespace) -> dict:
    """Merge defaults, config-file values and explicit flags (in that order)."""
    values = {name.replace("-", "_"): default for name, _t, default, _h in _RUN_OPTIONS}
    if args.config is not None:
        with open(args.config) as fh:
            file_values = json.load(fh)
        for key, value in file_values.items():
            key = key.replace("-", "_")
            if key not in values:
                raise SystemExit(f"unknown config key: {key}")
            values[key] = value
    for name, _t, _d, _h in _RUN_OPTIONS:
        key = name.replace("-", "_")
        flag = getattr(args, key)
        if flag is not None:
            values[key] = flag
    env_seed = os.environ.get("GPBO_SEED")
    if env_seed is not None:
        values["seed"] = int(env_seed)
    for required in ("function", "out"):
        if values[required] is None:
            raise SystemExit(f"--{required} is required (flag or config file)")
    return values


def _cmd_run(args: argparse.Namespace) -> int:
    v = _resolve_run_options(args)
    campaign = make_campaign(
        functions=[v["function"]],
        noises=[v["noise"]],
        acquisitions=[v["acq"]],
        kernels=[v["kernel"]],
        backends=[v["inference"]],
        repeats=v["repeats"],
        base_seed=v["seed"],
        budget=v["budget"],
        init_samples=v["init_samples"],
        posterior_samples=v["posterior_samples"],
        map_restarts=v["map_restarts"],
        chains=v["chains"],
        burn_in=v["burn_in"],
        thin=v["thin"],
        advi_max_steps=v["advi_max_steps"],
        advi_mc_samples=v["advi_mc_samples"],
        acq_pool=v["acq_pool"],
        acq_starts=v["acq_starts"],
        range_samples=v["range_samples"],
    )
    result = run_campaign(campaign, v["out"], parallelism=v["parallelism"])
    print(f"completed: {len(result.completed)}  skipped: {len(result.skipped)}  "
          f"failed: {len(result.failures)}")
    for path, err in result.failures.items():
        print(f"FAILED {path}\n{err}", file=sys.stderr)
    return 1 if result.failures else 0


def _cmd_compare(args: argparse.Namespace) -> int:
    traces = load_traces(args.in_dir)
    if not traces:
        print(f"no traces found in {args.in_dir}", file=sys.stderr)
        return 1
    reports = build_comparisons(traces, alpha=args.alpha, at_budget=args.at_budget)
    for report in reports:
        print(report.problem)
        for name in report.methods:
            tag = "best" if name == report.best_method else (
                "equivalent" if report.equivalent[name] else "worse"
            )
            print(
                f"  {name:<6} median_log_regret={report.medians[name]:.9g} "
                f"mad={report.mads[name]:.9g} [{tag}]"
            )
    counts = best_or_equivalent_summary(reports)
    print("best-or-equivalent counts:")
    for name, count in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
        print(f"  {name:<6} {count}/{len(reports)}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    traces = load_traces(args.in_dir)
    if not traces:
        print(f"no traces found in {args.in_dir}", file=sys.stderr)
        return 1
    out_dir = os.path.join(args.in_dir, "report")
    written = emit_report(
        traces, out_dir, fmt=args.format, alpha=args.alpha, at_budget=args.at_budget
    )
    for path in written:
        print(path)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "compare":
        return _cmd_compare(args)
    return _cmd_report(args)


if __name__ == "__main__":
    sys.exit(main())
