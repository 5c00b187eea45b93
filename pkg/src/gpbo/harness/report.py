"""Aggregation of run traces into tables, curve data and comparisons.

Emits per-problem median/MAD tables, convergence-curve data (median and
interquartile band of log regret per step), consecutive-distance curves,
and the method-comparison matrix, as CSV files plus a plain-text summary.
A "problem" is a (function, noise, acquisition, kernel) cell; the
"methods" compared within a cell are the inference backends.
"""

from __future__ import annotations

import math
import os
from collections import defaultdict

import numpy as np

from ..driver import RunTrace, simple_regret
from .stats import ComparisonReport, best_or_equivalent_summary, compare_methods

_FMT = "{:.9g}"


def consecutive_distances(trace: RunTrace, d: int | None = None) -> np.ndarray:
    """Normalised distances between consecutively acquired locations.

    Only post-initialisation steps contribute: the first distance is
    between the first two acquired points, and each distance is divided
    by sqrt(d) (the unit-cube diameter) so values lie in [0, 1].
    """
    if d is None:
        d = trace.records[0].x_unit.shape[0]
    s = trace.config.resolved_init_samples(d)
    if len(trace.records) < s + 2:
        raise ValueError("trace has no consecutive acquired pairs")
    acquired = np.array([r.x_unit for r in trace.records[s:]])
    steps = np.diff(acquired, axis=0)
    return np.linalg.norm(steps, axis=1) / math.sqrt(d)


def problem_label(trace: RunTrace) -> str:
    c = trace.config
    return f"{c.function}:n{c.noise:g}:{c.acquisition}:{c.kernel}"


def method_label(trace: RunTrace) -> str:
    return trace.config.inference


def group_traces(
    traces: list[RunTrace],
) -> dict[str, dict[str, list[RunTrace]]]:
    """problem -> method -> traces (sorted by seed for pairing)."""
    grouped: dict[str, dict[str, list[RunTrace]]] = defaultdict(
        lambda: defaultdict(list)
    )
    for trace in traces:
        grouped[problem_label(trace)][method_label(trace)].append(trace)
    for methods in grouped.values():
        for runs in methods.values():
            runs.sort(key=lambda tr: tr.config.seed)
    return {p: dict(ms) for p, ms in grouped.items()}


def final_regrets(
    runs: list[RunTrace], at_budget: int | None = None
) -> np.ndarray:
    """Simple regret of the best value seen by ``at_budget`` evaluations."""
    values = []
    for trace in runs:
        records = trace.records
        if at_budget is not None:
            records = records[: min(at_budget, len(records))]
        best = min(r.f_true for r in records)
        values.append(max(best - trace.f_min, 0.0))
    return np.asarray(values)


def final_log_regrets(
    runs: list[RunTrace], at_budget: int | None = None
) -> np.ndarray:
    """Log final regrets, floored like the per-step trace values."""
    return np.log(np.maximum(final_regrets(runs, at_budget), 1e-10))


def build_comparisons(
    traces: list[RunTrace], alpha: float = 0.05, at_budget: int | None = None
) -> list[ComparisonReport]:
    """Per-problem comparisons of methods by final log simple regret."""
    reports = []
    for problem, methods in sorted(group_traces(traces).items()):
        regrets = {
            name: final_log_regrets(runs, at_budget)
            for name, runs in sorted(methods.items())
        }
        counts = {name: len(v) for name, v in regrets.items()}
        if len(set(counts.values())) != 1:
            raise ValueError(f"unbalanced repeats for {problem}: {counts}")
        reports.append(compare_methods(problem, regrets, alpha))
    return reports


def _quartiles(values: np.ndarray) -> tuple[float, float, float]:
    return (
        float(np.quantile(values, 0.25, method="midpoint")),
        float(np.median(values)),
        float(np.quantile(values, 0.75, method="midpoint")),
    )


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(
                ",".join(
                    _FMT.format(v) if isinstance(v, float) else str(v) for v in row
                )
                + "\n"
            )


def emit_report(
    traces: list[RunTrace],
    out_dir: str,
    fmt: str = "csv",
    alpha: float = 0.05,
    at_budget: int | None = None,
) -> list[str]:
    """Write report files; returns the written paths.

    ``fmt="csv"`` writes the full CSV set plus ``summary.txt``;
    ``fmt="text"`` writes only the text summary.
    """
    if fmt not in ("csv", "text"):
        raise ValueError(f"unknown report format {fmt!r}")
    if not traces:
        raise ValueError("no traces to report on")
    os.makedirs(out_dir, exist_ok=True)
    grouped = group_traces(traces)
    reports = build_comparisons(traces, alpha, at_budget)
    written: list[str] = []

    if fmt == "csv":
        rows = []
        for report in reports:
            raw = {
                name: float(np.median(final_regrets(runs, at_budget)))
                for name, runs in grouped[report.problem].items()
            }
            for name in report.methods:
                rows.append(
                    [
                        report.problem,
                        name,
                        report.medians[name],
                        report.mads[name],
                        raw[name],
                    ]
                )
        path = os.path.join(out_dir, "final_regret.csv")
        _write_csv(
            path,
            [
                "problem", "method", "median_log_regret", "mad_log_regret",
                "median_regret",
            ],
            rows,
        )
        written.append(path)

        conv_rows, dist_rows = [], []
        for problem, methods in sorted(grouped.items()):
            for name, runs in sorted(methods.items()):
                series = np.stack(
                    [simple_regret(tr, tr.f_min) for tr in runs]
                )  # (runs, T)
                for t in range(series.shape[1]):
                    q25, med, q75 = _quartiles(series[:, t])
                    conv_rows.append([problem, name, t + 1, med, q25, q75])
                d = runs[0].records[0].x_unit.shape[0]
                s = runs[0].config.resolved_init_samples(d)
                try:
                    dists = np.stack([consecutive_distances(tr) for tr in runs])
                except ValueError:
                    continue  # runs too short for consecutive acquired pairs
                for i in range(dists.shape[1]):
                    q25, med, q75 = _quartiles(dists[:, i])
                    dist_rows.append([problem, name, s + 2 + i, med, q25, q75])
        path = os.path.join(out_dir, "convergence.csv")
        _write_csv(
            path,
            ["problem", "method", "t", "median_log_regret", "q25", "q75"],
            conv_rows,
        )
        written.append(path)
        path = os.path.join(out_dir, "distances.csv")
        _write_csv(
            path,
            ["problem", "method", "t", "median_distance", "q25", "q75"],
            dist_rows,
        )
        written.append(path)

        comp_rows = []
        for report in reports:
            for name in report.methods:
                comp_rows.append(
                    [
                        report.problem,
                        name,
                        report.medians[name],
                        report.pvalues.get(name, ""),
                        report.adjusted_pvalues.get(name, ""),
                        int(report.equivalent[name]),
                        report.best_method,
                    ]
                )
        path = os.path.join(out_dir, "comparison.csv")
        _write_csv(
            path,
            [
                "problem", "method", "median_log_regret", "p_value",
                "p_adjusted", "best_or_equivalent", "best_method",
            ],
            comp_rows,
        )
        written.append(path)

    lines = ["Method comparison (final log simple regret)", "=" * 44, ""]
    for report in reports:
        lines.append(report.problem)
        for name in report.methods:
            tag = "best" if name == report.best_method else (
                "equivalent" if report.equivalent[name] else "worse"
            )
            padj = report.adjusted_pvalues.get(name)
            ptxt = "-" if padj is None else _FMT.format(padj)
            lines.append(
                f"  {name:<6} median={_FMT.format(report.medians[name])} "
                f"mad={_FMT.format(report.mads[name])} p_adj={ptxt} [{tag}]"
            )
        lines.append("")
    counts = best_or_equivalent_summary(reports)
    lines.append("Best-or-equivalent counts across problems:")
    for name, count in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
        lines.append(f"  {name:<6} {count}/{len(reports)}")
    lines.append("")
    path = os.path.join(out_dir, "summary.txt")
    with open(path, "w") as fh:
        fh.write("\n".join(lines))
    written.append(path)
    return written
