"""Paired nonparametric comparison of optimisation methods.

One-sided paired Wilcoxon signed-rank tests (exact null distribution up
to 25 effective pairs, normal approximation beyond) with Holm-Bonferroni
step-down correction, and the "best or statistically equivalent to best"
summary used to rank methods across problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr
from scipy.stats import rankdata

# Exact enumeration of the signed-rank null up to this many non-zero pairs.
EXACT_LIMIT = 25


def _exact_p(doubled_ranks: np.ndarray, w2: int) -> float:
    """P(W+ <= w) under the signed-rank null, by subset-sum counting.

    ``doubled_ranks`` are the mid-ranks times two (integers), so the
    distribution of 2*W+ over all 2^R sign assignments is a polynomial
    with integer support; equivalent to full enumeration.
    """
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: counts.shape[0] - r]
        counts = counts + shifted
    return float(counts[: w2 + 1].sum() / 2.0 ** len(doubled_ranks))


def wilcoxon_one_sided_paired(a: np.ndarray, b: np.ndarray) -> float:
    """p-value for the alternative "a tends to be smaller than b".

    Zero differences are dropped; tied absolute differences get
    mid-ranks. Exact distribution up to 25 effective pairs, normal
    approximation with continuity and tie corrections above.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("a and b must be 1-d arrays of equal length")
    if a.shape[0] < 5:
        raise ValueError(f"need at least 5 pairs, got {a.shape[0]}")

    diff = a - b
    diff = diff[diff != 0.0]
    n = diff.shape[0]
    if n == 0:
        return 1.0

    ranks = rankdata(np.abs(diff))
    w_plus = float(ranks[diff > 0].sum())

    if n <= EXACT_LIMIT:
        doubled = np.rint(2.0 * ranks).astype(np.int64)
        return _exact_p(doubled, int(round(2.0 * w_plus)))

    mu = n * (n + 1) / 4.0
    tie_counts = np.unique(ranks, return_counts=True)[1]
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(
        tie_counts**3 - tie_counts
    ) / 48.0
    z = (w_plus - mu + 0.5) / math.sqrt(var)
    return float(ndtr(z))


def holm_bonferroni(
    pvalues: np.ndarray | list[float], alpha: float = 0.05
) -> tuple[np.ndarray, np.ndarray]:
    """Step-down Holm adjustment; returns (adjusted p-values, rejections).

    Sorted p-values are scaled by the number of remaining hypotheses, a
    running maximum enforces monotonicity, and hypotheses with adjusted
    p below alpha are rejected. Output arrays follow the input order.
    """
    p = np.asarray(pvalues, dtype=float)
    if p.ndim != 1:
        raise ValueError("p-values must be a 1-d sequence")
    if np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.shape[0]
    order = np.argsort(p, kind="stable")
    adjusted_sorted = p[order] * (m - np.arange(m))
    adjusted_sorted = np.minimum(np.maximum.accumulate(adjusted_sorted), 1.0)
    adjusted = np.empty(m)
    adjusted[order] = adjusted_sorted
    return adjusted, adjusted < alpha


@dataclass(frozen=True)
class ComparisonReport:
    """Per-problem method comparison at a fixed budget."""

    problem: str
    methods: tuple[str, ...]
    medians: dict[str, float]
    mads: dict[str, float]
    best_method: str
    pvalues: dict[str, float]  # raw, best-vs-method
    adjusted_pvalues: dict[str, float]
    equivalent: dict[str, bool]  # includes the best method itself


def compare_methods(
    problem: str, regrets: dict[str, np.ndarray], alpha: float = 0.05
) -> ComparisonReport:
    """Rank methods on one problem by final regret.

    The lowest-median method is "best"; every other method is tested
    against it with the one-sided alternative "best < method", and those
    not rejected after Holm correction count as equivalent to the best.

    With fewer than 5 repeats the signed-rank test cannot reject at any
    conventional level, so p-values of 1 are reported and every method
    counts as equivalent.
    """
    methods = tuple(regrets)
    if len(methods) < 1:
        raise ValueError("at least one method is required")
    medians = {name: float(np.median(vals)) for name, vals in regrets.items()}
    mads = {
        name: float(np.median(np.abs(np.asarray(vals) - medians[name])))
        for name, vals in regrets.items()
    }
    best = min(methods, key=lambda name: medians[name])

    others = [name for name in methods if name != best]
    repeats = len(np.asarray(regrets[best]))
    if repeats >= 5:
        pvalues = {
            name: wilcoxon_one_sided_paired(regrets[best], regrets[name])
            for name in others
        }
    else:
        pvalues = {name: 1.0 for name in others}
    equivalent = {best: True}
    adjusted: dict[str, float] = {}
    if others:
        adj, reject = holm_bonferroni([pvalues[name] for name in others], alpha)
        for name, a, r in zip(others, adj, reject):
            adjusted[name] = float(a)
            equivalent[name] = not bool(r)
    return ComparisonReport(
        problem, methods, medians, mads, best, pvalues, adjusted, equivalent
    )


def best_or_equivalent_summary(reports: list[ComparisonReport]) -> dict[str, int]:
    """Across problems, how often each method is best or equivalent to it."""
    if not reports:
        raise ValueError("at least one comparison report is required")
    counts: dict[str, int] = {}
    for report in reports:
        for method in report.methods:
            counts.setdefault(method, 0)
            if report.equivalent.get(method, False):
                counts[method] += 1
    return counts
