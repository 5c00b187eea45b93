"""Experiment orchestration, statistics and reporting."""

from .campaign import (
    Campaign,
    CampaignResult,
    load_traces,
    make_campaign,
    repeat_seed,
    run_campaign,
    run_key,
    trace_filename,
)
from .report import (
    build_comparisons,
    consecutive_distances,
    emit_report,
    final_log_regrets,
    final_regrets,
    group_traces,
)
from .stats import (
    ComparisonReport,
    best_or_equivalent_summary,
    compare_methods,
    holm_bonferroni,
    wilcoxon_one_sided_paired,
)

__all__ = [
    "Campaign",
    "CampaignResult",
    "ComparisonReport",
    "best_or_equivalent_summary",
    "build_comparisons",
    "compare_methods",
    "consecutive_distances",
    "emit_report",
    "final_log_regrets",
    "final_regrets",
    "group_traces",
    "holm_bonferroni",
    "load_traces",
    "make_campaign",
    "repeat_seed",
    "run_campaign",
    "run_key",
    "trace_filename",
    "wilcoxon_one_sided_paired",
]
