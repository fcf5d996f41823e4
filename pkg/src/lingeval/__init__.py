"""Linguistic test-suite evaluation for machine translation outputs."""

from .bleu import corpus_bleu, tokenize
from .engine import AutoJudgment, apply_suite, judge, normalize, read_outputs, write_outputs
from .errors import InputError, LingevalError, PreconditionError
from .report import (
    ReportTable,
    build_category_report,
    build_phenomenon_report,
    build_year_report,
    render,
)
from .stats import (
    ClusterResult,
    GroupAccuracy,
    SignificanceConfig,
    YearDelta,
    accuracy,
    best_cluster,
    fair_item_set,
    macro_average,
    micro_average,
    year_delta,
    ztest,
)
from .store import (
    EvaluationRun,
    JudgmentStore,
    ManualResolution,
    ProgressSummary,
    ReJudgeReport,
)
from .suite import (
    Rule,
    TestItem,
    TestSuite,
    ValidationIssue,
    default_categories,
    load_suite,
    parse_rule,
    save_suite,
    taxonomy_stats,
    validate_suite,
)

__version__ = "0.1.0"

__all__ = [
    "AutoJudgment",
    "ClusterResult",
    "EvaluationRun",
    "GroupAccuracy",
    "InputError",
    "JudgmentStore",
    "LingevalError",
    "ManualResolution",
    "PreconditionError",
    "ProgressSummary",
    "ReJudgeReport",
    "ReportTable",
    "Rule",
    "SignificanceConfig",
    "TestItem",
    "TestSuite",
    "ValidationIssue",
    "YearDelta",
    "accuracy",
    "apply_suite",
    "best_cluster",
    "build_category_report",
    "build_phenomenon_report",
    "build_year_report",
    "corpus_bleu",
    "default_categories",
    "fair_item_set",
    "judge",
    "load_suite",
    "macro_average",
    "micro_average",
    "normalize",
    "parse_rule",
    "read_outputs",
    "render",
    "save_suite",
    "taxonomy_stats",
    "tokenize",
    "validate_suite",
    "write_outputs",
    "year_delta",
    "ztest",
]
