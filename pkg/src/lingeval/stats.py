"""Accuracy aggregation and significance testing over evaluation runs.

Integer counts are the source of truth everywhere; percentages are a
formatting concern (see report.py). Accuracies and averages are exact
fractions so recomputation from persisted counts is bit-for-bit stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

from .errors import PreconditionError
from .suite import PASS, WARNING, TestSuite

if TYPE_CHECKING:
    from .store import EvaluationRun

GROUP_CATEGORY = "category"
GROUP_PHENOMENON = "phenomenon"
GROUP_ALL = "all"

#: One-tailed critical value for 5% significance under the normal curve.
DEFAULT_CRITICAL_Z = 1.6449


class VersionMismatchError(PreconditionError):
    pass


class EmptyGroupError(PreconditionError):
    pass


class NoCommonItemsError(PreconditionError):
    pass


@dataclass(frozen=True)
class GroupAccuracy:
    kind: str  # category | phenomenon | all
    name: str
    system_id: str
    correct: int
    n: int

    def __post_init__(self) -> None:
        if not 0 <= self.correct <= self.n or self.n <= 0:
            raise ValueError(f"bad counts {self.correct}/{self.n} for group {self.name!r}")

    @property
    def accuracy(self) -> Fraction:
        return Fraction(self.correct, self.n)


@dataclass(frozen=True)
class SignificanceConfig:
    critical_z: float = DEFAULT_CRITICAL_Z
    # Pooled one-tailed two-proportion test; kept as data so reports can
    # record exactly what produced their boldface.
    test: str = "one-tailed pooled two-proportion z"

    def __post_init__(self) -> None:
        if self.critical_z <= 0:
            raise ValueError("critical_z must be positive")


@dataclass(frozen=True)
class ClusterResult:
    group: str
    best_system: str
    members: frozenset[str]
    zscores: dict[str, float] = field(hash=False)


@dataclass(frozen=True)
class YearDelta:
    system_id: str
    group: str
    correct_a: int
    n_a: int
    correct_b: int
    n_b: int

    @property
    def delta_pp(self) -> Fraction:
        """accuracy(b) - accuracy(a) in percentage points, exact."""
        return (Fraction(self.correct_b, self.n_b) - Fraction(self.correct_a, self.n_a)) * 100


def fair_item_set(runs: Iterable["EvaluationRun"]) -> set[str]:
    """Item ids whose effective verdict is pass or fail in every run."""
    runs = list(runs)
    if not runs:
        return set()
    versions = {run.suite_version for run in runs}
    if len(versions) > 1:
        raise VersionMismatchError(
            f"runs were judged under different suite versions: {sorted(versions)}"
        )
    fair: Optional[set[str]] = None
    for run in runs:
        ok = {item_id for item_id in run.item_ids() if run.effective_verdict(item_id) != WARNING}
        fair = ok if fair is None else fair & ok
    return fair or set()


def _group_key(suite: TestSuite, item_id: str, by: str) -> str:
    item = suite.item(item_id)
    if by == GROUP_CATEGORY:
        return item.category
    if by == GROUP_PHENOMENON:
        return item.phenomenon
    if by == GROUP_ALL:
        return GROUP_ALL
    raise ValueError(f"unknown grouping {by!r}")


def accuracy(
    suite: TestSuite, run: "EvaluationRun", item_ids: Iterable[str], by: str = GROUP_CATEGORY
) -> list[GroupAccuracy]:
    """Per-group correct/n over the given items, in suite order of groups."""
    ids = set(item_ids)
    if not ids:
        raise EmptyGroupError("no items left after filtering")
    order: list[str] = []
    correct: dict[str, int] = {}
    totals: dict[str, int] = {}
    for item in suite.items:  # suite order keeps output deterministic
        if item.id not in ids:
            continue
        group = _group_key(suite, item.id, by)
        if group not in totals:
            order.append(group)
            totals[group] = 0
            correct[group] = 0
        totals[group] += 1
        if run.effective_verdict(item.id) == PASS:
            correct[group] += 1
    missing = ids - {it.id for it in suite.items}
    if missing:
        raise EmptyGroupError(f"item ids not in suite: {sorted(missing)}")
    return [
        GroupAccuracy(kind=by, name=g, system_id=run.system_id, correct=correct[g], n=totals[g])
        for g in order
    ]


def micro_average(per_group: Sequence[GroupAccuracy]) -> Fraction:
    """Item-pooled accuracy: sum(correct) / sum(n) over disjoint groups."""
    if not per_group:
        raise EmptyGroupError("micro_average of no groups")
    return Fraction(sum(g.correct for g in per_group), sum(g.n for g in per_group))


def macro_average(per_group: Sequence[GroupAccuracy]) -> Fraction:
    """Unweighted mean of group accuracies (all groups count equally)."""
    if not per_group:
        raise EmptyGroupError("macro_average of no groups")
    return sum((g.accuracy for g in per_group), Fraction(0)) / len(per_group)


def ztest(correct1: int, n1: int, correct2: int, n2: int) -> float:
    """Pooled two-proportion z statistic for H1: p1 > p2.

    Antisymmetric in argument order. With a degenerate pool (all correct
    or none correct) the proportions are necessarily equal and z is 0;
    the sign-carrying infinity branch is kept as a guard.
    """
    if n1 <= 0 or n2 <= 0:
        raise ValueError("sample sizes must be positive")
    p1 = correct1 / n1
    p2 = correct2 / n2
    pooled = (correct1 + correct2) / (n1 + n2)
    var = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)
    if var == 0.0:
        if p1 == p2:
            return 0.0
        return math.copysign(math.inf, p1 - p2)
    return (p1 - p2) / math.sqrt(var)


def best_cluster(
    group_accuracies: Sequence[GroupAccuracy],
    config: SignificanceConfig = SignificanceConfig(),
) -> ClusterResult:
    """Systems not significantly below the best one for this group.

    Every system is compared against the highest-accuracy system; a system
    is a member iff that one-tailed z is below the critical value. The
    best system always has z = 0 against itself and is always a member.
    """
    if not group_accuracies:
        raise EmptyGroupError("best_cluster of no systems")
    groups = {g.name for g in group_accuracies}
    if len(groups) > 1:
        raise ValueError(f"best_cluster mixes groups: {sorted(groups)}")
    systems = [g.system_id for g in group_accuracies]
    if len(set(systems)) != len(systems):
        raise ValueError("duplicate system in group accuracies")
    best = max(group_accuracies, key=lambda g: (g.accuracy, g.system_id))
    zscores: dict[str, float] = {}
    members = set()
    for g in group_accuracies:
        z = ztest(best.correct, best.n, g.correct, g.n)
        zscores[g.system_id] = z
        if z < config.critical_z:
            members.add(g.system_id)
    return ClusterResult(
        group=group_accuracies[0].name,
        best_system=best.system_id,
        members=frozenset(members),
        zscores=zscores,
    )


def common_valid_items(run_a: "EvaluationRun", run_b: "EvaluationRun") -> set[str]:
    """Item ids with a clear verdict in both runs."""
    valid_a = {i for i in run_a.item_ids() if run_a.effective_verdict(i) != WARNING}
    valid_b = {i for i in run_b.item_ids() if run_b.effective_verdict(i) != WARNING}
    return valid_a & valid_b


def year_delta(
    suite: TestSuite,
    run_a: "EvaluationRun",
    run_b: "EvaluationRun",
    by: str = GROUP_CATEGORY,
) -> list[YearDelta]:
    """Per-group accuracy change from run_a to run_b over common items.

    Only items with a clear verdict in both runs (and present in the
    suite) enter the comparison; groups with no such items are omitted,
    which is what renders as a blank table cell.
    """
    common = {i for i in common_valid_items(run_a, run_b) if i in suite}
    if not common:
        raise NoCommonItemsError(
            f"runs {run_a.run_id} and {run_b.run_id} share no valid items"
        )
    acc_a = {g.name: g for g in accuracy(suite, run_a, common, by)}
    acc_b = {g.name: g for g in accuracy(suite, run_b, common, by)}
    deltas = []
    for name, b in acc_b.items():
        a = acc_a[name]  # same item set, so same groups on both sides
        deltas.append(
            YearDelta(
                system_id=run_b.system_id,
                group=name,
                correct_a=a.correct,
                n_a=a.n,
                correct_b=b.correct,
                n_b=b.n,
            )
        )
    return deltas
