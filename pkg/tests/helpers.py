"""Builders for synthetic suites, outputs and in-memory runs."""

from lingeval.engine import apply_suite
from lingeval.store import EvaluationRun
from lingeval.suite import Rule, TestItem, TestSuite

PASS_TOKEN = "zxok"
FAIL_TOKEN = "zxbad"
NEITHER = "mumble mumble"

_PASS_RULE = Rule(pattern=PASS_TOKEN, kind="literal", polarity="pass")
_FAIL_RULE = Rule(pattern=FAIL_TOKEN, kind="literal", polarity="fail")


def slug(name: str) -> str:
    return "".join(ch if ch.isalnum() else "-" for ch in name.lower())


def make_suite(category_counts, phenomena_per_category=1, name="synthetic"):
    """One suite with `category_counts[cat]` items per category.

    Items cycle over `phenomena_per_category` phenomena inside each
    category; every item passes on PASS_TOKEN and fails on FAIL_TOKEN.
    """
    items = []
    for cat, count in category_counts.items():
        for i in range(count):
            phen = f"{cat} p{i % phenomena_per_category}"
            items.append(
                TestItem(
                    id=f"{slug(cat)}-{i:05d}",
                    source=f"Satz {i} zu {cat}.",
                    phenomenon=phen,
                    category=cat,
                    pass_rules=(_PASS_RULE,),
                    fail_rules=(_FAIL_RULE,),
                )
            )
    return TestSuite(name=name, version=1, items=tuple(items))


def make_outputs(suite, correct_per_group, warnings=frozenset(), by="category"):
    """Outputs: the first `correct_per_group[g]` non-warning items of each
    group translate 'correctly'; explicit `warnings` ids match no rule."""
    outputs = {}
    produced = {}
    for item in suite.items:
        if item.id in warnings:
            outputs[item.id] = NEITHER
            continue
        group = item.category if by == "category" else item.phenomenon
        done = produced.get(group, 0)
        want = correct_per_group.get(group, 0)
        outputs[item.id] = PASS_TOKEN if done < want else FAIL_TOKEN
        produced[group] = done + 1
    return outputs


def make_run(suite, outputs, system_id, run_id=None):
    auto = {j.item_id: j for j in apply_suite(suite, outputs, system_id)}
    return EvaluationRun(
        run_id=run_id or f"run-{system_id}",
        system_id=system_id,
        suite_name=suite.name,
        suite_version=suite.version,
        created_at="2020-01-01T00:00:00+00:00",
        outputs=dict(outputs),
        auto=auto,
    )


def state_digest(store):
    """Canonical store state, timestamps stripped, for equivalence checks."""
    suite = store.suite
    return {
        "suite_version": suite.version,
        "rules": {item.id: [r.compact() for r in item.rules] for item in suite.items},
        "runs": {
            run.run_id: {
                "system": run.system_id,
                "judged_version": run.suite_version,
                "verdicts": {i: run.effective_verdict(i) for i in run.item_ids()},
                "manual": {
                    i: (m.verdict, m.annotator_id) for i, m in sorted(run.manual.items())
                },
            }
            for run in store.runs()
        },
    }
