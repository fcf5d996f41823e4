"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines.
"""

import json
import math
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from lingeval.bleu import corpus_bleu
from lingeval.demo import demo_outputs_path, demo_suite_path
from lingeval.engine import judge
from lingeval.report import build_year_report, fmt_pct, render
from lingeval.stats import (
    GroupAccuracy,
    SignificanceConfig,
    best_cluster,
    fair_item_set,
    macro_average,
    micro_average,
    ztest,
)
from lingeval.store import JudgmentStore, NotAWarningError, StoreError
from lingeval.suite import Rule, TestItem, load_suite

import wmt20_data as W
from helpers import make_outputs, make_run, make_suite

CRITICAL_Z = 1.6449


def published_accuracy_groups(system_idx):
    """The 14 published category percentages, fed in as exact fractions."""
    return [
        GroupAccuracy(
            "category", cat, W.SYSTEMS[system_idx],
            round(W.CATEGORY_TABLE[cat][1][system_idx] * 10), 1000,
        )
        for cat in W.CATEGORY_TABLE
    ]


def reconstructed_count_groups(system_idx):
    """Integer correct counts, round(accuracy x items), the stated oracle."""
    groups = []
    for cat, (items, pcts) in W.CATEGORY_TABLE.items():
        groups.append(
            GroupAccuracy(
                "category", cat, W.SYSTEMS[system_idx],
                round(pcts[system_idx] / 100.0 * items), items,
            )
        )
    return groups


def test_macro_average_reproduction():
    """Feeding the 14 published Tohoku accuracies yields 88.1 within 0.05;
    the whole footer row reproduces per system within the same bound."""
    tohoku = macro_average(published_accuracy_groups(0)) * 100
    assert abs(tohoku - Fraction(881, 10)) <= Fraction(5, 100)
    assert fmt_pct(tohoku) == "88.1"
    for idx, system in enumerate(W.SYSTEMS):
        macro = macro_average(published_accuracy_groups(idx)) * 100
        published = Fraction(str(W.MACRO_ROW[system]))
        assert abs(macro - published) <= Fraction(5, 100), system
    print("ACCEPTANCE PASS: macro-average reproduction "
          f"(Tohoku {float(tohoku):.4f} ~ 88.1; all 11 footer cells within 0.05)")


def test_micro_average_reconstruction():
    """round(accuracy x items) counts pooled per system land within 0.1pp
    of the published micro row; the two leaders read 85.3 and 85.4."""
    micros = {}
    for idx, system in enumerate(W.SYSTEMS):
        micro = micro_average(reconstructed_count_groups(idx)) * 100
        micros[system] = micro
        published = Fraction(str(W.MICRO_ROW[system]))
        assert abs(micro - published) <= Fraction(1, 10), system
    assert fmt_pct(micros["Tohoku"]) == "85.3"
    assert fmt_pct(micros["Huoshan"]) == "85.4"
    print("ACCEPTANCE PASS: micro-average reconstruction "
          f"(Tohoku {float(micros['Tohoku']):.4f}, Huoshan {float(micros['Huoshan']):.4f})")


def test_boldface_cluster_reproduction():
    """Pooled one-tailed z at 1.6449 reproduces the published bold patterns
    for the Negation and Punctuation rows exactly."""
    config = SignificanceConfig(critical_z=CRITICAL_Z)

    negation = [
        GroupAccuracy("category", "negation", s, c, 20)
        for s, c in W.derived_counts("negation").items()
    ]
    cluster = best_cluster(negation, config)
    assert set(cluster.members) == W.NEGATION_BOLD
    assert "ZLabs" not in cluster.members  # 80.0 excluded
    assert {"Onl-A", "Onl-Z"} <= set(cluster.members)  # the 95.0 entries included

    punctuation = [
        GroupAccuracy("category", "punctuation", s, c, 60)
        for s, c in W.derived_counts("punctuation").items()
    ]
    cluster = best_cluster(punctuation, config)
    assert set(cluster.members) == W.PUNCTUATION_BOLD
    assert "Onl-B" not in cluster.members  # 71.7 excluded
    assert "Onl-G" not in cluster.members  # 61.7 excluded
    assert "Tohoku" in cluster.members  # 96.7 included
    print("ACCEPTANCE PASS: boldface clusters (Negation and Punctuation rows exact)")


# every labeled output from the three example tables, encoded in the demo suite
LABELED_OUTPUTS = [
    ("amb-001", "He liked to read novels.", "fail"),
    ("amb-001", "He liked to read novellas.", "pass"),
    ("mwe-001", "Why did the dinosaurs die?", "fail"),
    ("mwe-001", "Why did the dinosaurs die out?", "pass"),
    ("mwe-001", "Why did the dinosaurs become extinct?", "pass"),
    ("vtm-001", "I have baked a cake.", "fail"),
    ("vtm-001", "I baked Tim a cake.", "pass"),
    ("vv-002", "I remember his.", "fail"),
    ("vv-002", "I remember him.", "pass"),
    ("amb-003", "He liked to read novels.", "fail"),
    ("amb-003", "He liked to read novellas.", "pass"),
    ("vv-001", "She drinks the cup empty.", "fail"),
    ("vv-001", "She empties the cup.", "pass"),
    ("vv-001", "She is drinking the whole cup.", "pass"),
    ("vtm-002", "They were sleeping.", "fail"),
    ("vtm-002", "They had slept.", "pass"),
    ("ce-001", "John doesn't like the noodles but he doesn't know why.", "fail"),
    ("ce-001", "John doesn't like the noodles, but he doesn't know why.", "pass"),
    ("amb-002", "The court last night was delicious.", "fail"),
    ("amb-002", "The dish last night was delicious.", "pass"),
]

UNLABELED_PARAPHRASES = [
    ("amb-001", "He enjoyed short stories."),
    ("mwe-001", "Why did the dinosaurs disappear?"),
    ("vtm-001", "I made Tim a cake."),
    ("vv-002", "I recall that man."),
    ("vv-001", "She finished her drink."),
    ("vtm-002", "They fell asleep."),
    ("ce-001", "John hates the noodles for some reason."),
    ("amb-002", "Dinner yesterday was tasty."),
]


def test_judgment_golden_suite():
    """The demo suite reproduces every labeled verdict from the example
    sentences; unlabeled paraphrases come out as warnings."""
    suite = load_suite(demo_suite_path())
    assert len(LABELED_OUTPUTS) >= 12
    for item_id, output, expected in LABELED_OUTPUTS:
        verdict = judge(suite.item(item_id), output, "golden").verdict
        assert verdict == expected, (item_id, output, verdict, expected)
    for item_id, output in UNLABELED_PARAPHRASES:
        verdict = judge(suite.item(item_id), output, "golden").verdict
        assert verdict == "warning", (item_id, output, verdict)
    print(f"ACCEPTANCE PASS: judgment golden suite "
          f"({len(LABELED_OUTPUTS)} labeled verdicts, "
          f"{len(UNLABELED_PARAPHRASES)} paraphrase warnings)")


def test_valid_item_accounting(tmp_path):
    """A 5,560-item fixture with scripted warnings ends at 5,514 valid
    items once every resolvable warning has been resolved."""
    residue = 46  # never-resolved items, warning in both runs
    counts = {cat: items for cat, (items, _) in W.CATEGORY_TABLE.items()}
    counts["verb tense/aspect/mood"] += residue
    suite = make_suite(counts, name="full-scale")
    assert len(suite) == W.TOTAL_ITEMS  # 5,560

    ids = list(suite.ids())
    vt_ids = [i for i in ids if i.startswith("verb-tense-aspect-mood-")]
    residue_ids = set(vt_ids[-residue:])
    warn_a = residue_ids | set(ids[:100])
    warn_b = residue_ids | set(ids[200:250])

    store = JudgmentStore.initialize(tmp_path / "store", suite)
    correct = {cat: n // 2 for cat, n in counts.items()}
    run_a, _ = store.ingest_run(make_outputs(suite, correct, warnings=warn_a), "sys-a")
    run_b, _ = store.ingest_run(make_outputs(suite, correct, warnings=warn_b), "sys-b")

    for record in store.pending_warnings():
        if record.item.id not in residue_ids:
            store.resolve(record.run_id, record.item.id, "pass", "annotator-1")

    progress = store.progress()
    assert progress.total_items == W.TOTAL_ITEMS
    assert progress.valid_items == W.TOTAL_VALID_ITEMS  # 5,514
    assert progress.pending == 2 * residue
    assert len(fair_item_set(store.runs())) == W.TOTAL_VALID_ITEMS
    reopened = JudgmentStore.open(store.directory)
    assert reopened.progress() == progress
    print("ACCEPTANCE PASS: valid-item accounting "
          f"({progress.valid_items} valid of {progress.total_items} total)")


def test_cross_year_deltas():
    """Two-run fixtures reproduce the published +18.4 and +1.6 cells
    exactly at one decimal."""
    suite = make_suite({"LDD & interrogatives": 125, "function word": 125})
    run_2019 = make_run(
        suite, make_outputs(suite, {"LDD & interrogatives": 60, "function word": 100}),
        "Onl-G", run_id="onlg-2019",
    )
    run_2020 = make_run(
        suite, make_outputs(suite, {"LDD & interrogatives": 83, "function word": 102}),
        "Onl-G", run_id="onlg-2020",
    )
    table = build_year_report(suite, [("Onl-G 2020", run_2019, run_2020)])
    cells = {row.name: row.cells[0].text() for row in table.rows}
    assert cells["LDD & interrogatives"] == "+18.4"
    assert cells["function word"] == "+1.6"
    rendered = render(table, "plain")
    assert "+18.4" in rendered and "+1.6" in rendered
    print("ACCEPTANCE PASS: cross-year deltas (+18.4 LDD & interrogatives, +1.6 function word)")


# -- property suites (no published numbers) -----------------------------------

rule_texts = st.text(
    alphabet=st.characters(whitelist_categories=("Ll", "Lu"), whitelist_characters=" "),
    min_size=1, max_size=8,
).filter(lambda s: s.strip())


@given(
    pass_pats=st.lists(rule_texts, max_size=3),
    fail_pats=st.lists(rule_texts, max_size=3),
    output=st.text(max_size=60),
)
def test_property_rule_engine_determinism_and_consistency(pass_pats, fail_pats, output):
    item = TestItem(
        id="p", source="S.", phenomenon="p", category="c",
        pass_rules=tuple(Rule(pattern=p, polarity="pass") for p in pass_pats),
        fail_rules=tuple(Rule(pattern=p, polarity="fail") for p in fail_pats),
    )
    first = judge(item, output, "s")
    assert first == judge(item, output, "s")
    if first.verdict == "pass":
        assert first.matched_pass_rules and not first.matched_fail_rules
    elif first.verdict == "fail":
        assert first.matched_fail_rules and not first.matched_pass_rules
    else:
        assert bool(first.matched_pass_rules) == bool(first.matched_fail_rules)


store_ops = st.lists(
    st.one_of(
        st.tuples(st.just("resolve"), st.sampled_from(["amb-003", "vtm-002"]),
                  st.sampled_from(["pass", "fail"])),
        st.tuples(st.just("add_rule"), st.sampled_from(["amb-003", "vtm-002"]),
                  st.sampled_from(["+L:short stories", "+L:fell asleep"])),
        st.tuples(st.just("rejudge")),
    ),
    max_size=6,
)


@settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(sequence=store_ops)
def test_property_manual_precedence(tmp_path_factory, sequence):
    tmp_path = tmp_path_factory.mktemp("acc-store")
    store = JudgmentStore.initialize(tmp_path / "s", demo_suite_path())
    run, _ = store.ingest_run(demo_outputs_path("demo-mt"))
    manual = {}
    for op in sequence:
        if op[0] == "resolve":
            _, item_id, verdict = op
            try:
                store.resolve(run.run_id, item_id, verdict, "a", override=item_id in manual)
                manual[item_id] = verdict
            except NotAWarningError:
                pass
        elif op[0] == "add_rule":
            store.add_rule(op[1], op[2], "a")
        else:
            store.rejudge()
    for item_id, verdict in manual.items():
        assert run.effective_verdict(item_id) == verdict


@given(data=st.data())
def test_property_ztest_antisymmetry_and_zero(data):
    n1 = data.draw(st.integers(1, 100))
    n2 = data.draw(st.integers(1, 100))
    c1 = data.draw(st.integers(0, n1))
    c2 = data.draw(st.integers(0, n2))
    assert ztest(c1, n1, c1, n1) == 0.0
    z_ab, z_ba = ztest(c1, n1, c2, n2), ztest(c2, n2, c1, n1)
    if math.isinf(z_ab):
        assert z_ab == -z_ba
    else:
        assert abs(z_ab + z_ba) < 1e-12


@given(data=st.data())
def test_property_micro_between_min_and_max(data):
    k = data.draw(st.integers(1, 6))
    gas = []
    for i in range(k):
        n = data.draw(st.integers(1, 40))
        c = data.draw(st.integers(0, n))
        gas.append(GroupAccuracy("category", f"g{i}", "s", c, n))
    micro = micro_average(gas)
    accs = [g.accuracy for g in gas]
    assert min(accs) <= micro <= max(accs)


words = st.sampled_from("der die das Hund Katze liest gerne heute schnell dort".split())
sentences = st.lists(words, min_size=4, max_size=10).map(" ".join)


@given(st.lists(sentences, min_size=1, max_size=5), st.randoms())
def test_property_bleu_identity_and_permutation(corpus, rng):
    assert corpus_bleu(corpus, list(corpus)) == pytest.approx(100.0)
    refs = list(corpus)
    paired = list(zip(corpus, refs))
    rng.shuffle(paired)
    hyps_shuffled = [h for h, _ in paired]
    refs_shuffled = [r for _, r in paired]
    assert corpus_bleu(hyps_shuffled, refs_shuffled) == pytest.approx(100.0)


def test_property_bleu_hand_counted_oracle():
    hyps = ["the cat sat on the mat", "there is a small dog"]
    refs = ["the cat sat on the mat", "there is a big dog"]
    assert corpus_bleu(hyps, refs) == pytest.approx(100.0 * (10.0 / 33.0) ** 0.25, abs=1e-9)
    print("ACCEPTANCE PASS: property suites (determinism, manual precedence, "
          "z-test, micro bounds, BLEU identity/permutation + hand oracle)")


def test_property_store_crash_atomicity(tmp_path):
    """Kill-and-replay: any prefix of the event log opens to a state where
    each run is fully present or fully absent."""
    store = JudgmentStore.initialize(tmp_path / "s", demo_suite_path())
    run, _ = store.ingest_run(demo_outputs_path("demo-mt"))
    store.resolve(run.run_id, "vtm-002", "fail", "anna")
    store.ingest_run(demo_outputs_path("demo-rbmt"))
    events_path = store.directory / "events.jsonl"
    data = events_path.read_bytes()
    newlines = [i for i, b in enumerate(data) if b == 0x0A]
    for cut in range(0, len(data) + 1, 53):
        events_path.write_bytes(data[:cut])
        kept = sum(1 for b in newlines if b < cut)
        if kept == 0:
            with pytest.raises(StoreError):
                JudgmentStore.open(store.directory)
            continue
        reopened = JudgmentStore.open(store.directory)
        whole = [json.loads(l) for l in data[:cut].decode("utf-8").split("\n")[:kept]]
        expected = {e["run_id"] for e in whole if e.get("type") == "run"}
        assert {r.run_id for r in reopened.runs()} == expected
        for r in reopened.runs():
            assert set(r.outputs) == set(reopened.suite.ids())
    events_path.write_bytes(data)
    print("ACCEPTANCE PASS: store crash atomicity (kill-and-replay over all prefixes)")
