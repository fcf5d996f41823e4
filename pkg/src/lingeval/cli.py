"""Command-line entry point.

Exit codes are a stable contract: 0 success, 1 internal error,
2 input/format error, 3 precondition not met.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from .demo import demo_outputs_path, demo_suite_path
from .engine import read_outputs
from .errors import InputError, LingevalError, PreconditionError
from .report import (
    FORMATS,
    build_category_report,
    build_phenomenon_report,
    build_year_report,
    render,
)
from .stats import SignificanceConfig
from .store import JudgmentStore
from .suite import load_suite, taxonomy_stats, validate_suite
from .bleu import corpus_bleu

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_PRECONDITION = 3

STORE_ENV = "LINGEVAL_STORE"
TOKEN_ENV = "LINGEVAL_TOKEN"


def _load_config(path: Optional[str]) -> dict[str, str]:
    """key=value lines; '#' starts a comment."""
    if path is None:
        return {}
    config: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        config[key.strip()] = value.strip()
    return config


def _store_dir(args, config: dict[str, str]) -> str:
    store = args.store or os.environ.get(STORE_ENV) or config.get("store")
    if not store:
        raise InputError(f"no store directory: pass --store, set {STORE_ENV}, or configure one")
    return store


def _open_store(args, config) -> JudgmentStore:
    directory = _store_dir(args, config)
    if not JudgmentStore.exists(directory):
        raise PreconditionError(f"no store at {directory}; run 'lingeval apply' with --suite first")
    return JudgmentStore.open(directory)


def _significance(args, config) -> SignificanceConfig:
    z = getattr(args, "critical_z", None)
    if z is None and "critical_z" in config:
        z = float(config["critical_z"])
    if z is None:
        return SignificanceConfig()
    return SignificanceConfig(critical_z=z)


def _format(args, config) -> str:
    return args.format or config.get("format") or "plain"


def cmd_validate(args, config) -> int:
    taxonomy = None
    if args.taxonomy:
        data = json.loads(Path(args.taxonomy).read_text(encoding="utf-8"))
        taxonomy = dict(data) if isinstance(data, dict) else None
        if taxonomy is None:
            raise InputError(f"{args.taxonomy}: taxonomy must be a JSON object phenomenon -> category")
    suite = load_suite(args.suite, taxonomy=taxonomy)
    issues = validate_suite(suite)
    stats = taxonomy_stats(suite)
    print(
        f"{suite.name} v{suite.version}: {stats.total} items, "
        f"{len(stats.per_phenomenon)} phenomena, {len(stats.per_category)} categories"
    )
    for issue in issues:
        print(f"{issue.level}: [{issue.code}] {issue.message}")
    if any(issue.level == "error" for issue in issues):
        return EXIT_INPUT
    return EXIT_OK


def cmd_apply(args, config) -> int:
    directory = _store_dir(args, config)
    if JudgmentStore.exists(directory):
        store = JudgmentStore.open(directory)
    else:
        suite_path = args.suite or config.get("suite")
        if not suite_path:
            raise PreconditionError(f"no store at {directory} and no --suite to initialize one")
        store = JudgmentStore.initialize(directory, suite_path)
    outputs = args.outputs
    if not Path(outputs).exists():
        raise InputError(f"outputs file not found: {outputs}")
    run, created = store.ingest_run(outputs, system_id=args.system)
    counts = run.verdict_counts()
    summary = f"{counts['pass']} pass / {counts['fail']} fail / {counts['warning']} warning"
    if created:
        print(f"run {run.run_id} ({run.system_id}): {summary}")
    else:
        print(f"run exists (idempotent): {run.run_id} ({run.system_id}): {summary}")
    return EXIT_OK


def cmd_warnings(args, config) -> int:
    store = _open_store(args, config)
    records = store.pending_warnings(
        system=args.system, category=args.category, phenomenon=args.phenomenon
    )
    if args.json:
        cards = [
            {
                "run_id": w.run_id,
                "system": w.system_id,
                "item_id": w.item.id,
                "source": w.item.source,
                "phenomenon": w.item.phenomenon,
                "category": w.item.category,
                "output": w.judgment.normalized_output,
                "note": w.judgment.note,
            }
            for w in records
        ]
        print(json.dumps(cards, ensure_ascii=False, indent=2))
    else:
        for w in records:
            print(f"{w.run_id}\t{w.system_id}\t{w.item.id}\t{w.judgment.normalized_output}")
        print(f"{len(records)} pending warning(s)")
    return EXIT_OK


def _annotator(args, config) -> str:
    annotator = args.annotator or config.get("annotator")
    if not annotator:
        raise InputError("no annotator id: pass --annotator or configure one")
    return annotator


def cmd_resolve(args, config) -> int:
    store = _open_store(args, config)
    annotator = _annotator(args, config)
    if args.batch:
        run_id = args.run or (args.item_args[0] if args.item_args else None)
        if not run_id:
            raise InputError("batch resolve needs --run RUN_ID")
        resolved = 0
        skipped = 0
        for lineno, line in enumerate(
            Path(args.batch).read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise InputError(f"{args.batch}:{lineno}: expected item_id<TAB>verdict")
            item_id, verdict = parts[0].strip(), parts[1].strip()
            rationale = parts[2].strip() if len(parts) > 2 else None
            try:
                store.resolve(run_id, item_id, verdict, annotator, rationale=rationale)
                resolved += 1
            except PreconditionError as exc:
                print(f"skipped {item_id}: {exc}", file=sys.stderr)
                skipped += 1
        print(f"resolved {resolved} item(s), skipped {skipped}")
        return EXIT_OK
    if len(args.item_args) != 3:
        raise InputError("usage: lingeval resolve RUN ITEM pass|fail (or --batch FILE --run RUN)")
    run_id, item_id, verdict = args.item_args
    store.resolve(
        run_id, item_id, verdict, annotator, rationale=args.rationale, override=args.override
    )
    print(f"{item_id} in {run_id}: {verdict} (by {annotator})")
    return EXIT_OK


def cmd_rule(args, config) -> int:
    if args.rule_command != "add":
        raise InputError("unknown rule subcommand; try 'rule add'")
    store = _open_store(args, config)
    annotator = _annotator(args, config)
    item = store.add_rule(args.item, args.rule, annotator, comment=args.comment)
    print(
        f"{item.id}: {len(item.rules)} rule(s), suite version now {store.suite.version}"
    )
    return EXIT_OK


def cmd_rejudge(args, config) -> int:
    store = _open_store(args, config)
    report = store.rejudge(run_ids=args.run or None)
    for change in report.changed:
        print(f"{change.run_id}\t{change.item_id}\t{change.old_verdict} -> {change.new_verdict}")
    print(
        f"re-judged to suite version {report.to_version}: "
        f"{len(report.changed)} change(s), {report.unchanged_manual} kept manual"
    )
    return EXIT_OK


def cmd_report(args, config) -> int:
    store = _open_store(args, config)
    runs = store.latest_runs_per_system()
    if not runs:
        raise PreconditionError("store has no runs to report on")
    references = None
    if args.references:
        _, references = read_outputs(args.references)
    signif = _significance(args, config)
    if args.kind == "category":
        table = build_category_report(store.suite, runs, signif, references)
    else:
        table = build_phenomenon_report(store.suite, runs, signif, references)
    sys.stdout.write(render(table, _format(args, config)))
    return EXIT_OK


def cmd_compare_years(args, config) -> int:
    store = _open_store(args, config)
    pairs = []
    for spec in args.pair:
        try:
            label, _, runs_part = spec.partition("=")
            run_a, run_b = runs_part.split(":")
        except ValueError:
            raise InputError(f"bad --pair {spec!r}; expected LABEL=RUN_A:RUN_B") from None
        pairs.append((label, store.run(run_a), store.run(run_b)))
    table = build_year_report(store.suite, pairs, by=args.by, config=_significance(args, config))
    sys.stdout.write(render(table, _format(args, config)))
    return EXIT_OK


def cmd_bleu(args, config) -> int:
    hyp_lines = Path(args.hypotheses).read_text(encoding="utf-8").splitlines()
    ref_lines = Path(args.references).read_text(encoding="utf-8").splitlines()
    score = corpus_bleu(hyp_lines, ref_lines)
    print(f"BLEU = {score:.2f}")
    return EXIT_OK


def cmd_progress(args, config) -> int:
    store = _open_store(args, config)
    p = store.progress()
    if args.json:
        print(
            json.dumps(
                {
                    "total_items": p.total_items,
                    "items_with_warnings": p.items_with_warnings,
                    "resolved_items": p.resolved_items,
                    "valid_items": p.valid_items,
                    "pending": p.pending,
                }
            )
        )
    else:
        print(
            f"{p.valid_items} valid out of {p.total_items} total items "
            f"({p.items_with_warnings} ever warned, {p.resolved_items} resolved, "
            f"{p.pending} pending)"
        )
    return EXIT_OK


def cmd_serve(args, config) -> int:
    import uvicorn

    from .service import create_app

    store = _open_store(args, config)
    token = os.environ.get(TOKEN_ENV)
    ui_dir = args.ui or config.get("ui")
    app = create_app(store, token=token, ui_dir=Path(ui_dir) if ui_dir else None)
    host = args.host or config.get("host") or "127.0.0.1"
    port = args.port or int(config.get("port", 0)) or 8099
    uvicorn.run(app, host=host, port=port, log_level="info")
    return EXIT_OK


def cmd_demo(args, config) -> int:
    print(f"suite: {demo_suite_path()}")
    for system in ("demo-mt", "demo-rbmt"):
        print(f"outputs ({system}): {demo_outputs_path(system)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lingeval",
        description="Evaluate MT outputs against a rule-based linguistic test suite.",
    )
    parser.add_argument("--store", help=f"store directory (or ${STORE_ENV})")
    parser.add_argument("--config", help="key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a suite file and report issues")
    p.add_argument("suite")
    p.add_argument("--taxonomy", help="JSON file mapping phenomenon -> category")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("apply", help="judge one system's outputs and persist the run")
    p.add_argument("outputs", help="system outputs file (JSONL)")
    p.add_argument("--system", help="system id (else taken from the outputs meta record)")
    p.add_argument("--suite", help="suite file, required when initializing a new store")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("warnings", help="list pending warnings")
    p.add_argument("--system")
    p.add_argument("--category")
    p.add_argument("--phenomenon")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_warnings)

    p = sub.add_parser("resolve", help="record a human verdict for a warning")
    p.add_argument("item_args", nargs="*", metavar="RUN ITEM VERDICT")
    p.add_argument("--annotator")
    p.add_argument("--rationale")
    p.add_argument("--override", action="store_true", help="correct an earlier manual verdict")
    p.add_argument("--batch", help="file of item_id<TAB>verdict lines")
    p.add_argument("--run", help="run id for --batch")
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("rule", help="suite rule maintenance")
    p.add_argument("rule_command", choices=["add"])
    p.add_argument("item", help="item id")
    p.add_argument("rule", help="compact rule, e.g. '+L:short stories'")
    p.add_argument("--annotator")
    p.add_argument("--comment")
    p.set_defaults(func=cmd_rule)

    p = sub.add_parser("rejudge", help="recompute automatic judgments after rule changes")
    p.add_argument("--run", action="append", help="limit to specific run ids")
    p.set_defaults(func=cmd_rejudge)

    p = sub.add_parser("report", help="accuracy table across systems")
    p.add_argument("kind", choices=["category", "phenomenon"])
    p.add_argument("--format", choices=list(FORMATS))
    p.add_argument("--references", help="reference translations (outputs format) for a BLEU row")
    p.add_argument("--critical-z", type=float, dest="critical_z")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("compare-years", help="accuracy deltas between run pairs")
    p.add_argument("--pair", action="append", required=True, metavar="LABEL=RUN_A:RUN_B")
    p.add_argument("--by", choices=["category", "phenomenon"], default="category")
    p.add_argument("--format", choices=list(FORMATS))
    p.add_argument("--critical-z", type=float, dest="critical_z")
    p.set_defaults(func=cmd_compare_years)

    p = sub.add_parser("bleu", help="corpus BLEU between two line-aligned text files")
    p.add_argument("hypotheses")
    p.add_argument("references")
    p.set_defaults(func=cmd_bleu)

    p = sub.add_parser("progress", help="valid-item accounting")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_progress)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--ui", help="directory with the built annotation UI")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("demo", help="print paths of the bundled demo fixtures")
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_INPUT
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except LingevalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
