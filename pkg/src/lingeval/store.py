"""Persistent store for evaluation runs, manual resolutions and rule edits.

Layout (see docs/store.md):

    store/
      events.jsonl    append-only log; the audit trail and source of truth
      snapshot.json   rebuildable materialization keyed to the log size
      suites/         one suite file per version (v000001.suite.jsonl ...)

Every mutation materializes referenced files first, then appends exactly
one event line (flushed and fsynced). Heavy mutations also rewrite the
snapshot via an atomic rename; opening loads the snapshot and applies the
event tail written since. Replay tolerates a torn final line, so a run is
either fully ingested or absent after a crash. Manual resolutions are
never altered by re-judging.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

from .engine import AutoJudgment, apply_suite, read_outputs
from .errors import InputError, LingevalError, PreconditionError
from .suite import (
    FAIL,
    PASS,
    PROVENANCE_ANNOTATOR,
    WARNING,
    Rule,
    TestItem,
    TestSuite,
    load_suite,
    parse_rule,
    rule_record,
    save_suite,
)
from .stats import VersionMismatchError

EVENTS_FILE = "events.jsonl"
SNAPSHOT_FILE = "snapshot.json"
SUITES_DIR = "suites"


class StoreError(LingevalError):
    pass


class StoreCorruptError(StoreError):
    pass


class UnknownRunError(PreconditionError):
    pass


class UnknownStoreItemError(PreconditionError):
    pass


class NotAWarningError(PreconditionError):
    pass


class NoRunsError(PreconditionError):
    pass


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class ManualResolution:
    item_id: str
    verdict: str  # pass | fail; a human must decide
    annotator_id: str
    timestamp: str
    rationale: Optional[str] = None

    def __post_init__(self) -> None:
        if self.verdict not in (PASS, FAIL):
            raise ValueError(f"manual verdict must be pass or fail, got {self.verdict!r}")


@dataclass
class EvaluationRun:
    run_id: str
    system_id: str
    suite_name: str
    suite_version: int  # version the automatic judgments were computed under
    created_at: str
    outputs: dict[str, str]
    auto: dict[str, AutoJudgment]
    manual: dict[str, ManualResolution] = field(default_factory=dict)

    def item_ids(self) -> Iterable[str]:
        return self.outputs.keys()

    def effective_verdict(self, item_id: str) -> str:
        res = self.manual.get(item_id)
        if res is not None:
            return res.verdict
        return self.auto[item_id].verdict

    def verdict_counts(self) -> dict[str, int]:
        counts = {PASS: 0, FAIL: 0, WARNING: 0}
        for item_id in self.outputs:
            counts[self.effective_verdict(item_id)] += 1
        return counts


@dataclass(frozen=True)
class ProgressSummary:
    total_items: int
    items_with_warnings: int  # items that ever auto-warned in any run
    resolved_items: int
    valid_items: int  # warning-free for every run after the manual overlay
    pending: int  # (run, item) pairs still warning


@dataclass(frozen=True)
class VerdictChange:
    run_id: str
    item_id: str
    old_verdict: str
    new_verdict: str


@dataclass(frozen=True)
class ReJudgeReport:
    to_version: int
    changed: tuple[VerdictChange, ...]
    unchanged_manual: int


@dataclass(frozen=True)
class WarningRecord:
    run_id: str
    system_id: str
    item: TestItem
    judgment: AutoJudgment
    raw_output: str


def _run_id(system_id: str, suite_name: str, outputs: Mapping[str, str]) -> str:
    payload = json.dumps(
        [system_id, suite_name, sorted(outputs.items())], ensure_ascii=False
    ).encode("utf-8")
    return "r" + hashlib.sha256(payload).hexdigest()[:12]


def _atomic_write(path: Path, data: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    os.replace(tmp, path)


class JudgmentStore:
    """Single-writer store; mutations serialize through one lock."""

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)
        self._events_path = self.directory / EVENTS_FILE
        self._suites_dir = self.directory / SUITES_DIR
        self._snapshot_path = self.directory / SNAPSHOT_FILE
        self._lock = threading.RLock()
        self._suites: dict[int, TestSuite] = {}
        self._runs: dict[str, EvaluationRun] = {}
        self._events: list[dict] = []
        self._ever_warned: set[str] = set()
        self._current_version = 0

    # -- lifecycle ---------------------------------------------------------

    @classmethod
    def exists(cls, directory: Union[str, Path]) -> bool:
        return (Path(directory) / EVENTS_FILE).exists()

    @classmethod
    def initialize(cls, directory: Union[str, Path], suite: Union[TestSuite, str, Path]) -> "JudgmentStore":
        store = cls(directory)
        if store._events_path.exists():
            raise StoreError(f"store already initialized: {store.directory}")
        if not isinstance(suite, TestSuite):
            suite = load_suite(suite)
        store.directory.mkdir(parents=True, exist_ok=True)
        store._suites_dir.mkdir(exist_ok=True)
        base = TestSuite(name=suite.name, version=1, items=suite.items)
        save_suite(base, store._suite_path(1))
        store._suites = {1: base}
        store._current_version = 1
        store._append_event({"type": "init", "at": _now(), "suite": base.name, "suite_version": 1})
        store._write_snapshot()
        return store

    @classmethod
    def open(cls, directory: Union[str, Path]) -> "JudgmentStore":
        store = cls(directory)
        if not store._events_path.exists():
            raise StoreError(f"no store at {store.directory} (missing {EVENTS_FILE})")
        events = store._read_events()
        store._events = events
        snapshot = store._read_snapshot()
        if snapshot is not None and snapshot.get("event_count", 0) <= len(events):
            # cheap path: materialized state plus the event tail written since
            store._load_snapshot(snapshot)
            store._apply_events(events[snapshot["event_count"]:])
        else:
            store._replay(events)
        if store._current_version == 0:
            raise StoreCorruptError(f"{store._events_path}: no init event")
        return store

    def _suite_path(self, version: int) -> Path:
        return self._suites_dir / f"v{version:06d}.suite.jsonl"

    # -- event log ---------------------------------------------------------

    def _append_event(self, event: dict) -> None:
        line = json.dumps(event, ensure_ascii=False)
        if "\n" in line:
            raise StoreError("event serialization produced a newline")
        with open(self._events_path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._events.append(event)

    def _read_events(self) -> list[dict]:
        data = self._events_path.read_bytes()
        text = data.decode("utf-8", errors="strict")
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        else:
            lines.pop()  # torn final write: the tail never got its newline
        events = []
        for i, line in enumerate(lines):
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError as exc:
                if i == len(lines) - 1:
                    break  # torn write that still ended at a newline boundary
                raise StoreCorruptError(
                    f"{self._events_path}: corrupt event at line {i + 1}: {exc.msg}"
                ) from exc
        return events

    def _replay(self, events: list[dict]) -> None:
        self._runs = {}
        self._suites = {}
        self._ever_warned = set()
        self._current_version = 0
        self._apply_events(events)

    def _apply_events(self, events: list[dict]) -> None:
        for event in events:
            etype = event.get("type")
            if etype == "init":
                base = load_suite(self._suite_path(event["suite_version"]))
                self._suites = {base.version: base}
                self._current_version = base.version
            elif etype == "run":
                suite = self._suites[event["suite_version"]]
                auto = {
                    j.item_id: j
                    for j in apply_suite(suite, event["outputs"], event["system"])
                }
                run = EvaluationRun(
                    run_id=event["run_id"],
                    system_id=event["system"],
                    suite_name=suite.name,
                    suite_version=event["suite_version"],
                    created_at=event["at"],
                    outputs=dict(event["outputs"]),
                    auto=auto,
                )
                self._runs[run.run_id] = run
                self._note_warnings(run)
            elif etype == "resolve":
                run = self._runs[event["run_id"]]
                run.manual[event["item_id"]] = ManualResolution(
                    item_id=event["item_id"],
                    verdict=event["verdict"],
                    annotator_id=event["annotator"],
                    timestamp=event["at"],
                    rationale=event.get("rationale"),
                )
            elif etype == "rule":
                rule = parse_rule(
                    {
                        "rule": event["rule"],
                        "by": event["annotator"],
                        "at": event["at"],
                        "comment": event.get("comment"),
                    }
                )
                prev = self._suites[event["new_version"] - 1]
                self._suites[event["new_version"]] = prev.with_rule_added(event["item_id"], rule)
                self._current_version = event["new_version"]
            elif etype == "rejudge":
                suite = self._suites[event["to_version"]]
                for run_id in event["run_ids"]:
                    run = self._runs[run_id]
                    run.auto = {
                        j.item_id: j
                        for j in apply_suite(suite, run.outputs, run.system_id)
                    }
                    run.suite_version = event["to_version"]
                    self._note_warnings(run)
            else:
                raise StoreCorruptError(f"unknown event type {etype!r}")

    def _note_warnings(self, run: EvaluationRun) -> None:
        self._ever_warned.update(
            item_id for item_id, j in run.auto.items() if j.verdict == WARNING
        )

    # -- snapshot ----------------------------------------------------------

    def _read_snapshot(self) -> Optional[dict]:
        if not self._snapshot_path.exists():
            return None
        try:
            return json.loads(self._snapshot_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            return None  # stale or torn snapshot; replay instead

    def _write_snapshot(self) -> None:
        runs = []
        for run in self._runs.values():
            runs.append(
                {
                    "run_id": run.run_id,
                    "system": run.system_id,
                    "suite_version": run.suite_version,
                    "created_at": run.created_at,
                    "outputs": run.outputs,
                    "auto": {
                        item_id: {
                            "verdict": j.verdict,
                            "pass_rules": list(j.matched_pass_rules),
                            "fail_rules": list(j.matched_fail_rules),
                            "normalized": j.normalized_output,
                            "note": j.note,
                        }
                        for item_id, j in run.auto.items()
                    },
                    "manual": {
                        item_id: {
                            "verdict": m.verdict,
                            "annotator": m.annotator_id,
                            "at": m.timestamp,
                            "rationale": m.rationale,
                        }
                        for item_id, m in run.manual.items()
                    },
                }
            )
        suites = {}
        for version, suite in self._suites.items():
            suites[str(version)] = {
                "suite": suite.name,
                "version": suite.version,
                "items": [
                    {
                        "id": it.id,
                        "source": it.source,
                        "phenomenon": it.phenomenon,
                        "category": it.category,
                        "rules": [rule_record(r) for r in it.rules],
                        "notes": it.notes,
                    }
                    for it in suite.items
                ],
            }
        snapshot = {
            "event_count": len(self._events),
            "current_version": self._current_version,
            "ever_warned": sorted(self._ever_warned),
            "suites": suites,
            "runs": runs,
        }
        _atomic_write(self._snapshot_path, json.dumps(snapshot, ensure_ascii=False))

    def _load_snapshot(self, snapshot: dict) -> None:
        suites: dict[int, TestSuite] = {}
        for version, record in snapshot["suites"].items():
            items = []
            for it in record["items"]:
                rules = [parse_rule(r) for r in it["rules"]]
                items.append(
                    TestItem(
                        id=it["id"],
                        source=it["source"],
                        phenomenon=it["phenomenon"],
                        category=it["category"],
                        pass_rules=tuple(r for r in rules if r.polarity == PASS),
                        fail_rules=tuple(r for r in rules if r.polarity == FAIL),
                        notes=it.get("notes"),
                    )
                )
            suites[int(version)] = TestSuite(
                name=record["suite"], version=record["version"], items=tuple(items)
            )
        runs: dict[str, EvaluationRun] = {}
        for r in snapshot["runs"]:
            auto = {
                item_id: AutoJudgment(
                    item_id=item_id,
                    system_id=r["system"],
                    verdict=j["verdict"],
                    matched_pass_rules=tuple(j["pass_rules"]),
                    matched_fail_rules=tuple(j["fail_rules"]),
                    normalized_output=j["normalized"],
                    note=j.get("note"),
                )
                for item_id, j in r["auto"].items()
            }
            manual = {
                item_id: ManualResolution(
                    item_id=item_id,
                    verdict=m["verdict"],
                    annotator_id=m["annotator"],
                    timestamp=m["at"],
                    rationale=m.get("rationale"),
                )
                for item_id, m in r["manual"].items()
            }
            runs[r["run_id"]] = EvaluationRun(
                run_id=r["run_id"],
                system_id=r["system"],
                suite_name=suites[r["suite_version"]].name,
                suite_version=r["suite_version"],
                created_at=r["created_at"],
                outputs=dict(r["outputs"]),
                auto=auto,
                manual=manual,
            )
        self._suites = suites
        self._runs = runs
        self._ever_warned = set(snapshot["ever_warned"])
        self._current_version = snapshot["current_version"]

    # -- read API ----------------------------------------------------------

    @property
    def suite(self) -> TestSuite:
        return self._suites[self._current_version]

    def suite_at(self, version: int) -> TestSuite:
        try:
            return self._suites[version]
        except KeyError:
            raise StoreError(f"no suite version {version}") from None

    def runs(self) -> list[EvaluationRun]:
        return sorted(self._runs.values(), key=lambda r: (r.system_id, r.run_id))

    def run(self, run_id: str) -> EvaluationRun:
        try:
            return self._runs[run_id]
        except KeyError:
            raise UnknownRunError(f"unknown run {run_id!r}") from None

    def latest_runs_per_system(self) -> list[EvaluationRun]:
        latest: dict[str, EvaluationRun] = {}
        for run in self._runs.values():
            prev = latest.get(run.system_id)
            if prev is None or run.created_at > prev.created_at:
                latest[run.system_id] = run
        return sorted(latest.values(), key=lambda r: r.system_id)

    def pending_warnings(
        self,
        system: Optional[str] = None,
        category: Optional[str] = None,
        phenomenon: Optional[str] = None,
    ) -> list[WarningRecord]:
        """The (run, item) pairs whose effective verdict is still warning."""
        records = []
        for run in self._runs.values():
            if system is not None and run.system_id != system:
                continue
            for item_id in run.item_ids():
                if run.effective_verdict(item_id) != WARNING:
                    continue
                item = self.suite.item(item_id)
                if category is not None and item.category != category:
                    continue
                if phenomenon is not None and item.phenomenon != phenomenon:
                    continue
                records.append(
                    WarningRecord(
                        run_id=run.run_id,
                        system_id=run.system_id,
                        item=item,
                        judgment=run.auto[item_id],
                        raw_output=run.outputs[item_id],
                    )
                )
        records.sort(key=lambda rec: (rec.system_id, rec.item.id, rec.run_id))
        return records

    def progress(self) -> ProgressSummary:
        """Valid-item accounting; all zero until a first run is ingested."""
        if not self._runs:
            return ProgressSummary(0, 0, 0, 0, 0)
        total = len(self.suite)
        resolved_items = {item_id for run in self._runs.values() for item_id in run.manual}
        pending = 0
        invalid: set[str] = set()
        for run in self._runs.values():
            for item_id in run.item_ids():
                if run.effective_verdict(item_id) == WARNING:
                    pending += 1
                    invalid.add(item_id)
        return ProgressSummary(
            total_items=total,
            items_with_warnings=len(self._ever_warned),
            resolved_items=len(resolved_items),
            valid_items=total - len(invalid),
            pending=pending,
        )

    def audit(self, run_id: Optional[str] = None, item_id: Optional[str] = None) -> list[dict]:
        """Resolution events, oldest first; the immutable audit trail."""
        out = []
        for event in self._events:
            if event.get("type") != "resolve":
                continue
            if run_id is not None and event["run_id"] != run_id:
                continue
            if item_id is not None and event["item_id"] != item_id:
                continue
            out.append(dict(event))
        return out

    # -- mutations ---------------------------------------------------------

    def ingest_run(
        self,
        outputs: Union[str, Path, Mapping[str, str]],
        system_id: Optional[str] = None,
    ) -> tuple[EvaluationRun, bool]:
        """Persist one system's outputs with automatic judgments.

        Idempotent: identical content maps to the same run id and returns
        the stored run with created=False.
        """
        with self._lock:
            meta: Optional[dict] = None
            if not isinstance(outputs, Mapping):
                meta, outputs = read_outputs(outputs)
            suite = self.suite
            if meta:
                if "suite" in meta and meta["suite"] != suite.name:
                    raise VersionMismatchError(
                        f"outputs are for suite {meta['suite']!r}, store holds {suite.name!r}"
                    )
                if "suite_version" in meta and meta["suite_version"] != suite.version:
                    raise VersionMismatchError(
                        f"outputs were produced for suite version {meta['suite_version']}, "
                        f"store is at version {suite.version}"
                    )
                system_id = system_id or meta.get("system")
            if not system_id:
                raise InputError("no system id: pass one or put it in the outputs meta record")
            run_id = _run_id(system_id, suite.name, outputs)
            if run_id in self._runs:
                return self._runs[run_id], False
            auto = {j.item_id: j for j in apply_suite(suite, outputs, system_id)}
            run = EvaluationRun(
                run_id=run_id,
                system_id=system_id,
                suite_name=suite.name,
                suite_version=suite.version,
                created_at=_now(),
                outputs=dict(outputs),
                auto=auto,
            )
            self._runs[run_id] = run
            self._note_warnings(run)
            self._append_event(
                {
                    "type": "run",
                    "at": run.created_at,
                    "run_id": run_id,
                    "system": system_id,
                    "suite_version": suite.version,
                    "outputs": run.outputs,
                }
            )
            self._write_snapshot()
            return run, True

    def resolve(
        self,
        run_id: str,
        item_id: str,
        verdict: str,
        annotator_id: str,
        rationale: Optional[str] = None,
        override: bool = False,
    ) -> ManualResolution:
        """Record a human verdict for a warning (or correct one, with override)."""
        with self._lock:
            run = self.run(run_id)
            if item_id not in run.outputs:
                raise UnknownStoreItemError(f"run {run_id} has no item {item_id!r}")
            if verdict not in (PASS, FAIL):
                raise InputError(f"manual verdict must be pass or fail, got {verdict!r}")
            effective = run.effective_verdict(item_id)
            correcting = item_id in run.manual
            if effective != WARNING and not (override and correcting):
                raise NotAWarningError(
                    f"item {item_id!r} in run {run_id} is {effective}, not a warning "
                    "(use override to correct an earlier manual verdict)"
                )
            resolution = ManualResolution(
                item_id=item_id,
                verdict=verdict,
                annotator_id=annotator_id,
                timestamp=_now(),
                rationale=rationale,
            )
            run.manual[item_id] = resolution
            # resolutions are frequent and tiny: event only, no snapshot
            # rewrite; open() applies the tail on top of the last snapshot
            self._append_event(
                {
                    "type": "resolve",
                    "at": resolution.timestamp,
                    "run_id": run_id,
                    "item_id": item_id,
                    "verdict": verdict,
                    "annotator": annotator_id,
                    "rationale": rationale,
                    "override": override,
                }
            )
            return resolution

    def add_rule(
        self,
        item_id: str,
        rule: Union[str, Rule],
        annotator_id: str,
        comment: Optional[str] = None,
    ) -> TestItem:
        """Append an annotator rule to an item; bumps the suite version."""
        with self._lock:
            if item_id not in self.suite:
                raise UnknownStoreItemError(f"unknown item {item_id!r}")
            if isinstance(rule, str):
                rule = parse_rule(rule)
            at = _now()
            rule = Rule(
                pattern=rule.pattern,
                kind=rule.kind,
                polarity=rule.polarity,
                case_sensitive=rule.case_sensitive,
                provenance=PROVENANCE_ANNOTATOR,
                annotator=annotator_id,
                timestamp=at,
                comment=comment if comment is not None else rule.comment,
            )
            new_suite = self.suite.with_rule_added(item_id, rule)
            save_suite(new_suite, self._suite_path(new_suite.version))
            self._suites[new_suite.version] = new_suite
            self._current_version = new_suite.version
            self._append_event(
                {
                    "type": "rule",
                    "at": at,
                    "item_id": item_id,
                    "rule": rule.compact(),
                    "annotator": annotator_id,
                    "comment": rule.comment,
                    "new_version": new_suite.version,
                }
            )
            self._write_snapshot()
            return new_suite.item(item_id)

    def rejudge(self, run_ids: Optional[Iterable[str]] = None) -> ReJudgeReport:
        """Recompute automatic judgments under the current suite version.

        Manual resolutions are never altered; items whose automatic
        verdict moved but stayed pinned by a manual one are only counted.
        """
        with self._lock:
            if run_ids is None:
                targets = [r for r in self._runs.values() if r.suite_version < self._current_version]
            else:
                targets = [self.run(rid) for rid in run_ids]
            suite = self.suite
            changed: list[VerdictChange] = []
            unchanged_manual = 0
            rejudged_ids = []
            for run in targets:
                if run.suite_version >= suite.version:
                    continue  # already judged under this version: zero changes
                new_auto = {j.item_id: j for j in apply_suite(suite, run.outputs, run.system_id)}
                for item_id, new_j in new_auto.items():
                    old = run.auto[item_id].verdict
                    if new_j.verdict == old:
                        continue
                    if item_id in run.manual:
                        unchanged_manual += 1
                    else:
                        changed.append(VerdictChange(run.run_id, item_id, old, new_j.verdict))
                run.auto = new_auto
                run.suite_version = suite.version
                self._note_warnings(run)
                rejudged_ids.append(run.run_id)
            if rejudged_ids:
                self._append_event(
                    {
                        "type": "rejudge",
                        "at": _now(),
                        "run_ids": rejudged_ids,
                        "to_version": suite.version,
                        # audit detail; replay recomputes, it does not read these
                        "changed": [
                            [c.run_id, c.item_id, c.old_verdict, c.new_verdict]
                            for c in changed
                        ],
                        "unchanged_manual": unchanged_manual,
                    }
                )
                self._write_snapshot()
            return ReJudgeReport(
                to_version=suite.version,
                changed=tuple(changed),
                unchanged_manual=unchanged_manual,
            )
