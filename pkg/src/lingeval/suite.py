"""Test-suite data model and its on-disk format.

A suite is a set of test items, each a source sentence plus pass/fail
matching rules, grouped into phenomena which in turn belong to categories.
The file format is line-delimited JSON (one header record, then one record
per item); see docs/format.md for the grammar and docs/schema/ for the
machine-readable schemas.
"""

from __future__ import annotations

import functools
import json
import re
import unicodedata
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Optional

from .errors import InputError

PASS = "pass"
FAIL = "fail"
WARNING = "warning"

KIND_LITERAL = "literal"
KIND_REGEX = "regex"

PROVENANCE_INITIAL = "initial"
PROVENANCE_ANNOTATOR = "annotator"

RECOMMENDED_MIN_ITEMS = 20

_KIND_MARKERS = {"L": KIND_LITERAL, "R": KIND_REGEX}
_POLARITY_MARKERS = {"+": PASS, "-": FAIL}
_RULE_RE = re.compile(r"^(?P<pol>[+-])(?P<kind>[LR])(?P<flags>[ci]?):(?P<pattern>.+)$", re.DOTALL)


class SuiteFormatError(InputError):
    """Suite or record file does not parse; carries file/line location."""


class DuplicateItemError(InputError):
    pass


class TaxonomyError(InputError):
    """A phenomenon maps to more than one category, or is not in the given taxonomy."""


class PatternError(InputError):
    """A rule pattern is empty or does not compile."""


@functools.lru_cache(maxsize=4096)
def _compile(pattern: str, ignorecase: bool) -> re.Pattern:
    return re.compile(pattern, re.IGNORECASE if ignorecase else 0)


@dataclass(frozen=True)
class Rule:
    """One matching rule: a regex or literal with pass/fail polarity.

    Literals match as substrings (case-insensitive unless flagged);
    regexes use Python `re` syntax (case-sensitive unless flagged).
    """

    pattern: str
    kind: str = KIND_LITERAL
    polarity: str = PASS
    case_sensitive: Optional[bool] = None
    provenance: str = PROVENANCE_INITIAL
    annotator: Optional[str] = None
    timestamp: Optional[str] = None
    comment: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in (KIND_LITERAL, KIND_REGEX):
            raise PatternError(f"unknown rule kind {self.kind!r}")
        if self.polarity not in (PASS, FAIL):
            raise PatternError(f"unknown rule polarity {self.polarity!r}")
        if not self.pattern:
            raise PatternError("empty rule pattern")
        if self.case_sensitive is None:
            # Literals default insensitive so "novellas" matches sentence-
            # initial capitals; regex authors control their own flags.
            object.__setattr__(self, "case_sensitive", self.kind == KIND_REGEX)
        pattern = unicodedata.normalize("NFC", self.pattern)
        object.__setattr__(self, "pattern", pattern)
        if self.kind == KIND_REGEX:
            try:
                _compile(pattern, not self.case_sensitive)
            except re.error as exc:
                raise PatternError(f"invalid regex {pattern!r}: {exc}") from exc

    def matches(self, text: str) -> bool:
        if self.kind == KIND_LITERAL:
            if self.case_sensitive:
                return self.pattern in text
            return self.pattern.casefold() in text.casefold()
        return _compile(self.pattern, not self.case_sensitive).search(text) is not None

    def compact(self) -> str:
        """The inline form used by the suite file, e.g. '+L:novellas'."""
        pol = "+" if self.polarity == PASS else "-"
        kind = "L" if self.kind == KIND_LITERAL else "R"
        default_cs = self.kind == KIND_REGEX
        flags = ""
        if self.case_sensitive != default_cs:
            flags = "c" if self.case_sensitive else "i"
        return f"{pol}{kind}{flags}:{self.pattern}"


def parse_rule(spec, where: str = "rule") -> Rule:
    """Parse the compact string form or the provenance-carrying object form."""
    if isinstance(spec, str):
        m = _RULE_RE.match(spec)
        if m is None:
            raise PatternError(f"{where}: malformed rule {spec!r} (expected e.g. '+L:novellas')")
        kind = _KIND_MARKERS[m.group("kind")]
        case_sensitive = None
        if m.group("flags") == "c":
            case_sensitive = True
        elif m.group("flags") == "i":
            case_sensitive = False
        return Rule(
            pattern=m.group("pattern"),
            kind=kind,
            polarity=_POLARITY_MARKERS[m.group("pol")],
            case_sensitive=case_sensitive,
        )
    if isinstance(spec, dict):
        if "rule" not in spec:
            raise PatternError(f"{where}: rule object needs a 'rule' field")
        base = parse_rule(spec["rule"], where)
        return replace(
            base,
            provenance=PROVENANCE_ANNOTATOR if spec.get("by") else PROVENANCE_INITIAL,
            annotator=spec.get("by"),
            timestamp=spec.get("at"),
            comment=spec.get("comment"),
        )
    raise PatternError(f"{where}: rule must be a string or object, got {type(spec).__name__}")


def rule_record(rule: Rule):
    """Inverse of parse_rule: the JSON value written to the suite file."""
    if rule.provenance == PROVENANCE_INITIAL and rule.comment is None:
        return rule.compact()
    record = {"rule": rule.compact()}
    if rule.annotator is not None:
        record["by"] = rule.annotator
    if rule.timestamp is not None:
        record["at"] = rule.timestamp
    if rule.comment is not None:
        record["comment"] = rule.comment
    return record


@dataclass(frozen=True)
class TestItem:
    """One source sentence plus the rules that decide its translations."""

    id: str
    source: str
    phenomenon: str
    category: str
    pass_rules: tuple[Rule, ...] = ()
    fail_rules: tuple[Rule, ...] = ()
    notes: Optional[str] = None

    @property
    def rules(self) -> tuple[Rule, ...]:
        return self.pass_rules + self.fail_rules

    def with_rule(self, rule: Rule) -> "TestItem":
        if rule.polarity == PASS:
            return replace(self, pass_rules=self.pass_rules + (rule,))
        return replace(self, fail_rules=self.fail_rules + (rule,))


@dataclass(frozen=True)
class TestSuite:
    """An immutable suite: ordered items plus the phenomenon -> category map."""

    name: str
    version: int
    items: tuple[TestItem, ...]
    taxonomy: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.taxonomy:
            object.__setattr__(
                self, "taxonomy", {it.phenomenon: it.category for it in self.items}
            )
        object.__setattr__(self, "_by_id", {it.id: it for it in self.items})

    def item(self, item_id: str) -> TestItem:
        try:
            return self._by_id[item_id]
        except KeyError:
            raise KeyError(f"unknown item id {item_id!r}") from None

    def ids(self) -> tuple[str, ...]:
        return tuple(it.id for it in self.items)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._by_id

    def __len__(self) -> int:
        return len(self.items)

    def with_rule_added(self, item_id: str, rule: Rule) -> "TestSuite":
        """A new suite, version bumped, with the rule appended to the item."""
        updated = self.item(item_id).with_rule(rule)
        items = tuple(updated if it.id == item_id else it for it in self.items)
        return TestSuite(name=self.name, version=self.version + 1, items=items)


@dataclass(frozen=True)
class ValidationIssue:
    level: str  # "error" | "warning"
    code: str
    message: str
    subject: Optional[str] = None


@dataclass(frozen=True)
class TaxonomyStats:
    per_phenomenon: dict[str, int]
    per_category: dict[str, int]
    total: int


def _iter_records(path: Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8-sig") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SuiteFormatError(f"{path}:{lineno}: not valid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise SuiteFormatError(f"{path}:{lineno}: record must be a JSON object")
            yield lineno, record


def _item_from_record(record: dict, where: str) -> TestItem:
    for key in ("id", "source", "phenomenon", "category"):
        if not isinstance(record.get(key), str) or not record[key].strip():
            raise SuiteFormatError(f"{where}: missing or empty field {key!r}")
    source = unicodedata.normalize("NFC", record["source"]).strip()
    if not source:
        raise SuiteFormatError(f"{where}: source is empty after normalization")
    rules = record.get("rules")
    if not isinstance(rules, list) or not rules:
        raise SuiteFormatError(
            f"{where}: item {record['id']!r} has no rules and could never auto-judge"
        )
    parsed = []
    for i, spec in enumerate(rules):
        try:
            parsed.append(parse_rule(spec, where=f"{where} rule {i}"))
        except PatternError as exc:
            raise PatternError(f"item {record['id']!r}: {exc}") from exc
    notes = record.get("notes")
    if notes is not None and not isinstance(notes, str):
        raise SuiteFormatError(f"{where}: notes must be a string")
    return TestItem(
        id=record["id"].strip(),
        source=source,
        phenomenon=record["phenomenon"].strip(),
        category=record["category"].strip(),
        pass_rules=tuple(r for r in parsed if r.polarity == PASS),
        fail_rules=tuple(r for r in parsed if r.polarity == FAIL),
        notes=notes,
    )


def load_suite(path, taxonomy: Optional[dict[str, str]] = None) -> TestSuite:
    """Load and validate a suite file.

    Raises SuiteFormatError / DuplicateItemError / TaxonomyError /
    PatternError on the first structural violation, with file and line
    positions where they exist. ``taxonomy``, if given, restricts the
    phenomena the file may use.
    """
    path = Path(path)
    if not path.exists():
        raise SuiteFormatError(f"suite file not found: {path}")
    records = _iter_records(path)
    try:
        lineno, header = next(records)
    except StopIteration:
        raise SuiteFormatError(f"{path}: empty suite file") from None
    if "suite" not in header:
        raise SuiteFormatError(f"{path}:{lineno}: first record must be the suite header")
    name = header["suite"]
    version = header.get("version", 1)
    if not isinstance(name, str) or not name:
        raise SuiteFormatError(f"{path}:{lineno}: header 'suite' must be a non-empty string")
    if not isinstance(version, int) or version < 1:
        raise SuiteFormatError(f"{path}:{lineno}: header 'version' must be a positive integer")

    items: list[TestItem] = []
    seen: dict[str, int] = {}
    phen_to_cat: dict[str, str] = {}
    for lineno, record in records:
        where = f"{path}:{lineno}"
        item = _item_from_record(record, where)
        if item.id in seen:
            raise DuplicateItemError(
                f"{where}: duplicate item id {item.id!r} (first at line {seen[item.id]})"
            )
        seen[item.id] = lineno
        if taxonomy is not None:
            if item.phenomenon not in taxonomy:
                raise TaxonomyError(
                    f"{where}: unknown phenomenon {item.phenomenon!r} (not in the given taxonomy)"
                )
            if taxonomy[item.phenomenon] != item.category:
                raise TaxonomyError(
                    f"{where}: phenomenon {item.phenomenon!r} belongs to category "
                    f"{taxonomy[item.phenomenon]!r}, not {item.category!r}"
                )
        known = phen_to_cat.get(item.phenomenon)
        if known is not None and known != item.category:
            raise TaxonomyError(
                f"{where}: phenomenon {item.phenomenon!r} mapped to both "
                f"{known!r} and {item.category!r}"
            )
        phen_to_cat[item.phenomenon] = item.category
        items.append(item)
    if not items:
        raise SuiteFormatError(f"{path}: suite has no items")
    return TestSuite(name=name, version=version, items=tuple(items), taxonomy=phen_to_cat)


def save_suite(suite: TestSuite, path) -> None:
    """Write the line-delimited suite format; inverse of load_suite."""
    path = Path(path)
    lines = [json.dumps({"suite": suite.name, "version": suite.version}, ensure_ascii=False)]
    for it in suite.items:
        record = {
            "id": it.id,
            "source": it.source,
            "phenomenon": it.phenomenon,
            "category": it.category,
            "rules": [rule_record(r) for r in it.rules],
        }
        if it.notes is not None:
            record["notes"] = it.notes
        lines.append(json.dumps(record, ensure_ascii=False))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def validate_suite(suite: TestSuite) -> list[ValidationIssue]:
    """Structural checks plus the per-phenomenon size recommendation.

    Returns issues instead of raising so partially built suites can be
    inspected; an empty list means clean.
    """
    issues: list[ValidationIssue] = []
    if not suite.items:
        issues.append(ValidationIssue("error", "empty-suite", "suite has no items"))
        return issues
    seen: set[str] = set()
    phen_to_cat: dict[str, str] = {}
    counts: dict[str, int] = {}
    for it in suite.items:
        if it.id in seen:
            issues.append(
                ValidationIssue("error", "duplicate-id", f"duplicate item id {it.id!r}", it.id)
            )
        seen.add(it.id)
        if not it.source.strip():
            issues.append(
                ValidationIssue("error", "empty-source", f"item {it.id!r} has an empty source", it.id)
            )
        if not it.rules:
            issues.append(
                ValidationIssue(
                    "error", "no-rules", f"item {it.id!r} has no rules and can never auto-judge", it.id
                )
            )
        known = phen_to_cat.setdefault(it.phenomenon, it.category)
        if known != it.category:
            issues.append(
                ValidationIssue(
                    "error",
                    "taxonomy-conflict",
                    f"phenomenon {it.phenomenon!r} mapped to both {known!r} and {it.category!r}",
                    it.phenomenon,
                )
            )
        if suite.taxonomy.get(it.phenomenon) not in (None, it.category):
            issues.append(
                ValidationIssue(
                    "error",
                    "taxonomy-conflict",
                    f"item {it.id!r} disagrees with the suite taxonomy for {it.phenomenon!r}",
                    it.id,
                )
            )
        signatures = set()
        for r in it.rules:
            sig = (r.polarity, r.kind, r.pattern, r.case_sensitive)
            if sig in signatures:
                issues.append(
                    ValidationIssue(
                        "warning",
                        "duplicate-rule",
                        f"item {it.id!r} repeats {r.polarity}-rule {r.pattern!r}",
                        it.id,
                    )
                )
            signatures.add(sig)
        counts[it.phenomenon] = counts.get(it.phenomenon, 0) + 1
    for phenomenon, n in counts.items():
        if n < RECOMMENDED_MIN_ITEMS:
            issues.append(
                ValidationIssue(
                    "warning",
                    "few-items",
                    f"phenomenon {phenomenon!r} has {n} items, "
                    f"below recommended minimum of {RECOMMENDED_MIN_ITEMS}",
                    phenomenon,
                )
            )
    return issues


def taxonomy_stats(suite: TestSuite) -> TaxonomyStats:
    per_phenomenon: dict[str, int] = {}
    per_category: dict[str, int] = {}
    for it in suite.items:
        per_phenomenon[it.phenomenon] = per_phenomenon.get(it.phenomenon, 0) + 1
        per_category[it.category] = per_category.get(it.category, 0) + 1
    return TaxonomyStats(per_phenomenon, per_category, len(suite.items))


def default_categories() -> list[str]:
    """The 14 category names shipped as the default taxonomy."""
    from importlib.resources import files

    data = json.loads(files("lingeval.data").joinpath("taxonomy_wmt20.json").read_text("utf-8"))
    return list(data["categories"])
