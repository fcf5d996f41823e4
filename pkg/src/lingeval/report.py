"""Rendering of accuracy and cross-year tables.

Tables carry integer counts; percentages, one decimal place, half-up, are
produced at render time only. Boldface in a row always equals the best
cluster for that row. Output formats: plain (aligned columns, bold as a
trailing '*', negative deltas bracketed), markdown (**bold**, *negative*),
csv (tidy records with explicit bold flags), json (full structure).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal, localcontext
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

from .bleu import corpus_bleu
from .errors import InputError, PreconditionError
from .stats import (
    GROUP_CATEGORY,
    GROUP_PHENOMENON,
    GroupAccuracy,
    SignificanceConfig,
    YearDelta,
    accuracy,
    best_cluster,
    common_valid_items,
    fair_item_set,
    macro_average,
    year_delta,
)
from .store import EvaluationRun
from .suite import PASS, TestSuite

FORMATS = ("plain", "csv", "markdown", "json")

MICRO_LABEL = "micro-average"
MACRO_LABEL = "macro-average"
BLEU_LABEL = "BLEU"


class RenderError(InputError):
    pass


def _decimal1(value: Union[Fraction, float]) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = 50
        if isinstance(value, Fraction):
            dec = Decimal(value.numerator) / Decimal(value.denominator)
        else:
            dec = Decimal(value)
        return dec.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)


def fmt_pct(value: Union[Fraction, float]) -> str:
    """Percentage with one decimal, round half away from zero."""
    return str(_decimal1(value))


def fmt_delta(value: Fraction) -> str:
    dec = _decimal1(value)
    if dec == 0:
        return "+0.0"
    return f"+{dec}" if dec > 0 else str(dec)


@dataclass(frozen=True)
class PctCell:
    correct: int
    n: int
    bold: bool
    z: Optional[float] = None  # vs the row's best system

    def text(self) -> str:
        return fmt_pct(Fraction(self.correct * 100, self.n))


@dataclass(frozen=True)
class MacroCell:
    value: Fraction  # already in percentage points
    bold: bool

    def text(self) -> str:
        return fmt_pct(self.value)


@dataclass(frozen=True)
class ScoreCell:
    score: float

    def text(self) -> str:
        return fmt_pct(self.score)


@dataclass(frozen=True)
class DeltaCell:
    correct_a: int
    n_a: int
    correct_b: int
    n_b: int

    @property
    def delta(self) -> Fraction:
        return (Fraction(self.correct_b, self.n_b) - Fraction(self.correct_a, self.n_a)) * 100

    def text(self) -> str:
        return fmt_delta(self.delta)


@dataclass(frozen=True)
class DeltaMacroCell:
    value: Fraction

    def text(self) -> str:
        return fmt_delta(self.value)


Cell = Union[PctCell, MacroCell, ScoreCell, DeltaCell, DeltaMacroCell, None]


@dataclass(frozen=True)
class ReportRow:
    name: str
    n: Optional[int]
    cells: tuple[Cell, ...]


@dataclass(frozen=True)
class ReportTable:
    kind: str  # "accuracy" | "delta"
    row_label: str  # "category" | "phenomenon"
    columns: tuple[str, ...]
    rows: tuple[ReportRow, ...]
    footers: tuple[ReportRow, ...]


def _order_systems(per_system_groups: dict[str, list[GroupAccuracy]]) -> list[str]:
    """Strongest first: descending category macro-average, ties by system id."""
    return sorted(
        per_system_groups,
        key=lambda s: (-macro_average(per_system_groups[s]), s),
    )


def build_accuracy_report(
    suite: TestSuite,
    runs: Sequence[EvaluationRun],
    by: str,
    config: SignificanceConfig = SignificanceConfig(),
    references: Optional[Mapping[str, str]] = None,
) -> ReportTable:
    if not runs:
        raise PreconditionError("no runs to report on")
    fair = fair_item_set(runs)
    if not fair:
        raise PreconditionError("no warning-free items shared by all runs")
    per_system: dict[str, list[GroupAccuracy]] = {}
    per_system_categories: dict[str, list[GroupAccuracy]] = {}
    for run in runs:
        if run.system_id in per_system:
            raise InputError(f"two runs for system {run.system_id!r}; report one run per system")
        per_system[run.system_id] = accuracy(suite, run, fair, by)
        # column order follows category strength for every table kind
        per_system_categories[run.system_id] = (
            per_system[run.system_id]
            if by == GROUP_CATEGORY
            else accuracy(suite, run, fair, GROUP_CATEGORY)
        )
    systems = _order_systems(per_system_categories)

    group_names = sorted({g.name for groups in per_system.values() for g in groups}, key=str.casefold)
    by_system_group = {
        s: {g.name: g for g in groups} for s, groups in per_system.items()
    }
    rows = []
    for name in group_names:
        accs = [by_system_group[s][name] for s in systems]
        cluster = best_cluster(accs, config)
        cells = tuple(
            PctCell(
                a.correct,
                a.n,
                bold=a.system_id in cluster.members,
                z=cluster.zscores[a.system_id],
            )
            for a in accs
        )
        rows.append(ReportRow(name=name, n=accs[0].n, cells=cells))

    totals = {
        s: (sum(g.correct for g in per_system[s]), sum(g.n for g in per_system[s]))
        for s in systems
    }
    micro_accs = [
        GroupAccuracy(kind="all", name="all", system_id=s, correct=c, n=n)
        for s, (c, n) in totals.items()
    ]
    micro_cluster = best_cluster(micro_accs, config)
    micro_cells = tuple(
        PctCell(c, n, bold=s in micro_cluster.members, z=micro_cluster.zscores[s])
        for s, (c, n) in totals.items()
    )
    total_n = next(iter(totals.values()))[1]
    footers = [ReportRow(MICRO_LABEL, total_n, micro_cells)]

    macros = {s: macro_average(per_system[s]) * 100 for s in systems}
    best_macro = max(macros.values())
    footers.append(
        ReportRow(
            MACRO_LABEL,
            total_n,
            tuple(MacroCell(macros[s], bold=macros[s] == best_macro) for s in systems),
        )
    )

    if references is not None:
        runs_by_system = {run.system_id: run for run in runs}
        ids = suite.ids()
        missing = [i for i in ids if i not in references]
        if missing:
            raise InputError(f"references missing for {len(missing)} item(s), e.g. {missing[0]!r}")
        refs = [references[i] for i in ids]
        bleu_cells = tuple(
            ScoreCell(corpus_bleu([runs_by_system[s].outputs[i] for i in ids], refs))
            for s in systems
        )
        footers.append(ReportRow(BLEU_LABEL, None, bleu_cells))

    return ReportTable(
        kind="accuracy",
        row_label=by,
        columns=tuple(systems),
        rows=tuple(rows),
        footers=tuple(footers),
    )


def build_category_report(
    suite: TestSuite,
    runs: Sequence[EvaluationRun],
    config: SignificanceConfig = SignificanceConfig(),
    references: Optional[Mapping[str, str]] = None,
) -> ReportTable:
    return build_accuracy_report(suite, runs, GROUP_CATEGORY, config, references)


def build_phenomenon_report(
    suite: TestSuite,
    runs: Sequence[EvaluationRun],
    config: SignificanceConfig = SignificanceConfig(),
    references: Optional[Mapping[str, str]] = None,
) -> ReportTable:
    return build_accuracy_report(suite, runs, GROUP_PHENOMENON, config, references)


def build_year_report(
    suite: TestSuite,
    pairs: Sequence[tuple[str, EvaluationRun, EvaluationRun]],
    by: str = GROUP_CATEGORY,
    config: SignificanceConfig = SignificanceConfig(),
) -> ReportTable:
    """Accuracy change per pair of runs, over their common valid items.

    Groups without common items for a pair render blank in that column.
    """
    if not pairs:
        raise PreconditionError("no run pairs to compare")
    labels = []
    deltas_by_label: dict[str, dict[str, YearDelta]] = {}
    pooled: dict[str, tuple[int, int, int, int]] = {}
    for label, run_a, run_b in pairs:
        if label in deltas_by_label:
            raise InputError(f"duplicate pair label {label!r}")
        labels.append(label)
        deltas = year_delta(suite, run_a, run_b, by)
        deltas_by_label[label] = {d.group: d for d in deltas}
        common = {i for i in common_valid_items(run_a, run_b) if i in suite}
        ca = sum(1 for i in common if run_a.effective_verdict(i) == PASS)
        cb = sum(1 for i in common if run_b.effective_verdict(i) == PASS)
        pooled[label] = (ca, len(common), cb, len(common))

    group_names = sorted(
        {g for deltas in deltas_by_label.values() for g in deltas}, key=str.casefold
    )
    rows = []
    for name in group_names:
        cells: list[Cell] = []
        for label in labels:
            d = deltas_by_label[label].get(name)
            cells.append(
                DeltaCell(d.correct_a, d.n_a, d.correct_b, d.n_b) if d is not None else None
            )
        rows.append(ReportRow(name=name, n=None, cells=tuple(cells)))

    micro_cells = tuple(DeltaCell(*pooled[label]) for label in labels)
    macro_cells = []
    for label in labels:
        ds = list(deltas_by_label[label].values())
        macro_cells.append(
            DeltaMacroCell(sum((d.delta_pp for d in ds), Fraction(0)) / len(ds))
        )
    footers = [
        ReportRow(MICRO_LABEL, None, micro_cells),
        ReportRow(MACRO_LABEL, None, tuple(macro_cells)),
    ]
    return ReportTable(
        kind="delta",
        row_label=by,
        columns=tuple(labels),
        rows=tuple(rows),
        footers=tuple(footers),
    )


# -- rendering ---------------------------------------------------------------


def _cell_text(cell: Cell, fmt: str) -> str:
    if cell is None:
        return ""
    text = cell.text()
    bold = getattr(cell, "bold", False)
    negative = isinstance(cell, (DeltaCell, DeltaMacroCell)) and text.startswith("-")
    if fmt == "plain":
        if bold:
            return text + "*"
        if negative:
            return f"[{text}]"
        return text
    if fmt == "markdown":
        if bold:
            return f"**{text}**"
        if negative:
            return f"*{text}*"
        return text
    return text


def _render_grid(table: ReportTable, fmt: str) -> str:
    has_n = any(row.n is not None for row in table.rows + table.footers)
    header = [table.row_label] + (["items"] if has_n else []) + list(table.columns)
    body = []
    for row in table.rows + table.footers:
        line = [row.name]
        if has_n:
            line.append("" if row.n is None else str(row.n))
        line.extend(_cell_text(c, fmt) for c in row.cells)
        body.append(line)
    if fmt == "markdown":
        lines = ["| " + " | ".join(header) + " |"]
        lines.append("|" + "|".join(" --- " for _ in header) + "|")
        for line in body:
            lines.append("| " + " | ".join(line) + " |")
        return "\n".join(lines) + "\n"
    widths = [len(h) for h in header]
    for line in body:
        for i, cell in enumerate(line):
            widths[i] = max(widths[i], len(cell))
    out_lines = []
    for line in [header] + body:
        padded = [line[0].ljust(widths[0])] + [
            cell.rjust(widths[i]) for i, cell in enumerate(line) if i > 0
        ]
        out_lines.append("  ".join(padded).rstrip())
    sep = "-" * max(len(l) for l in out_lines)
    out_lines.insert(1, sep)
    return "\n".join(out_lines) + "\n"


def _cell_json(cell: Cell) -> Optional[dict]:
    if cell is None:
        return None
    if isinstance(cell, PctCell):
        record = {"correct": cell.correct, "n": cell.n, "pct": cell.text(), "bold": cell.bold}
        if cell.z is not None:
            record["z"] = round(cell.z, 6)
        return record
    if isinstance(cell, MacroCell):
        return {"pct": cell.text(), "bold": cell.bold}
    if isinstance(cell, ScoreCell):
        return {"score": cell.text()}
    if isinstance(cell, DeltaCell):
        return {
            "correct_a": cell.correct_a,
            "n_a": cell.n_a,
            "correct_b": cell.correct_b,
            "n_b": cell.n_b,
            "delta": cell.text(),
        }
    if isinstance(cell, DeltaMacroCell):
        return {"delta": cell.text()}
    raise RenderError(f"unknown cell type {type(cell).__name__}")


def _render_json(table: ReportTable) -> str:
    def row_dict(row: ReportRow) -> dict:
        return {
            "name": row.name,
            "n": row.n,
            "cells": [_cell_json(c) for c in row.cells],
        }

    doc = {
        "kind": table.kind,
        "row_label": table.row_label,
        "columns": list(table.columns),
        "rows": [row_dict(r) for r in table.rows],
        "footers": [row_dict(r) for r in table.footers],
    }
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def _render_csv(table: ReportTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if table.kind == "accuracy":
        writer.writerow(["row", "system", "correct", "n", "value", "bold", "z"])
        for row in table.rows + table.footers:
            for system, cell in zip(table.columns, row.cells):
                if cell is None:
                    continue
                record = [row.name, system]
                if isinstance(cell, PctCell):
                    z = "" if cell.z is None else round(cell.z, 6)
                    record += [cell.correct, cell.n, cell.text(), int(cell.bold), z]
                elif isinstance(cell, MacroCell):
                    record += ["", "", cell.text(), int(cell.bold), ""]
                else:
                    record += ["", "", cell.text(), "", ""]
                writer.writerow(record)
    else:
        writer.writerow(["row", "pair", "correct_a", "n_a", "correct_b", "n_b", "delta"])
        for row in table.rows + table.footers:
            for label, cell in zip(table.columns, row.cells):
                if cell is None:
                    continue
                if isinstance(cell, DeltaCell):
                    writer.writerow(
                        [row.name, label, cell.correct_a, cell.n_a, cell.correct_b, cell.n_b, cell.text()]
                    )
                else:
                    writer.writerow([row.name, label, "", "", "", "", cell.text()])
    return buf.getvalue()


def render(table: ReportTable, fmt: str = "plain") -> str:
    """Deterministic text for the table in the requested format."""
    if fmt not in FORMATS:
        raise RenderError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")
    if fmt == "json":
        return _render_json(table)
    if fmt == "csv":
        return _render_csv(table)
    return _render_grid(table, fmt)
