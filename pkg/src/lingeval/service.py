"""Embedded HTTP JSON service for the annotation workflow.

All endpoints live under /api/v1 (docs/api.md has the schemas). Mutations
funnel through the store's single-writer lock; re-judging runs as one
background job at a time with a polling endpoint. When a shared token is
configured, mutating requests must carry it as a bearer token.
"""

from __future__ import annotations

import json
import threading
from dataclasses import asdict
from pathlib import Path
from typing import Optional

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .errors import InputError, LingevalError, PreconditionError
from .report import FORMATS, build_category_report, build_phenomenon_report, build_year_report, render
from .stats import SignificanceConfig
from .store import JudgmentStore, WarningRecord
from .suite import parse_rule
from .engine import judge

API_PREFIX = "/api/v1"


class JudgmentIn(BaseModel):
    run_id: str
    item_id: str
    verdict: str
    annotator: str
    rationale: Optional[str] = None
    override: bool = False


class RuleIn(BaseModel):
    item_id: str
    rule: str
    annotator: str
    comment: Optional[str] = None


class PreviewIn(BaseModel):
    item_id: str
    rule: str
    run_id: Optional[str] = None


class RejudgeIn(BaseModel):
    run_ids: Optional[list[str]] = None


class RejudgeJob:
    """At most one re-judge at a time; poll /rejudge/status for the result."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._thread: Optional[threading.Thread] = None
        self.last_report: Optional[dict] = None
        self.error: Optional[str] = None

    @property
    def running(self) -> bool:
        return self._thread is not None and self._thread.is_alive()

    def start(self, store: JudgmentStore, run_ids: Optional[list[str]]) -> bool:
        with self._lock:
            if self.running:
                return False

            def work() -> None:
                try:
                    report = store.rejudge(run_ids=run_ids)
                    self.last_report = {
                        "to_version": report.to_version,
                        "changed": [asdict(c) for c in report.changed],
                        "unchanged_manual": report.unchanged_manual,
                    }
                    self.error = None
                except LingevalError as exc:
                    self.error = str(exc)

            self._thread = threading.Thread(target=work, daemon=True)
            self._thread.start()
            return True

    def wait(self) -> None:
        if self._thread is not None:
            self._thread.join()


def _progress_dict(store: JudgmentStore) -> dict:
    return asdict(store.progress())


def _card(record: WarningRecord) -> dict:
    item = record.item
    return {
        "run_id": record.run_id,
        "system": record.system_id,
        "item_id": item.id,
        "source": item.source,
        "phenomenon": item.phenomenon,
        "category": item.category,
        "output": record.judgment.normalized_output,
        "raw_output": record.raw_output,
        "note": record.judgment.note,
        "matched_pass_rules": list(record.judgment.matched_pass_rules),
        "matched_fail_rules": list(record.judgment.matched_fail_rules),
        "rules": [
            {
                "rule": r.compact(),
                "polarity": r.polarity,
                "kind": r.kind,
                "provenance": r.provenance,
                "by": r.annotator,
                "comment": r.comment,
            }
            for r in item.rules
        ],
    }


def create_app(
    store: JudgmentStore,
    token: Optional[str] = None,
    ui_dir: Optional[Path] = None,
) -> FastAPI:
    app = FastAPI(title="lingeval annotation service", docs_url=None, redoc_url=None)
    job = RejudgeJob()
    app.state.store = store
    app.state.rejudge_job = job

    def require_token(request: Request) -> None:
        if token is None:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or wrong bearer token")

    @app.exception_handler(LingevalError)
    async def lingeval_error(request: Request, exc: LingevalError) -> JSONResponse:
        if isinstance(exc, PreconditionError):
            status = 409
        elif isinstance(exc, InputError):
            status = 422
        else:
            status = 500
        return JSONResponse(
            status_code=status,
            content={"error": {"code": type(exc).__name__, "message": str(exc)}},
        )

    @app.get(API_PREFIX + "/warnings")
    def warnings(
        system: Optional[str] = None,
        category: Optional[str] = None,
        phenomenon: Optional[str] = None,
    ) -> dict:
        records = store.pending_warnings(system=system, category=category, phenomenon=phenomenon)
        return {"warnings": [_card(r) for r in records], "progress": _progress_dict(store)}

    @app.get(API_PREFIX + "/progress")
    def progress() -> dict:
        return _progress_dict(store)

    @app.get(API_PREFIX + "/items/{item_id}")
    def item_detail(item_id: str) -> dict:
        suite = store.suite
        if item_id not in suite:
            raise HTTPException(status_code=404, detail=f"unknown item {item_id!r}")
        item = suite.item(item_id)
        judgments = []
        for run in store.runs():
            if item_id not in run.outputs:
                continue
            judgments.append(
                {
                    "run_id": run.run_id,
                    "system": run.system_id,
                    "output": run.auto[item_id].normalized_output,
                    "auto_verdict": run.auto[item_id].verdict,
                    "effective_verdict": run.effective_verdict(item_id),
                    "manual": item_id in run.manual,
                }
            )
        return {
            "item_id": item.id,
            "source": item.source,
            "phenomenon": item.phenomenon,
            "category": item.category,
            "notes": item.notes,
            "rules": [r.compact() for r in item.rules],
            "judgments": judgments,
        }

    @app.post(API_PREFIX + "/judgments", dependencies=[Depends(require_token)])
    def post_judgment(body: JudgmentIn) -> dict:
        resolution = store.resolve(
            body.run_id,
            body.item_id,
            body.verdict,
            body.annotator,
            rationale=body.rationale,
            override=body.override,
        )
        return {
            "resolution": {
                "run_id": body.run_id,
                "item_id": resolution.item_id,
                "verdict": resolution.verdict,
                "annotator": resolution.annotator_id,
                "at": resolution.timestamp,
            },
            "progress": _progress_dict(store),
        }

    @app.post(API_PREFIX + "/rules", dependencies=[Depends(require_token)])
    def post_rule(body: RuleIn) -> dict:
        item = store.add_rule(body.item_id, body.rule, body.annotator, comment=body.comment)
        return {
            "item_id": item.id,
            "rules": [r.compact() for r in item.rules],
            "suite_version": store.suite.version,
        }

    @app.post(API_PREFIX + "/rules/preview")
    def preview_rule(body: PreviewIn) -> dict:
        """Dry-run a candidate rule against current outputs for the item."""
        suite = store.suite
        if body.item_id not in suite:
            raise HTTPException(status_code=404, detail=f"unknown item {body.item_id!r}")
        rule = parse_rule(body.rule)  # InputError -> 422 via handler
        item = suite.item(body.item_id)
        candidate = item.with_rule(rule)
        matches = []
        for run in store.runs():
            if body.run_id is not None and run.run_id != body.run_id:
                continue
            if body.item_id not in run.outputs:
                continue
            raw = run.outputs[body.item_id]
            new_judgment = judge(candidate, raw, run.system_id)
            matches.append(
                {
                    "run_id": run.run_id,
                    "system": run.system_id,
                    "output": new_judgment.normalized_output,
                    "matched": rule.matches(new_judgment.normalized_output),
                    "verdict_with_rule": new_judgment.verdict,
                    "verdict_now": run.effective_verdict(body.item_id),
                }
            )
        return {"rule": rule.compact(), "polarity": rule.polarity, "matches": matches}

    @app.post(API_PREFIX + "/rejudge", dependencies=[Depends(require_token)])
    def post_rejudge(body: RejudgeIn) -> JSONResponse:
        for run_id in body.run_ids or []:
            store.run(run_id)  # 409 on unknown before starting the job
        if not job.start(store, body.run_ids):
            return JSONResponse(
                status_code=409,
                content={"error": {"code": "Busy", "message": "a re-judge is already running"}},
            )
        return JSONResponse(status_code=202, content={"status": "started"})

    @app.get(API_PREFIX + "/rejudge/status")
    def rejudge_status() -> dict:
        return {
            "running": job.running,
            "report": job.last_report,
            "error": job.error,
            "progress": _progress_dict(store),
        }

    @app.get(API_PREFIX + "/report")
    def report(
        kind: str = Query("category"),
        format: str = Query("json"),
        pair: Optional[list[str]] = Query(None),
        critical_z: Optional[float] = Query(None),
    ):
        if format not in FORMATS:
            raise HTTPException(status_code=422, detail=f"unknown format {format!r}")
        signif = SignificanceConfig(critical_z=critical_z) if critical_z else SignificanceConfig()
        if kind in ("category", "phenomenon"):
            runs = store.latest_runs_per_system()
            if not runs:
                raise HTTPException(status_code=409, detail="store has no runs")
            build = build_category_report if kind == "category" else build_phenomenon_report
            table = build(store.suite, runs, signif)
        elif kind == "years":
            if not pair:
                raise HTTPException(status_code=422, detail="years report needs pair=LABEL=RUN_A:RUN_B")
            pairs = []
            for spec in pair:
                label, _, runs_part = spec.partition("=")
                try:
                    run_a, run_b = runs_part.split(":")
                except ValueError:
                    raise HTTPException(status_code=422, detail=f"bad pair {spec!r}") from None
                pairs.append((label, store.run(run_a), store.run(run_b)))
            table = build_year_report(store.suite, pairs, config=signif)
        else:
            raise HTTPException(status_code=422, detail=f"unknown report kind {kind!r}")
        text = render(table, format)
        if format == "json":
            return JSONResponse(content=json.loads(text))
        return PlainTextResponse(text)

    if ui_dir is not None and ui_dir.exists():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index() -> str:
            return (
                "<!doctype html><title>lingeval</title>"
                "<h1>lingeval annotation service</h1>"
                "<p>API under /api/v1. The annotation UI is not built; "
                "see frontend/README.md.</p>"
            )

    return app
