"""End-to-end annotation loop against a live `serve` process.

Drives exactly the HTTP calls the browser UI makes: list warnings,
resolve one, preview and add a rule, trigger re-judging, watch progress.
Runs without the UI bundle being built.
"""

import socket
import subprocess
import sys
import time
from pathlib import Path

import httpx
import pytest

from lingeval.cli import main
from lingeval.demo import demo_outputs_path, demo_suite_path
from lingeval.store import JudgmentStore

SERVER_STARTUP_S = 15


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture
def live_server(tmp_path):
    store_dir = tmp_path / "store"
    store = JudgmentStore.initialize(store_dir, demo_suite_path())
    store.ingest_run(demo_outputs_path("demo-mt"))
    port = free_port()
    ui = str(Path(__file__).parent.parent / "frontend" / "public")
    proc = subprocess.Popen(
        [sys.executable, "-m", "lingeval", "--store", str(store_dir),
         "serve", "--port", str(port), "--ui", ui],
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
    )
    base = f"http://127.0.0.1:{port}"
    try:
        deadline = time.time() + SERVER_STARTUP_S
        while True:
            try:
                if httpx.get(base + "/api/v1/progress", timeout=1).status_code == 200:
                    break
            except httpx.TransportError:
                pass
            if time.time() > deadline:
                proc.kill()
                out = proc.stdout.read().decode() if proc.stdout else ""
                pytest.fail(f"server did not start:\n{out}")
            time.sleep(0.1)
        yield base, store_dir
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def report_via_cli(store_dir, capsys) -> str:
    capsys.readouterr()
    assert main(["--store", str(store_dir), "report", "category"]) == 0
    return capsys.readouterr().out


def test_annotation_loop_end_to_end(live_server, capsys):
    base, store_dir = live_server
    report_before = report_via_cli(store_dir, capsys)

    progress = httpx.get(base + "/api/v1/progress").json()
    assert progress == {
        "total_items": 12, "items_with_warnings": 2,
        "resolved_items": 0, "valid_items": 10, "pending": 2,
    }

    queue = httpx.get(base + "/api/v1/warnings").json()
    assert [w["item_id"] for w in queue["warnings"]] == ["amb-003", "vtm-002"]

    # resolve one warning the way the UI does
    vtm = next(w for w in queue["warnings"] if w["item_id"] == "vtm-002")
    resolved = httpx.post(
        base + "/api/v1/judgments",
        json={"run_id": vtm["run_id"], "item_id": "vtm-002",
              "verdict": "fail", "annotator": "ui-user"},
    )
    assert resolved.status_code == 200
    assert resolved.json()["progress"]["valid_items"] == 11

    # preview, then add, a rule for the remaining warning
    amb = next(w for w in queue["warnings"] if w["item_id"] == "amb-003")
    preview = httpx.post(
        base + "/api/v1/rules/preview",
        json={"item_id": "amb-003", "rule": "+L:short stories", "run_id": amb["run_id"]},
    )
    assert preview.status_code == 200
    assert preview.json()["matches"][0]["matched"] is True
    added = httpx.post(
        base + "/api/v1/rules",
        json={"item_id": "amb-003", "rule": "+L:short stories", "annotator": "ui-user"},
    )
    assert added.status_code == 200
    assert added.json()["suite_version"] == 2

    # trigger re-judge and poll to completion
    assert httpx.post(base + "/api/v1/rejudge", json={}).status_code == 202
    deadline = time.time() + 10
    while True:
        status = httpx.get(base + "/api/v1/rejudge/status").json()
        if not status["running"]:
            break
        assert time.time() < deadline, "re-judge never finished"
        time.sleep(0.1)
    assert status["error"] is None
    assert status["report"]["to_version"] == 2

    # progress reflects the new valid count
    progress = httpx.get(base + "/api/v1/progress").json()
    assert progress["valid_items"] == 12
    assert progress["pending"] == 0

    # the queue is empty and the CLI report over the same store changed
    assert httpx.get(base + "/api/v1/warnings").json()["warnings"] == []
    report_after = report_via_cli(store_dir, capsys)
    assert report_after != report_before
    assert "ambiguity" in report_after

    # the static UI page is served alongside the API
    index = httpx.get(base + "/")
    assert index.status_code == 200
    assert '<div id="app">' in index.text
    print("ACCEPTANCE PASS: [SECONDARY] end-to-end annotation loop over live serve")
