import pytest

from lingeval.demo import demo_outputs_path, demo_suite_path
from lingeval.engine import read_outputs
from lingeval.store import JudgmentStore
from lingeval.suite import load_suite


@pytest.fixture(scope="session")
def demo_suite():
    return load_suite(demo_suite_path())


@pytest.fixture(scope="session")
def demo_mt_outputs():
    _, outputs = read_outputs(demo_outputs_path("demo-mt"))
    return outputs


@pytest.fixture(scope="session")
def demo_rbmt_outputs():
    _, outputs = read_outputs(demo_outputs_path("demo-rbmt"))
    return outputs


@pytest.fixture
def demo_store(tmp_path):
    """Fresh store over the demo suite with both demo runs ingested."""
    store = JudgmentStore.initialize(tmp_path / "store", demo_suite_path())
    store.ingest_run(demo_outputs_path("demo-mt"))
    store.ingest_run(demo_outputs_path("demo-rbmt"))
    return store


@pytest.fixture
def empty_store(tmp_path):
    return JudgmentStore.initialize(tmp_path / "store", demo_suite_path())
