"""Paths to the bundled demo suite and scripted system outputs."""

from importlib.resources import files
from pathlib import Path


def _data(name: str) -> Path:
    return Path(str(files("lingeval.data").joinpath("demo").joinpath(name)))


def demo_suite_path() -> Path:
    return _data("demo.suite.jsonl")


def demo_outputs_path(system: str = "demo-mt") -> Path:
    path = _data(f"outputs_{system}.jsonl")
    if not path.exists():
        raise FileNotFoundError(f"no bundled outputs for system {system!r}")
    return path


def demo_systems() -> list[str]:
    return ["demo-mt", "demo-rbmt"]
