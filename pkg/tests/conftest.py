import pathlib

import pytest

ROOT = pathlib.Path(__file__).resolve().parent.parent

_acceptance_lines = []


@pytest.fixture(autouse=True)
def _repo_cwd(monkeypatch):
    # fixture configs use repo-relative paths
    monkeypatch.chdir(ROOT)


@pytest.fixture(scope="session")
def corpus():
    from bridge.corpus import load_manifest

    return load_manifest(ROOT / "fixtures" / "corpus.jsonl")


@pytest.fixture(scope="session")
def acceptance_log():
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # surface one verdict line per acceptance criterion, capture-proof
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
