import shutil
from pathlib import Path

import pytest

from selertion.frontend.project import Project
from selertion.harness import CORPUS_NAMES, corpus_path


@pytest.fixture
def complexmath():
    return Project.load(corpus_path("complexmath"))


@pytest.fixture
def corpus_projects():
    return {name: Project.load(corpus_path(name)) for name in CORPUS_NAMES}


@pytest.fixture
def project_copy(tmp_path):
    """Materialize a corpus project into a scratch directory."""

    def make(name: str) -> Path:
        dest = tmp_path / name
        shutil.copytree(corpus_path(name), dest)
        return dest

    return make


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for n in sorted(verdicts):
            terminalreporter.write_line(verdicts[n])
