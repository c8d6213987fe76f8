import shutil
from pathlib import Path

import pytest

from streamverify.frontend import load_spec

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

RUNNING = """\
input reset : Bool
assume <a1> reset[-1, f] or reset[1, f]
output o1 := if reset then 0 else o1[-1, 0] + 1
output o2 := o1[-1, 0] + o1 + o1[1, 0]
assert <a1> 0 <= o2 and o2 <= 3
"""


def corpus_text(name: str) -> str:
    return (CORPUS / f"{name}.lola").read_text()


def corpus_spec(name: str):
    return load_spec(corpus_text(name))


@pytest.fixture
def running():
    return load_spec(RUNNING)


def pytest_collection_modifyitems(config, items):
    if shutil.which("z3") is None:
        skip = pytest.mark.skip(reason="z3 executable not available")
        for item in items:
            if "solver" in item.keywords:
                item.add_marker(skip)


def pytest_configure(config):
    config.addinivalue_line("markers", "solver: needs an SMT solver executable")


_CRITERIA: dict[int, tuple[str, bool, str]] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str = "") -> None:
    _CRITERIA[number] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, passed, detail = _CRITERIA[number]
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
