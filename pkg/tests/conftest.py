import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# acceptance verdicts, printed after the run in criterion order
_VERDICTS: dict[int, tuple[bool, str]] = {}


class Criterion:
    def __init__(self, number: int):
        self.number = number
        self.recorded = False

    def check(self, ok: bool, detail: str) -> None:
        self.recorded = True
        _VERDICTS[self.number] = (bool(ok), detail)
        line = f"criterion {self.number}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        assert ok, line


@pytest.fixture
def criterion(request):
    number = request.node.get_closest_marker("criterion").args[0]
    c = Criterion(number)
    yield c
    if not c.recorded:
        _VERDICTS[number] = (False, "error before a verdict was reached")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        ok, detail = _VERDICTS[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
