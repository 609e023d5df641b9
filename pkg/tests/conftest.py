from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"

_ACCEPTANCE = []


@pytest.fixture
def h2_path():
    return DATA / "h2_sto3g.fcidump"


@pytest.fixture
def water_path():
    return DATA / "h2o_cas46.fcidump"


@pytest.fixture
def acceptance():
    """Record one acceptance line: ``acceptance(number, passed, detail)``."""
    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)
