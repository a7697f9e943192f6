import json
from pathlib import Path

import pytest
from hypothesis import settings

settings.register_profile("apmetric", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("apmetric")


@pytest.fixture(scope="session")
def oracles():
    return json.loads((Path(__file__).parent / "oracles" / "oracles.json").read_text())


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line, print it, then assert the outcome."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
