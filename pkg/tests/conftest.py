import contextlib

import pytest

_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record a pass/fail line for an acceptance criterion; failures still raise."""

    @contextlib.contextmanager
    def record(number, description):
        try:
            yield
        except BaseException:
            _ACCEPTANCE.append((number, "FAIL", description))
            raise
        _ACCEPTANCE.append((number, "PASS", description))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    def key(row):
        head = str(row[0]).split()[0]
        return int(head), str(row[0])

    for number, status, description in sorted(_ACCEPTANCE, key=key):
        terminalreporter.write_line(f"[{status}] criterion {str(number):>7}: {description}")
