import pytest

_RESULTS = []


class AcceptanceLog:
    def record(self, criterion: str, passed: bool, detail: str) -> None:
        _RESULTS.append((criterion, bool(passed), detail))


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(_RESULTS, key=lambda r: r[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {criterion}: {detail}")
