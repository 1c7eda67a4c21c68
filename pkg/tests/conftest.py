import pytest

_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def verdict():
    """Record a criterion outcome; the summary prints one line per criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        _RESULTS[number] = (ok, detail)
        print(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(_RESULTS):
        ok, detail = _RESULTS[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
