import pytest

# acceptance outcomes, printed once at the end of the session
VERDICTS = []


@pytest.fixture
def verdict():
    def record(tag, ok, detail=""):
        VERDICTS.append((tag, bool(ok), detail))
        return bool(ok)
    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for tag, ok, detail in VERDICTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {tag}" + (f": {detail}" if detail else ""))
