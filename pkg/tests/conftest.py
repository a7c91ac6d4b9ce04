import pytest

_LINES_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_line(request):
    """Record (and print) the one-line verdict of an acceptance criterion."""
    lines = request.config.stash.setdefault(_LINES_KEY, [])

    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
