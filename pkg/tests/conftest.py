import pytest

_acceptance_lines: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion, then assert."""

    def report(ok: bool, detail: str):
        name = request.node.name.removeprefix("test_")
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
        _acceptance_lines.append(line)
        print(line)
        assert ok, detail

    return report


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
