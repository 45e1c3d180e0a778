import pytest

_ACCEPTANCE: list[str] = []


@pytest.fixture
def accept():
    """Record one ``ACCEPT`` line per criterion, then assert it."""

    def record(number: int, name: str, passed: bool, detail: str) -> None:
        line = f"ACCEPT {number:>2} {name:<28} {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
