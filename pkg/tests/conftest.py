"""Shared pytest hooks: the acceptance verdict lines are repeated in the summary."""

VERDICTS = []


def record_verdict(line: str) -> None:
    VERDICTS.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS):
            terminalreporter.write_line(line)
