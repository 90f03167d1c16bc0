"""Shared test helpers: acceptance verdict lines in the terminal summary."""

VERDICTS: list[str] = []


def record_verdict(line: str) -> None:
    VERDICTS.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
