import sys


def pytest_terminal_summary(terminalreporter):
    module = next(
        (m for name, m in sys.modules.items() if name.rpartition(".")[2] == "test_acceptance"),
        None,
    )
    lines = getattr(module, "CRITERION_LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
