_verdicts = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _verdicts.extend(line for line in report.capstdout.splitlines()
                         if line.startswith(("[PASS]", "[FAIL]")))


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.section("acceptance criteria")
        for line in _verdicts:
            terminalreporter.write_line(line)
