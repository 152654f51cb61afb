_acceptance = []


def pytest_runtest_logreport(report):
    if report.when == "call":
        _acceptance.extend(v for k, v in report.user_properties if k == "acceptance")


def pytest_terminal_summary(terminalreporter):
    if _acceptance:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance:
            terminalreporter.write_line(line)
