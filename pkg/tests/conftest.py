ACCEPTANCE_LINES = []


def record_acceptance(number, passed, detail):
    verdict = "PASS" if passed else "FAIL"
    line = f"ACCEPTANCE {number:02d} [{verdict}] {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
