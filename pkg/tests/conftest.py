"""Prints the acceptance summary at the end of every run that collected it."""

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE.get("collected"):
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 11):
        status, detail = ACCEPTANCE.get(n, ("FAIL", "did not run to completion"))
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {detail}")
