"""Collect acceptance-criterion outcomes and print one line per criterion."""

_OUTCOMES = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _OUTCOMES[props["criterion"]] = (report.outcome, props.get("measured", ""))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_OUTCOMES, key=lambda s: int(s.split()[0][1:])):
        outcome, measured = _OUTCOMES[name]
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"{status}  {name}"
        if measured:
            line += f"  [{measured}]"
        terminalreporter.write_line(line)
