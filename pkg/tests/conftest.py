def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" or "test_acceptance" not in rep.nodeid:
                continue
            props = dict(rep.user_properties)
            name = props.get("criterion", rep.nodeid.split("::")[-1])
            detail = props.get("detail", "")
            lines.append((rep.nodeid, f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}: {detail}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
