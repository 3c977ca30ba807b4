import pytest

# criterion number -> {"title": str, "tests": {nodeid: (passed, seconds)}}
_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion this test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    num, title = mark.args
    entry = _ACCEPTANCE.setdefault(num, {"title": title, "tests": {}})
    # a failed setup (fixture) counts against the criterion too
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        entry["tests"][item.nodeid] = (rep.passed, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        entry = _ACCEPTANCE[num]
        results = entry["tests"].values()
        ok = bool(results) and all(p for p, _ in results)
        failed = [n.split("::")[-1] for n, (p, _) in entry["tests"].items() if not p]
        line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {entry['title']}"
        if failed:
            line += f"  [failed: {', '.join(failed)}]"
        tr.write_line(line)

