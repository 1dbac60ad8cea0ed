import pytest


def pytest_addoption(parser):
    parser.addoption("--slow", action="store_true", default=False,
                     help="also run the long acceptance runs")


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_collection_modifyitems(config, items):
    if config.getoption("--slow"):
        return
    skip = pytest.mark.skip(reason="slow run, enable with --slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_runtest_logreport(report):
    if report.skipped and report.when == "setup" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        _lines().append(f"SKIP  {name} (slow, enable with --slow)")


_CONFIG = []


def _lines():
    return _CONFIG[0]._acceptance_lines if _CONFIG else []


@pytest.hookimpl(tryfirst=True)
def pytest_sessionstart(session):
    _CONFIG[:] = [session.config]


@pytest.fixture
def verdict(request):
    """Record one acceptance line, then assert it."""
    def check(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  [{detail}]" if detail else "")
        request.config._acceptance_lines.append(line)
        print(line)
        assert ok, line
    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config._acceptance_lines
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
