import os
from collections import defaultdict

import pytest

from povs.cli import main

CRITERIA = {
    1: "golden sample matches independent oracle to 1e-10",
    2: "reductions to pooled/Welch/paired t",
    3: "MT19937 seed 5489 reference outputs",
    4: "desk-scale H0 robustness (Normal, Gumbel)",
    5: "NEW2 liberal on unequal Lognormal cells, RNK2/INT2 robust",
    6: "power ordering on the Lognormal and Normal 10/10/10 cell",
    7: "full-scale power table within 0.02 (overnight)",
    8: "property suites",
}

_outcomes = defaultdict(list)


def pytest_collection_modifyitems(config, items):
    if os.environ.get("POVS_FULL_SCALE") == "1":
        return
    skip = pytest.mark.skip(reason="full-scale run; set POVS_FULL_SCALE=1")
    for item in items:
        if "fullscale" in item.keywords:
            item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _outcomes[marker.args[0]].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, text in CRITERIA.items():
        results = _outcomes.get(n)
        if not results:
            continue
        if "failed" in results:
            status = "FAIL"
        elif all(r == "skipped" for r in results):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"criterion {n}: {status}  {text} ({len(results)} checks)")


@pytest.fixture(scope="session")
def desk_h0(tmp_path_factory):
    """Bundled desk H0 campaign run once through the CLI."""
    out = tmp_path_factory.mktemp("desk_h0")
    assert main(["simulate", "--config", "h0_desk.json", "--out", str(out)]) == 0
    return out
