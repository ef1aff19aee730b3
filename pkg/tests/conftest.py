import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> (title, list of outcomes)
_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, (title, []))
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        # an expected failure still means the criterion is not met
        ok = report.outcome == "passed" and not hasattr(report, "wasxfail")
        entry[1].append(ok)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, results = _CRITERIA[number]
        status = "PASS" if results and all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {number} ({title}): {status}")


REPORTED_DEPTHS = {300.0: 3.5, 600.0: 6.4, 1500.0: 15.0, 2500.0: 25.0}


@pytest.fixture(scope="session")
def ion_runs_1e5():
    """(runs, seconds): 10^5-ion histograms at the four reference energies."""
    import time

    from vbsense.ionrange import IonBeamSpec, simulate_ions

    start = time.perf_counter()
    runs = {e: simulate_ions(IonBeamSpec(e, 100_000, seed=1)) for e in REPORTED_DEPTHS}
    return runs, time.perf_counter() - start
