"""Collects per-criterion outcomes from tests marked ``criterion`` and prints
one PASS/FAIL line per acceptance criterion at the end of the session."""

import time

import pytest

_RESULTS: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title, budget_s): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    n, title, budget = m.args
    entry = _RESULTS.setdefault(n, {"title": title, "budget": budget, "ok": True, "seconds": 0.0,
                                    "failed": []})
    entry["seconds"] += rep.duration
    if rep.failed or (rep.when == "call" and rep.skipped):
        entry["ok"] = False
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_RESULTS):
        e = _RESULTS[n]
        in_time = e["seconds"] <= e["budget"]
        status = "PASS" if e["ok"] and in_time else "FAIL"
        note = ""
        if not in_time:
            note += f"  over budget ({e['seconds']:.1f}s > {e['budget']}s)"
        if e["failed"]:
            note += "  failing: " + ", ".join(e["failed"])
        tr.write_line(f"criterion {n:2d} {status}  {e['title']}  [{e['seconds']:.1f}s / {e['budget']}s]{note}")


@pytest.fixture
def rng():
    return __import__("numpy").random.default_rng(20240607)


@pytest.fixture(scope="session")
def session_start():
    return time.perf_counter()
