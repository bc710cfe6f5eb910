"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

import pytest

_RESULTS: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _RESULTS.setdefault(number, {"title": title, "ok": True, "ran": False, "notes": []})
    if report.when == "call" or report.failed:
        entry["ran"] = True
        if report.failed:
            entry["ok"] = False
            entry["notes"].append(report.longrepr.reprcrash.message.splitlines()[0]
                                  if hasattr(report.longrepr, "reprcrash") else str(report.longrepr))
    if report.when == "call":
        entry["notes"].extend(v for k, v in item.user_properties if k == "info")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_RESULTS):
        entry = _RESULTS[number]
        status = ("PASS" if entry["ok"] else "FAIL") if entry["ran"] else "NOT RUN"
        tr.write_line(f"[{status}] criterion {number:2d}: {entry['title']}")
        for note in dict.fromkeys(entry["notes"]):
            tr.write_line(f"         {note}")
