from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from scmkit.panel import PanelDataset

DATA_DIR = Path(__file__).parent / "data"
GOLDEN_DIR = Path(__file__).parent / "golden"


class TrackingPanel(PanelDataset):
    """PanelDataset that logs every (unit, time) cell read, shared with derived panels."""

    __slots__ = ("log",)

    def __init__(self, *args, log: set | None = None, **kwargs):
        super().__init__(*args, **kwargs)
        self.log = set() if log is None else log

    def _read(self, unit_pos, time_slice):
        unit = self.units[unit_pos]
        for t in self.times[time_slice]:
            self.log.add((unit, t))
        return super()._read(unit_pos, time_slice)

    def _derive(self, units, times, grid):
        return TrackingPanel(units, times, grid, self.outcome_name, log=self.log)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_addoption(parser):
    parser.addoption(
        "--replication-dir",
        default=None,
        help="directory with user-assembled replication panels (unemployment.csv, wind_share.csv)",
    )


_criteria: dict[int, tuple[str, list[str]]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = getattr(report, "_criterion", None)
    if marker is None:
        return
    number, name = marker
    _criteria.setdefault(number, (name, []))[1].append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        report._criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        name, outcomes = _criteria[number]
        if any(o == "failed" for o in outcomes):
            status = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"AC{number:<2} {status:<4} {name}")
