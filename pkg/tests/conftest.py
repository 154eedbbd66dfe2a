import numpy as np
import pytest

from fingertip_hb.ingest import FrameSequence


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    doc = getattr(report, "criterion", None)
    if doc is None:
        return
    status = "PASS" if report.passed else "FAIL"
    report.config_lines.append(f"{status}  {doc}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        rep.criterion = f"criterion {marker.args[0]}: {marker.args[1]}"
        rep.config_lines = item.config._acceptance_lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config._acceptance_lines
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20171015)


def make_seq(frames, source_id="test", fps=None):
    return FrameSequence(np.asarray(frames, dtype=np.uint8), source_id, fps)
