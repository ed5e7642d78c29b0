import math
from collections import defaultdict

import numpy as np
import pytest

from srfpll.signals import ThreePhaseSample

SHIFTS = (0.0, 2 * math.pi / 3, 4 * math.pi / 3)


def balanced(z, theta, t=0.0):
    """Clean balanced sample in cosine form."""
    return ThreePhaseSample(t, *(z * math.cos(theta - s) for s in SHIFTS))


def dq_to_abc(zd, zq, theta_star):
    """Inverse of the amplitude-invariant transform (test utility only)."""
    return tuple(zd * math.cos(theta_star - s) + zq * math.sin(theta_star - s) for s in SHIFTS)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance report: one line per numbered criterion ---------------------

_criteria = defaultdict(list)


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            item.user_properties.append(("criterion", mark.args[0]))


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for key, value in report.user_properties:
        if key == "criterion":
            _criteria[value].append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        results = _criteria[number]
        ok = all(outcome == "passed" for _, outcome in results)
        names = ", ".join(f"{name}={outcome}" for name, outcome in results)
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  ({names})")
