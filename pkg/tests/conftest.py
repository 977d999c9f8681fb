import datetime as dt

import hypothesis
import numpy as np
import pytest

from s2sverif.grid import GridField, GridSpec

np.seterr(all="warn", under="ignore")

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")

ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(cid, text): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    cid, text = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        ACCEPTANCE[cid] = (rep.outcome, text)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE):
        outcome, text = ACCEPTANCE[cid]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{cid} {status} {text}")


@pytest.fixture
def rng():
    return np.random.default_rng(20221)


@pytest.fixture
def small_spec():
    return GridSpec(np.linspace(60.0, -60.0, 9), np.arange(12) * 30.0)


def make_field(spec, values, date=dt.date(2022, 1, 1), **kw):
    return GridField(spec, values, kw.pop("variable", "t"), kw.pop("level", "850"), valid_time=date, **kw)
