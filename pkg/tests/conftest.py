import numpy as np
import pytest

_ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if not item.name.startswith("test_ac") or rep.when not in ("setup", "call"):
        return
    doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
    if rep.failed or (rep.when == "call" and item.name not in _ACCEPTANCE):
        _ACCEPTANCE[item.name] = ("PASS" if rep.passed else "FAIL", doc, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda n: int(n.split("_")[1][2:])):
        status, doc, dt = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{status}  {doc}  ({dt:.2f}s)")
