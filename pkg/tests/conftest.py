from importlib import resources

import pytest

from orchsess.surface import parse_module

_results = {}


def load_corpus(name, sort="proc"):
    text = resources.files("orchsess").joinpath("corpus", name).read_text(encoding="utf-8")
    return parse_module(text, name, sort)


@pytest.fixture
def corpus():
    return load_corpus


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    n = m.args[0]
    if rep.when == "call" or rep.failed:
        ok = rep.passed and _results.get(n, True)
        _results[n] = ok


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if _results[n] else 'FAIL'}")
