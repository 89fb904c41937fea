import pytest
from hypothesis import settings

from nhms_memory.experiments import build_scenario, run_scenario

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def _criterion_key(line):
    cid = line.split(":")[0].split()[-1]
    digits = "".join(c for c in cid if c.isdigit())
    return int(digits or 0), cid


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE, key=_criterion_key):
        terminalreporter.write_line(line)


class _Cache:
    def __init__(self):
        self._store = {}

    def __call__(self, name, **kw):
        key = (name, tuple(sorted(kw.items())))
        if key not in self._store:
            self._store[key] = run_scenario(build_scenario(name, **kw))
        return self._store[key]


@pytest.fixture(scope="session")
def scenario_results():
    """Memoized run_scenario(build_scenario(name, **kw))."""
    return _Cache()


@pytest.fixture(scope="session")
def fig2a(scenario_results):
    return scenario_results("fig2a")


@pytest.fixture(scope="session")
def fig2a_nodecay(scenario_results):
    return scenario_results("fig2a", decay=False)


@pytest.fixture(scope="session")
def fig6(scenario_results):
    return scenario_results("fig6")
