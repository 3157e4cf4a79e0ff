import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from projcoreset.coreset import Coreset

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# every Coreset built during the session, re-checked by the structural criterion
EMITTED: list[tuple[np.ndarray, np.ndarray, int]] = []
ACCEPTANCE_LINES: list[str] = []

_original_post_init = Coreset.__post_init__


def _recording_post_init(self):
    _original_post_init(self)
    EMITTED.append((self.indices, self.weights, self.n_source))


Coreset.__post_init__ = _recording_post_init


def pytest_collection_modifyitems(session, config, items):
    # the structural sweep must see the coresets of every other test
    last = [it for it in items if "structural" in it.name]
    rest = [it for it in items if "structural" not in it.name]
    items[:] = rest + last


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
