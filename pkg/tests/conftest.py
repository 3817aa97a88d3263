import os

import hypothesis
import pytest

from core.worker.model import CharVocabulary

from helpers import tiny_instances

hypothesis.settings.register_profile("fast", max_examples=5)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow desk-scale tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: desk-scale training runs, enabled with --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def vocab():
    return CharVocabulary()


@pytest.fixture
def instance():
    return tiny_instances()[0]
