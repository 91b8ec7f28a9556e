import logging

import pytest

logging.getLogger("numexpr").setLevel(logging.WARNING)


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true")


def pytest_collection_modifyitems(config, items):
    if config.getoption("run_slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
