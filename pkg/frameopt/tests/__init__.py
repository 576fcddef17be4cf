import os

import pytest


@pytest.fixture(autouse=True)
def config(request):
    from frameopt.config import _config

    orig = _config.copy()
    orig_initialized = _config.initialized
    _config.clear()
    _config.initialized = False

    def reset():
        _config.clear()
        _config.update(orig)
        _config.initialized = orig_initialized

    request.addfinalizer(reset)
    return _config


def pytest_configure(config):
    # Don't allow accidental FRAMEOPT_CONFIGs to leak into tests:
    os.environ.pop('FRAMEOPT_CONFIG', None)
    os.environ.pop('FRAMEOPT_THREADS', None)


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", help="run slow tests")


def pytest_runtest_setup(item):
    if 'slow' in item.keywords and not item.config.getoption("--runslow"):
        pytest.skip("need --runslow option to run")
