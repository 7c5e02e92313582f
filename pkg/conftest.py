import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: oráculos de ida e volta e equivalência (demorados)")


@pytest.fixture
def exact():
    from exact_algebra import get_backend
    return get_backend('exact')


@pytest.fixture
def floating():
    from exact_algebra import get_backend
    return get_backend('float', 256)
