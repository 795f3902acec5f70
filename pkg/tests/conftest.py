import pytest

from tierkreis import examples
from tierkreis.builtins import builtin_index
from tierkreis.mocknodes import mock_index


@pytest.fixture(scope="session")
def builtins():
    return builtin_index()


@pytest.fixture(scope="session")
def mocks():
    return mock_index()


@pytest.fixture(scope="session")
def fig1a():
    return examples.zexp_to_parity()


@pytest.fixture(scope="session")
def fig1b():
    return examples.initial_graph()
