import pytest

from blockqd.moments import DiscreteMeasure, MomentTable
from blockqd.problem import load_example


@pytest.fixture(scope="session")
def example1():
    return load_example("example1")


@pytest.fixture(scope="session")
def example2():
    return load_example("example2")


@pytest.fixture
def two_node_table():
    """p = 1, theta = 1, nodes {1, 2}, unit weights."""
    return MomentTable(DiscreteMeasure([1.0, 2.0], [1.0, 1.0]), 1)
