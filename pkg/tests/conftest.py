import pytest

from treeshift import ProblemInstance
from treeshift.fixtures import firefighter_forest, firefighter_table


@pytest.fixture
def firefighter():
    return firefighter_forest(), firefighter_table()


@pytest.fixture
def firefighter_instance():
    # individual who failed the first attempt (S < 0.7, A < 0.8)
    return ProblemInstance(x0=(0.5, 0.5), target_class=1, eta=1, E=1)
