import pytest

from stlinfer.datasets import DrivingBehavior, gen_driving_pair, gen_naval


@pytest.fixture(scope="session")
def tiny_driving_pair():
    """30/class GoForward-vs-Overtake set shared by the fast tests."""
    return gen_driving_pair(DrivingBehavior.GO_FORWARD, DrivingBehavior.OVERTAKE, 30, seed=0)


@pytest.fixture(scope="session")
def tiny_naval():
    return gen_naval(60, seed=0)
