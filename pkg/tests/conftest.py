import pytest
from hypothesis import settings

from clusterlb.loads import Thresholds

settings.register_profile("default", max_examples=150, deadline=None)
settings.load_profile("default")


@pytest.fixture
def t5_10():
    return Thresholds(low_max=5, medium_max=10)
