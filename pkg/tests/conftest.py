import numpy as np
import pytest
from hypothesis import settings, strategies as st

from charcorr.partitions import Partition

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@st.composite
def partitions(draw, max_len=4, max_part=5):
    parts = draw(st.lists(st.integers(0, max_part), max_size=max_len))
    return Partition(sorted(parts, reverse=True))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
