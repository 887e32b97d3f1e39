import hypothesis
import numpy as np
import pytest

from fastsketch.application import SketchApplication
from fastsketch.config import CliSettings
from fastsketch.hashing import new_hasher

np.seterr(all="warn")

hypothesis.settings.register_profile("default", max_examples=100, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile("default")


@pytest.fixture
def hasher():
    return new_hasher(0x1234_5678_9ABC_DEF0)


@pytest.fixture
def app():
    """Application with built-in defaults, independent of the user's settings file."""
    return SketchApplication(CliSettings())
