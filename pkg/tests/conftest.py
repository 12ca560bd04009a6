import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


class FakeRng:
    """Feeds predetermined draws to code expecting a numpy Generator."""

    def __init__(self, random_values=(), integer_values=()):
        self._random = list(random_values)
        self._integers = list(integer_values)

    def random(self, size=None):
        out = np.asarray(self._random.pop(0), dtype=np.float64)
        assert size is None or out.size == size
        return out

    def integers(self, *args, **kwargs):
        return self._integers.pop(0)


@pytest.fixture
def fake_rng_factory():
    return FakeRng
