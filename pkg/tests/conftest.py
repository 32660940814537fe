import numpy as np
import pytest
from hypothesis import settings

from ssmm.iosim import IoConfig, SimDisk

settings.register_profile("ssmm", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("ssmm")


def make_disk(M=4096, B=64):
    return SimDisk(IoConfig(M, B))


@pytest.fixture
def disk():
    return make_disk()


def as_set(d):
    return set(d.items())


def dense_of(m):
    out = np.zeros((m.U, m.U), dtype=np.int64)
    r = m.peek()
    out[r.i, r.j] = r.v
    return out
