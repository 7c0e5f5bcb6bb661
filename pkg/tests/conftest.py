import numpy as np
import pytest

from geots import kernels
from geots.core import Dataset
from geots.data import random_walk_dataset
from geots.index import IndexConfig, build_index

# Small fanout so a few hundred series already give a three-level tree.
SMALL = IndexConfig(m=4, M=10, k_mbts=3, segments=4, seed=42)

KERNEL_SPACES = [kernels.numpy_kernels]
if kernels.jit_kernels is not None:
    KERNEL_SPACES.append(kernels.jit_kernels)


@pytest.fixture(params=KERNEL_SPACES, ids=lambda k: k.name)
def kern(request, monkeypatch):
    """Run the test once per kernel implementation."""
    monkeypatch.setattr(kernels, "active", request.param)
    return request.param


@pytest.fixture(scope="session")
def walk300():
    return random_walk_dataset(300, n=48, seed=5)


@pytest.fixture(scope="session")
def btsr300(walk300):
    return build_index(walk300, "btsr", SMALL, keep_members=True)


@pytest.fixture(scope="session")
def sbtsr300(walk300):
    return build_index(walk300, "sbtsr", SMALL, keep_members=True)


def tiny_dataset(values, locs=None):
    values = np.asarray(values, dtype=np.float64)
    if locs is None:
        locs = np.stack([np.arange(len(values)), np.zeros(len(values))], axis=1)
    return Dataset(np.arange(len(values)), locs, values)


# Pass/fail lines from the acceptance suite, echoed in the terminal summary.
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
