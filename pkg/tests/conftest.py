import numpy as np
import pytest

from selbias.kernels import KernelSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_kernel():
    return KernelSpec(1.0)


def gaussian_scalar(x, x2, bandwidth):
    """Plain-loop Gaussian kernel, used as an oracle."""
    acc = 0.0
    for a, b in zip(x, x2):
        acc += (a - b) * (a - b)
    return float(np.exp(-acc / (2.0 * bandwidth * bandwidth)))
