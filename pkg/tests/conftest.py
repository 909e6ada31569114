import numpy as np
import pytest

from okgd import kernels, losses
from okgd.distributions import classification_distribution, regression_distribution


def all_losses():
    out = []
    for family in losses.FAMILIES:
        p = 1.5 if family in ("p_hinge", "p_absolute") else None
        out.append(losses.make_loss(family, p))
    return out


def sample_loss_domain(loss, n, rng):
    """(y, s, s2) over the documented validation domain of each family."""
    if loss.is_classification:
        y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    else:
        y = rng.uniform(-2.0, 2.0, n)
    return y, rng.uniform(-10.0, 10.0, n), rng.uniform(-10.0, 10.0, n)


@pytest.fixture(scope="session")
def gaussian_kernel():
    return kernels.KernelSpec("gaussian", bandwidth=0.5)


@pytest.fixture(scope="session")
def tiny_regression():
    """Well-separated 4-point regression task with noiseless targets in the span."""
    support = np.array([[-1.0], [-0.25], [0.4], [1.0]])
    kernel = kernels.KernelSpec("gaussian", bandwidth=0.5)
    G = kernels.gram(kernel, support)
    targets = G @ np.array([1.0, -0.5, 0.25, 0.4])
    dist = regression_distribution(support, np.full(4, 0.25), targets, noise=0.0)
    return dist, kernel


@pytest.fixture(scope="session")
def tiny_classification():
    support = np.array([[-0.9], [-0.1], [0.55], [0.95]])
    kernel = kernels.KernelSpec("gaussian", bandwidth=0.5)
    p_plus = np.array([0.15, 0.4, 0.65, 0.9])
    dist = classification_distribution(support, np.array([0.3, 0.2, 0.25, 0.25]), p_plus)
    return dist, kernel
