import math

import numpy as np
import pytest

from okgd import kernels
from okgd.kernels import KernelSpec

GAUSSIAN = KernelSpec("gaussian", bandwidth=1.0)
LINEAR = KernelSpec("linear")
POLY = KernelSpec("polynomial", degree=2, offset=1.0)
ALL = (GAUSSIAN, KernelSpec("gaussian", bandwidth=0.3), LINEAR, POLY)


def test_gaussian_self_similarity_is_exact():
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = rng.normal(size=3)
        assert kernels.evaluate(GAUSSIAN, x, x) == 1.0


def test_linear_dot_product():
    assert kernels.evaluate(LINEAR, [1.0, 2.0], [3.0, 4.0]) == 11.0


def test_gaussian_closed_form():
    # exp(-|0 - 2|^2 / 2) computed independently
    expected = math.exp(-2.0)
    assert kernels.evaluate(GAUSSIAN, [0.0], [2.0]) == pytest.approx(expected, abs=1e-15)


def test_polynomial_closed_form():
    assert kernels.evaluate(POLY, [1.0, 0.0], [1.0, 0.0]) == (1.0 + 1.0) ** 2


def test_dimension_mismatch_raises():
    with pytest.raises(ValueError):
        kernels.evaluate(GAUSSIAN, [1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        kernels.cross_gram(GAUSSIAN, np.zeros((2, 1)), np.zeros((2, 2)))


@pytest.mark.parametrize("kernel", ALL, ids=lambda k: k.family + str(k.bandwidth))
def test_symmetry(kernel):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(10**4, 2))
    Y = rng.normal(size=(10**4, 2))
    for x, y in zip(X[:200], Y[:200]):
        assert abs(kernels.evaluate(kernel, x, y) - kernels.evaluate(kernel, y, x)) <= 1e-12
    # vectorized check over the full sample
    a = np.array([kernels.evaluate(kernel, x, y) for x, y in zip(X[::50], Y[::50])])
    b = np.array([kernels.evaluate(kernel, y, x) for x, y in zip(X[::50], Y[::50])])
    assert np.max(np.abs(a - b)) <= 1e-12


@pytest.mark.parametrize("kernel", ALL, ids=lambda k: k.family + str(k.bandwidth))
def test_gram_psd_and_symmetric(kernel):
    rng = np.random.default_rng(2)
    for trial in range(100):
        n = int(rng.integers(1, 51))
        pts = rng.normal(size=(n, 2))
        G = kernels.gram(kernel, pts)
        assert np.array_equal(G, G.T)
        min_eig = np.linalg.eigvalsh(G)[0]
        assert min_eig >= -1e-8 * np.trace(G)


def test_gram_single_and_identical_points():
    assert np.allclose(kernels.gram(GAUSSIAN, [[0.5]]), [[1.0]])
    G = kernels.gram(GAUSSIAN, [[0.5], [0.5]])
    assert np.allclose(G, [[1.0, 1.0], [1.0, 1.0]])


def test_gram_random_psd_eigendecomposition_oracle():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(10, 3))
    G = kernels.gram(KernelSpec("gaussian", bandwidth=0.7), pts)
    eigs = np.linalg.eigvalsh(G)
    assert eigs[0] >= -1e-8 * np.trace(G)


def test_gram_requires_points():
    with pytest.raises(ValueError):
        kernels.gram(GAUSSIAN, np.zeros((0, 1)))


def test_kappa_gaussian_is_one_with_any_support():
    assert kernels.kappa_bound(GAUSSIAN) == 1.0
    assert kernels.kappa_bound(GAUSSIAN, [[3.0, 4.0]]) == 1.0


def test_kappa_linear():
    assert kernels.kappa_bound(LINEAR, [[3.0, 4.0]]) == 5.0


def test_kappa_polynomial_derived():
    # max over {(1,0), (0,2)} of (|x|^2 + 1)^2 is 25, then sqrt
    support = [[1.0, 0.0], [0.0, 2.0]]
    expected = math.sqrt(max((1.0 + 1.0) ** 2, (4.0 + 1.0) ** 2))
    assert kernels.kappa_bound(POLY, support) == pytest.approx(expected, abs=1e-12)
    assert expected == 5.0


def test_kappa_empty_support_non_gaussian_raises():
    with pytest.raises(ValueError):
        kernels.kappa_bound(LINEAR, [])
    with pytest.raises(ValueError):
        kernels.kappa_bound(LINEAR)


@pytest.mark.parametrize("kernel", ALL, ids=lambda k: k.family + str(k.bandwidth))
def test_kappa_dominates_diagonal(kernel):
    rng = np.random.default_rng(4)
    support = rng.normal(size=(25, 2))
    kap = kernels.kappa_bound(kernel, support)
    for x in support:
        assert kernels.evaluate(kernel, x, x) <= kap**2 * (1 + 1e-12)


def test_invalid_specs_rejected():
    with pytest.raises(ValueError):
        KernelSpec("gaussian", bandwidth=0.0)
    with pytest.raises(ValueError):
        KernelSpec("polynomial", degree=0)
    with pytest.raises(ValueError):
        KernelSpec("polynomial", degree=2, offset=-1.0)
    with pytest.raises(ValueError):
        KernelSpec("cauchy")
