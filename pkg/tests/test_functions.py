import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from okgd import functions, kernels
from okgd.functions import (
    RkhsFunction,
    distance_sq,
    evaluate,
    finalize_average,
    fold_scale,
    inner,
    new_average,
    push_average,
    rkhs_norm_sq,
    scale_then_append,
    unit,
    values,
    zero,
)
from okgd.kernels import KernelSpec

KERNEL = KernelSpec("gaussian", bandwidth=0.6)


def random_fn(rng, n, kernel=KERNEL, dim=2):
    pts = rng.normal(size=(n, dim))
    coeffs = rng.normal(size=n)
    scale = float(rng.uniform(0.5, 2.0))
    return RkhsFunction(kernel, pts, coeffs, scale)


def brute_norm_sq(f):
    total = 0.0
    for i in range(len(f)):
        for j in range(len(f)):
            total += f.coeffs[i] * f.coeffs[j] * kernels.evaluate(f.kernel, f.points[i], f.points[j])
    return f.scale**2 * total


# -- evaluation ---------------------------------------------------------------


def test_unit_expansion_at_own_point():
    f = unit(KERNEL, [0.3, -0.2])
    assert evaluate(f, [0.3, -0.2]) == 1.0


def test_empty_expansion_is_zero():
    assert evaluate(zero(KERNEL), [5.0]) == 0.0
    assert rkhs_norm_sq(zero(KERNEL)) == 0.0


def test_evaluate_brute_force():
    x0, x1, x = np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([0.4, 0.2])
    f = RkhsFunction(KERNEL, np.stack([x0, x1]), np.array([0.1, -0.2]), 1.0)
    expected = 0.1 * kernels.evaluate(KERNEL, x0, x) - 0.2 * kernels.evaluate(KERNEL, x1, x)
    assert evaluate(f, x) == pytest.approx(expected, abs=1e-15)


def test_evaluate_dimension_mismatch():
    f = unit(KERNEL, [0.0, 0.0])
    with pytest.raises(ValueError):
        evaluate(f, [1.0])


# -- incremental construction ---------------------------------------------------


def test_first_append_shape():
    f = scale_then_append(zero(KERNEL), 1.0, 0.1, [0.5, 0.5])
    assert len(f) == 1
    assert evaluate(f, [0.5, 0.5]) == pytest.approx(0.1)


def test_append_with_zero_coefficient_is_identity():
    rng = np.random.default_rng(0)
    f = random_fn(rng, 5)
    g = scale_then_append(f, 1.0, 0.0, rng.normal(size=2))
    for _ in range(100):
        x = rng.normal(size=2)
        assert abs(evaluate(g, x) - evaluate(f, x)) <= 1e-12


def test_two_appends_match_direct_construction():
    rng = np.random.default_rng(1)
    x0, x1 = rng.normal(size=2), rng.normal(size=2)
    f = scale_then_append(zero(KERNEL), 1.0, 0.3, x0)
    f = scale_then_append(f, 1.0, -0.7, x1)
    direct = RkhsFunction(KERNEL, np.stack([x0, x1]), np.array([0.3, -0.7]), 1.0)
    for _ in range(50):
        x = rng.normal(size=2)
        assert abs(evaluate(f, x) - evaluate(direct, x)) <= 1e-12


def test_scale_zero_clears_expansion():
    rng = np.random.default_rng(2)
    f = random_fn(rng, 4)
    g = scale_then_append(f, 0.0, 0.5, [0.0, 0.0])
    assert len(g) == 1
    assert evaluate(g, [0.0, 0.0]) == pytest.approx(0.5)


def test_scale_folding_is_observationally_invisible():
    rng = np.random.default_rng(3)
    f = random_fn(rng, 6)
    folded = fold_scale(f)
    assert folded.scale == 1.0
    for _ in range(20):
        x = rng.normal(size=2)
        assert abs(evaluate(f, x) - evaluate(folded, x)) <= 1e-10
    assert abs(rkhs_norm_sq(f) - rkhs_norm_sq(folded)) <= 1e-10 * (1 + rkhs_norm_sq(f))


def test_tiny_scale_triggers_fold():
    f = unit(KERNEL, [0.0, 0.0])
    for _ in range(40):
        f = scale_then_append(f, 1e-4, 1.0, [0.0, 0.0])
    assert 1e-100 < abs(f.scale) < 1e100
    assert np.isfinite(f.coeffs).all()


# -- norms, inner products, distances ----------------------------------------


def test_norm_of_single_atom():
    f = RkhsFunction(KERNEL, np.array([[0.1, 0.2]]), np.array([0.1]), 1.0)
    assert rkhs_norm_sq(f) == pytest.approx(0.01, abs=1e-15)


def test_norm_matches_double_loop_oracle():
    rng = np.random.default_rng(4)
    f = random_fn(rng, 5)
    assert rkhs_norm_sq(f) == pytest.approx(brute_norm_sq(f), abs=1e-10)


def test_inner_reproducing_property():
    rng = np.random.default_rng(5)
    x, x2 = rng.normal(size=2), rng.normal(size=2)
    assert inner(unit(KERNEL, x), unit(KERNEL, x2)) == pytest.approx(
        kernels.evaluate(KERNEL, x, x2), abs=1e-14
    )


def test_inner_with_empty_is_zero():
    rng = np.random.default_rng(6)
    f = random_fn(rng, 3)
    assert inner(f, zero(KERNEL)) == 0.0


def test_inner_symmetry_and_consistency():
    rng = np.random.default_rng(7)
    for _ in range(20):
        f, g = random_fn(rng, 4), random_fn(rng, 6)
        assert abs(inner(f, g) - inner(g, f)) <= 1e-12
    f = random_fn(rng, 5)
    assert inner(f, f) == pytest.approx(rkhs_norm_sq(f), rel=1e-12)


def test_inner_kernel_mismatch():
    other = KernelSpec("gaussian", bandwidth=1.0)
    with pytest.raises(ValueError):
        inner(unit(KERNEL, [0.0]), unit(other, [0.0]))


def test_reproducing_identity_inner_vs_evaluate():
    rng = np.random.default_rng(8)
    f = random_fn(rng, 6)
    for _ in range(20):
        x = rng.normal(size=2)
        assert abs(inner(f, unit(KERNEL, x)) - evaluate(f, x)) <= 1e-8


def test_distance_sq_cases():
    rng = np.random.default_rng(9)
    f = random_fn(rng, 4)
    assert distance_sq(f, f) <= 1e-10
    x = rng.normal(size=2)
    g = unit(KERNEL, x)
    assert distance_sq(g, zero(KERNEL)) == pytest.approx(kernels.evaluate(KERNEL, x, x))


def test_distance_matches_difference_expansion():
    rng = np.random.default_rng(10)
    f, g = random_fn(rng, 4), random_fn(rng, 3)
    diff = RkhsFunction(
        KERNEL,
        np.vstack([f.points, g.points]),
        np.concatenate([f.scale * f.coeffs, -g.scale * g.coeffs]),
        1.0,
    )
    assert distance_sq(f, g) == pytest.approx(rkhs_norm_sq(diff), abs=1e-10)


@settings(max_examples=50, deadline=None, derandomize=True)
@given(st.integers(0, 2**32 - 1))
def test_cauchy_schwarz(seed):
    rng = np.random.default_rng(seed)
    f, g = random_fn(rng, 3), random_fn(rng, 4)
    assert inner(f, g) ** 2 <= rkhs_norm_sq(f) * rkhs_norm_sq(g) * (1 + 1e-10) + 1e-12


def test_sup_norm_domination():
    rng = np.random.default_rng(11)
    f = random_fn(rng, 6)
    bound = np.sqrt(rkhs_norm_sq(f))  # gaussian kernel: kappa = 1
    for _ in range(50):
        x = rng.normal(size=2)
        assert abs(evaluate(f, x)) <= bound * (1 + 1e-8)


# -- running averages ----------------------------------------------------------


def test_single_push_average_equals_function():
    rng = np.random.default_rng(12)
    f = random_fn(rng, 4)
    avg = push_average(new_average("uniform"), f)
    out = finalize_average(avg)
    for _ in range(20):
        x = rng.normal(size=2)
        assert abs(evaluate(out, x) - evaluate(f, x)) <= 1e-12


def test_weighted_equal_weights_match_uniform():
    rng = np.random.default_rng(13)
    fs = [random_fn(rng, n) for n in (2, 3, 5)]
    uni, wei = new_average("uniform"), new_average("weighted")
    for f in fs:
        uni = push_average(uni, f)
        wei = push_average(wei, f, 0.7)
    u, w = finalize_average(uni), finalize_average(wei)
    for _ in range(100):
        x = rng.normal(size=2)
        assert abs(evaluate(u, x) - evaluate(w, x)) <= 1e-12


def test_weighted_average_brute_force():
    rng = np.random.default_rng(14)
    fs = [random_fn(rng, n) for n in (3, 4, 2)]
    weights = [0.5, 0.3, 0.2]
    avg = new_average("weighted")
    for f, w in zip(fs, weights):
        avg = push_average(avg, f, w)
    out = finalize_average(avg)
    for _ in range(30):
        x = rng.normal(size=2)
        expected = sum(w * evaluate(f, x) for f, w in zip(fs, weights)) / sum(weights)
        assert abs(evaluate(out, x) - expected) <= 1e-10


def test_prefix_sharing_path():
    # trajectory-style iterates share support prefixes
    rng = np.random.default_rng(15)
    f1 = zero(KERNEL)
    f2 = scale_then_append(f1, 1.0, 0.4, rng.normal(size=2))
    f3 = scale_then_append(f2, 1.0, -0.2, rng.normal(size=2))
    avg = new_average("uniform")
    for f in (f1, f2, f3):
        avg = push_average(avg, f)
    out = finalize_average(avg)
    assert len(out) == 2  # merged support, not concatenated
    for _ in range(20):
        x = rng.normal(size=2)
        expected = (evaluate(f1, x) + evaluate(f2, x) + evaluate(f3, x)) / 3.0
        assert abs(evaluate(out, x) - expected) <= 1e-12


def test_finalize_without_pushes_raises():
    with pytest.raises(RuntimeError):
        finalize_average(new_average("uniform"))


def test_weighted_push_requires_positive_weight():
    with pytest.raises(ValueError):
        push_average(new_average("weighted"), unit(KERNEL, [0.0]), 0.0)


def test_values_batch_matches_pointwise():
    rng = np.random.default_rng(16)
    f = random_fn(rng, 5)
    X = rng.normal(size=(7, 2))
    batch = values(f, X)
    for i, x in enumerate(X):
        assert batch[i] == pytest.approx(evaluate(f, x), abs=1e-12)
