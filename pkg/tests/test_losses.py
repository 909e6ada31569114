import math

import numpy as np
import pytest

from okgd import losses
from okgd.losses import make_loss

from conftest import all_losses, sample_loss_domain

LOSSES = all_losses()
IDS = [l.family for l in LOSSES]


# -- values and derivatives ---------------------------------------------------


def test_least_squares_value():
    ls = make_loss("least_squares")
    assert losses.value(ls, 1.0, 0.5) == pytest.approx(0.125, abs=1e-15)
    assert losses.derivative(ls, 1.0, 0.5) == pytest.approx(-0.5, abs=1e-15)


def test_logistic_value_and_derivative():
    lg = make_loss("logistic")
    assert losses.value(lg, 1.0, 0.0) == pytest.approx(math.log(2.0), abs=1e-15)
    assert losses.derivative(lg, 1.0, 0.0) == pytest.approx(-0.5, abs=1e-15)


def test_huber_outer_branch():
    hb = make_loss("huber")
    # |y - a| = 3 > 1, so the linear branch |y - a| - 1/2 applies
    assert losses.value(hb, 0.0, 3.0) == pytest.approx(2.5, abs=1e-15)
    assert losses.derivative(hb, 0.0, 3.0) == 1.0


def test_smoothed_hinge_sq_satisfied_margin():
    sh = make_loss("smoothed_hinge_sq")
    assert losses.derivative(sh, 1.0, 2.0) == 0.0
    assert losses.value(sh, 1.0, 2.0) == 0.0


def test_p_absolute_value():
    pa = make_loss("p_absolute", 1.5)
    assert losses.value(pa, 2.0, 0.0) == pytest.approx(2.0**1.5, abs=1e-12)


def test_non_finite_inputs_rejected():
    ls = make_loss("least_squares")
    with pytest.raises(ValueError):
        losses.value(ls, np.inf, 0.0)
    with pytest.raises(ValueError):
        losses.derivative(ls, 0.0, np.nan)


# -- declared constants -------------------------------------------------------


def test_holder_params_table():
    assert losses.holder_params(make_loss("least_squares")) == (1.0, 1.0)
    assert losses.holder_params(make_loss("huber")) == (1.0, 1.0)
    assert losses.holder_params(make_loss("logistic")) == (1.0, 0.25)
    assert losses.holder_params(make_loss("smoothed_hinge_sq")) == (1.0, 2.0)
    # p = 2 hinge coincides with the quadratically smoothed hinge
    assert losses.holder_params(make_loss("p_hinge", 2.0)) == (1.0, 2.0)
    alpha, L = losses.holder_params(make_loss("p_absolute", 1.5))
    assert alpha == pytest.approx(0.5)
    assert L == pytest.approx(1.5 * math.sqrt(2.0), abs=1e-12)


def test_self_bounding_closed_forms():
    # direct substitution into the closed forms, independently recomputed
    def ab(alpha, L):
        A = 2 * alpha ** ((1 - alpha) / (1 + alpha)) * L ** (2 / (1 + alpha)) * (1 + alpha)
        B = alpha ** (-2 * alpha / (1 + alpha)) * L ** (2 / (1 + alpha)) * (1 - alpha**2)
        return A, B

    assert losses.self_bounding_constants(make_loss("least_squares")) == pytest.approx((4.0, 0.0))
    assert losses.self_bounding_constants(make_loss("logistic")) == pytest.approx((1.0, 0.0))
    pa = make_loss("p_absolute", 1.5)
    expected = ab(0.5, 1.5 * math.sqrt(2.0))
    assert losses.self_bounding_constants(pa) == pytest.approx(expected, rel=1e-12)
    assert expected[0] == pytest.approx(2 * 0.5 ** (1 / 3) * pa.holder_L ** (4 / 3) * 1.5)
    assert expected[1] == pytest.approx(0.5 ** (-2 / 3) * pa.holder_L ** (4 / 3) * 0.75)


def test_p_validation():
    with pytest.raises(ValueError):
        make_loss("p_hinge", 1.0)
    with pytest.raises(ValueError):
        make_loss("p_absolute", 2.5)
    with pytest.raises(ValueError):
        make_loss("p_hinge")
    with pytest.raises(ValueError):
        make_loss("least_squares", 1.5)


# -- sampled inequalities -----------------------------------------------------


@pytest.mark.parametrize("loss", LOSSES, ids=IDS)
def test_convexity_midpoint(loss):
    rng = np.random.default_rng(10)
    y, a, b = sample_loss_domain(loss, 10**4, rng)
    mid = losses.value(loss, y, 0.5 * (a + b))
    avg = 0.5 * losses.value(loss, y, a) + 0.5 * losses.value(loss, y, b)
    assert np.min(avg - mid) >= -1e-10


@pytest.mark.parametrize("loss", LOSSES, ids=IDS)
def test_derivative_matches_finite_difference(loss):
    rng = np.random.default_rng(11)
    y, s, _ = sample_loss_domain(loss, 10**4, rng)
    h = 1e-6
    if loss.family == "huber":
        keep = np.abs(np.abs(y - s) - 1.0) > 1e-4
        y, s = y[keep], s[keep]
    elif loss.family in ("smoothed_hinge_sq", "p_hinge"):
        keep = np.abs(1.0 - y * s) > 1e-4
        y, s = y[keep], s[keep]
    elif loss.family == "p_absolute":
        keep = np.abs(y - s) > 1e-2  # fractional powers lose accuracy near the kink
        y, s = y[keep], s[keep]
    fd = (losses.value(loss, y, s + h) - losses.value(loss, y, s - h)) / (2 * h)
    dv = losses.derivative(loss, y, s)
    denom = np.maximum(np.abs(dv), 1.0)
    assert np.max(np.abs(fd - dv) / denom) <= 1e-5


@pytest.mark.parametrize("loss", LOSSES, ids=IDS)
def test_holder_bound_sampled(loss):
    rng = np.random.default_rng(12)
    y, s, s2 = sample_loss_domain(loss, 10**6, rng)
    lhs = np.abs(losses.derivative(loss, y, s) - losses.derivative(loss, y, s2))
    rhs = loss.holder_L * np.abs(s - s2) ** loss.alpha
    assert np.min(rhs - lhs) >= -1e-10


@pytest.mark.parametrize("loss", LOSSES, ids=IDS)
def test_self_bounding_sampled(loss):
    rng = np.random.default_rng(13)
    y, s, _ = sample_loss_domain(loss, 10**6, rng)
    slack = loss.self_A * losses.value(loss, y, s) + loss.self_B - losses.derivative(loss, y, s) ** 2
    assert np.min(slack) >= -1e-10


@pytest.mark.parametrize("loss", LOSSES, ids=IDS)
def test_scalar_smoothness_sandwich(loss):
    rng = np.random.default_rng(14)
    alpha, L = loss.alpha, loss.holder_L
    y, s, s2 = sample_loss_domain(loss, 10**5, rng)
    gap = (
        losses.value(loss, y, s)
        - losses.value(loss, y, s2)
        - (s - s2) * losses.derivative(loss, y, s2)
    )
    upper = L * np.abs(s - s2) ** (1 + alpha) / (1 + alpha)
    dgrad = np.abs(losses.derivative(loss, y, s) - losses.derivative(loss, y, s2))
    lower = alpha * dgrad ** ((1 + alpha) / alpha) / ((1 + alpha) * L ** (1 / alpha))
    assert np.min(upper - gap) >= -1e-9
    assert np.min(gap - lower) >= -1e-9


def test_least_squares_sandwich_upper_is_equality():
    ls = make_loss("least_squares")
    rng = np.random.default_rng(15)
    y, s, s2 = sample_loss_domain(ls, 1000, rng)
    gap = (
        losses.value(ls, y, s)
        - losses.value(ls, y, s2)
        - (s - s2) * losses.derivative(ls, y, s2)
    )
    upper = 0.5 * (s - s2) ** 2
    assert np.max(np.abs(gap - upper)) <= 1e-12
