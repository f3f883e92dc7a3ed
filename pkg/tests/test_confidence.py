import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from colme.confidence import (
    AgentStats, BoundConfig, Fold, Interval, fourth_moment_bound, fourth_moment_coefficient,
    gaussian_bound, intersects, kernel_weight, kurtosis_bound, laplace_bound,
    multifold_decision, multifold_weight, z_quantile,
)
from colme.errors import DomainError

finite = st.floats(-1e6, 1e6)
width = st.floats(0, 1e6)


def test_z_quantiles():
    assert round(z_quantile(0.05), 2) == 1.96
    assert round(z_quantile(0.01), 2) == 2.58
    assert gaussian_bound(0.0, 10, 0.05) == 0.0
    with pytest.raises(DomainError):
        gaussian_bound(1.0, 10, 1.5)


def test_laplace_values():
    # mpmath at 40 digits: 0.10001043282548194885
    assert laplace_bound(1.5, 4265, 0.01) == pytest.approx(0.1000104328254819, rel=1e-12)
    assert laplace_bound(1.0, 1000, 0.01) == pytest.approx(0.1323740718642578, rel=1e-12)
    assert laplace_bound(0.0, 10, 0.01) == 0.0
    assert laplace_bound(1.0, 1e6, 0.01) < laplace_bound(1.0, 1e3, 0.01)
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(DomainError):
            laplace_bound(1.0, 10, bad)


def test_laplace_decreasing_from_two():
    t = np.arange(2, 20000)
    b = np.array([laplace_bound(1.0, x, 0.01) for x in t])
    assert np.all(np.diff(b) < 0)


def test_fourth_moment_coefficient():
    # (2 * 6 / 0.005) ** 0.25 = 2400 ** 0.25
    assert fourth_moment_coefficient(3.0, 0.01) == pytest.approx(6.999271023161166, rel=1e-12)
    assert fourth_moment_bound(2.0, 3.0, 1, 0.01) == pytest.approx(2 * 2400**0.25)
    assert fourth_moment_bound(1.0, 3.0, 1, 0.01, coefficient=8.32) == pytest.approx(8.32)
    with pytest.raises(DomainError):
        fourth_moment_coefficient(0.5, 0.01)


def test_kurtosis_widths():
    assert kurtosis_bound(502, 3.89) == pytest.approx(0.8505568834311973, rel=1e-12)
    assert 2 * kurtosis_bound(741, 3.89) == pytest.approx(1.4001549943121176, rel=1e-12)
    assert kurtosis_bound(400, 3.89) == pytest.approx(kurtosis_bound(100, 3.89) / 2)


@given(st.floats(0.01, 100), st.floats(1, 1e6), st.sampled_from(["gaussian", "laplace", "fourth_moment"]))
def test_bounds_homogeneous_and_nonnegative(sigma, t, kind):
    p = BoundConfig(bound_kind=kind).profile(t)
    assert p >= 0
    fn = {"gaussian": lambda s: gaussian_bound(s, t, 0.01),
          "laplace": lambda s: laplace_bound(s, t, 0.01),
          "fourth_moment": lambda s: fourth_moment_bound(s, 3.0, t, 0.01)}[kind]
    assert fn(sigma) == pytest.approx(sigma * p, rel=1e-12)


def test_bounds_vanish():
    for kind in ("gaussian", "laplace", "fourth_moment"):
        assert BoundConfig(bound_kind=kind).profile(1e20) < 1e-3


def test_interval_examples():
    assert intersects(Interval(0.5, 0.5), Interval(1.25, 0.75))
    assert intersects(Interval(0.5, 0.5), Interval(1.5, 0.5))
    assert not intersects(Interval(0.5, 0.5), Interval(1.5005, 0.4995))
    with pytest.raises(DomainError):
        Interval(0.0, -1.0)
    iv = Interval(1.0, 0.25)
    assert (iv.lower, iv.upper) == (0.75, 1.25)


@given(finite, width, finite, width)
def test_intersects_symmetric_and_reflexive(c1, w1, c2, w2):
    a, b = Interval(c1, w1), Interval(c2, w2)
    assert intersects(a, b) == intersects(b, a)
    assert intersects(a, a)


def test_multifold_examples():
    cfg = BoundConfig()
    s = AgentStats(1.0, 1.5, 3.0)
    assert multifold_decision(s, s, cfg, 100) is None
    far = AgentStats(9.0, 1.5, 3.0)
    assert multifold_decision(s, far, cfg, 100) is Fold.MEAN
    # sigma gap beyond (1.2 + 1.8) * B(t) once t > 416
    a, b = AgentStats(0.9, 1.2), AgentStats(1.1, 1.8)
    assert multifold_decision(a, b, cfg, 400) is None
    assert multifold_decision(a, b, cfg, 420) is Fold.SIGMA


def test_kurtosis_fold_activation():
    cfg = BoundConfig(kurtosis_activation_time=500)
    a, b = AgentStats(1.0, 2.0, 1.0), AgentStats(1.0, 2.0, 2.7)
    assert multifold_decision(a, b, cfg, 499) is None
    assert multifold_decision(a, b, cfg, 600) is Fold.KURTOSIS
    assert multifold_decision(a, b, cfg, 600, folds=("mean", "sigma")) is None


def test_first_failing_fold_is_reported():
    cfg = BoundConfig(kurtosis_activation_time=1)
    a, b = AgentStats(0.0, 1.0, 1.0), AgentStats(5.0, 3.0, 9.0)
    assert multifold_decision(a, b, cfg, 5000) is Fold.MEAN
    assert multifold_decision(a, b, cfg, 5000, folds=("kurtosis", "sigma")) is Fold.SIGMA


@given(finite, st.floats(0, 10), finite, st.floats(0, 10), st.integers(1, 10**6))
def test_mean_only_equals_single_fold(m1, s1, m2, s2, t):
    cfg = BoundConfig()
    a, b = AgentStats(m1, s1), AgentStats(m2, s2)
    single = intersects(Interval(m1, s1 * cfg.profile(t)), Interval(m2, s2 * cfg.profile(t)))
    got = multifold_decision(a, b, cfg, t, folds=("mean",))
    assert (got is None) == single


def test_kernel_weight():
    assert kernel_weight(0.0, 1.0) == 1.0
    assert kernel_weight(0.5, 1.0) == pytest.approx(0.36787944117144233, rel=1e-15)
    with pytest.raises(DomainError):
        kernel_weight(0.1, 0.0)


def test_multifold_weight_is_minimum():
    cfg = BoundConfig(kurtosis_activation_time=1)
    t = 1000
    p = cfg.profile(t)
    a = AgentStats(0.0, 1.0, 3.0)
    b = AgentStats(0.0, 1.0 + p, 3.0 + kurtosis_bound(t, 3.89) * 0.2)
    w_sigma = kernel_weight(p, (2.0 + p) * p)
    w_kurt = kernel_weight(kurtosis_bound(t, 3.89) * 0.2, 2 * kurtosis_bound(t, 3.89))
    w_mean = kernel_weight(0.0, (2.0 + p) * p)
    assert multifold_weight(a, b, cfg, t) == pytest.approx(min(w_mean, w_sigma, w_kurt))


def test_laplace_coverage_on_gaussian_data():
    # |xbar - mu| must exceed the bound in fewer than delta of the trials
    delta, t, sigma = 0.01, 50, 2.0
    x = np.random.default_rng(7).normal(0.0, sigma, (10_000, t))
    miss = np.abs(x.mean(axis=1)) > laplace_bound(sigma, t, delta)
    assert miss.mean() < delta
