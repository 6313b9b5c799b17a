import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from setclash.core import Gauge, ProductNorm, dual_product_norm_eval, gauge_eval_suite, product_norm_eval
from setclash.errors import DimensionError, DomainError, ValidationError


def test_product_norm_max_of_norms():
    assert product_norm_eval(ProductNorm(1, 1, 2), [(3, 0), (0, 4)]) == 4


def test_product_norm_weighted():
    assert product_norm_eval(ProductNorm(2, 1, 2), [(2, 0), (0, 1)]) == 1


def test_product_norm_zero():
    assert product_norm_eval(ProductNorm(0.3, 7, 3), np.zeros((3, 2))) == 0


def test_dual_norm_examples():
    assert dual_product_norm_eval(ProductNorm(1, 1, 2), [(1, 0), (0, 1)]) == 2
    assert dual_product_norm_eval(ProductNorm(3, 2, 2), [(1, 0), (0, 1)]) == 5
    assert dual_product_norm_eval(ProductNorm(3, 2, 2), np.zeros((2, 3))) == 0


@pytest.mark.parametrize("bad", [[(1, 0)], [(1, 0), (0, 1), (1, 1)], [(1, 0), (0, 1, 2)]])
def test_product_norm_dimension_errors(bad):
    with pytest.raises(DimensionError):
        product_norm_eval(ProductNorm(1, 1, 2), bad)


def test_product_norm_rejects_bad_parameters():
    with pytest.raises(ValidationError):
        ProductNorm(0, 1, 2)
    with pytest.raises(ValidationError):
        ProductNorm(1, 1, 1)


def test_gauge_suite_examples():
    v, d, inv = gauge_eval_suite(Gauge.holder(2, 1), 3)
    assert (v, d) == (9, 6) and inv == pytest.approx(math.sqrt(3), abs=1e-15)
    assert gauge_eval_suite(Gauge.identity(), 0.7) == (0.7, 1, 0.7)
    assert gauge_eval_suite(Gauge.holder(1, 2), 4) == (2, 0.5, 8)


def test_gauge_domain_error():
    with pytest.raises(DomainError):
        Gauge.identity().value(-1)


def test_holder_derivative_at_zero():
    assert Gauge.holder(0.5).derivative(0) == math.inf
    assert Gauge.holder(2).derivative(0) == 0


def test_custom_gauge_validation():
    with pytest.raises(ValidationError):
        Gauge.custom(lambda t: math.sin(t), lambda t: math.cos(t))
    g = Gauge.custom(lambda t: t + t**3, lambda t: 1 + 3 * t**2)
    assert g.inverse(g.value(1.7)) == pytest.approx(1.7, abs=1e-9)


def test_gauge_round_trip_grid():
    ts = np.concatenate([[0.0], np.logspace(-6, 3, 400)])
    for g in (Gauge.identity(), Gauge.holder(0.5, 2), Gauge.holder(3, 0.5)):
        back = np.array([g.inverse(g.value(t)) for t in ts])
        assert np.max(np.abs(back - ts) / np.maximum(1, ts)) < 1e-9


def test_holder_derivative_matches_central_difference():
    for q in (0.5, 1.5, 2, 3):
        g = Gauge.holder(q, 1.3)
        for t in np.logspace(-1, 2, 40):
            h = 1e-6 * t
            fd = (g.value(t + h) - g.value(t - h)) / (2 * h)
            assert abs(fd - g.derivative(t)) <= 1e-6 * abs(g.derivative(t))


def test_gauge_dict_round_trip():
    g = Gauge.holder(2.5, 0.7)
    assert Gauge.from_dict(g.to_dict()) == g


vec2 = st.lists(st.floats(-100, 100), min_size=2, max_size=2)
tuples = st.lists(vec2, min_size=3, max_size=3)
pos = st.floats(0.01, 100)


@settings(max_examples=150, deadline=None)
@given(tuples, tuples, pos, pos, st.floats(-10, 10))
def test_product_norm_triangle_and_homogeneity(u, w, lam, eta, c):
    N = ProductNorm(lam, eta, 3)
    u, w = np.array(u), np.array(w)
    assert N(u + w) <= N(u) + N(w) + 1e-12 * (1 + N(u) + N(w))
    assert abs(N(c * u) - abs(c) * N(u)) <= 1e-12 * (1 + abs(c) * N(u))


@settings(max_examples=150, deadline=None)
@given(tuples, tuples, pos, pos)
def test_duality_pairing(u, x, lam, eta):
    N = ProductNorm(lam, eta, 3)
    u, x = np.array(u), np.array(x)
    assert np.sum(u * x) <= N(u) * N.dual(x) + 1e-9 * (1 + N(u) * N.dual(x))
