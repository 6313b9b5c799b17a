import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from setclash.conditions import (
    Collection,
    asymmetric_reduce,
    check_nonintersection,
    dual_certificate,
    holder_certificate,
    holder_factor,
    index_details,
    nonintersect_index,
    primal_certificate,
    stationarity_probe,
    verify_certificate,
)
from setclash.core import Gauge
from setclash.errors import PreconditionError, UnsupportedMethodError, ValidationError
from setclash.sets import AbsEpigraph, AffineSubspace, Ball, FinitePointSet, Halfspace


def ball_gap(c1, r1, c2, r2):
    return max(np.linalg.norm(np.subtract(c1, c2)) - r1 - r2, 0.0)


# ---------------------------------------------------------------------------
# index


def test_index_two_balls_exact_and_grid():
    sets = [Ball([0, 0], 1), Ball([3, 0], 1)]
    oracle = ball_gap([0, 0], 1, [3, 0], 1)
    assert nonintersect_index(sets, "exact2") == pytest.approx(oracle, abs=1e-9)
    assert abs(nonintersect_index(sets, "grid", h=0.01) - nonintersect_index(sets, "exact2")) <= 0.02


def test_index_common_point_is_zero():
    assert nonintersect_index([Ball([0, 0], 1), Halfspace([1, 0], -0.5)]) == 0


def test_index_example_pair():
    # d({v <= 0}, {v >= |u| + 1}) = 1
    assert nonintersect_index([Halfspace([0, 1], 0), AbsEpigraph(1)]) == pytest.approx(1, abs=1e-12)


def test_index_exact2_unsupported():
    with pytest.raises(UnsupportedMethodError):
        nonintersect_index([FinitePointSet([[0, 0], [1, 0]]), Ball([3, 0], 1)], "exact2")
    with pytest.raises(UnsupportedMethodError):
        nonintersect_index([Ball([0, 0], 1)] * 3, "exact2")


def test_index_grid_needs_bounded_last_set():
    with pytest.raises(UnsupportedMethodError):
        nonintersect_index([Ball([0, 0], 1), Halfspace([1, 0], 0)], "grid")


def test_index_cyclic_is_upper_bound():
    sets = [Ball([0, 0], 1), Ball([0, 4], 1), Ball([3, 2], 0.5)]
    g = nonintersect_index(sets, "grid", h=0.01)
    c = index_details(sets, "cyclic", budget=3000)
    assert c.kind == "upper"
    assert c.value >= g - 0.01 * math.sqrt(2) - 1e-12
    assert c.value == pytest.approx(g, abs=0.05)


def test_index_three_sets_grid_vs_formula():
    # two balls against a point: inf_u max(d(u, B1), d(u, B2)) with u fixed
    sets = [Ball([0, 0], 1), Ball([4, 0], 1), FinitePointSet([[2, 1]])]
    u = np.array([2, 1])
    oracle = max(np.linalg.norm(u) - 1, np.linalg.norm(u - [4, 0]) - 1)
    assert nonintersect_index(sets, "grid", h=0.01) == pytest.approx(oracle, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 2), st.floats(0.0, 1.0), st.floats(-np.pi, np.pi), st.floats(2.5, 5))
def test_index_monotone_under_enlargement(r, grow, ang, dist):
    c2 = dist * np.array([np.cos(ang), np.sin(ang)])
    small = nonintersect_index([Ball([0, 0], r), Ball(c2, 1)])
    big = nonintersect_index([Ball([0, 0], r + grow), Ball(c2, 1)])
    assert big <= small + 1e-9


# ---------------------------------------------------------------------------
# grid non-intersection


def test_check_disjoint_balls():
    assert check_nonintersection(Collection([Ball([0, 0], 1), Ball([3, 0], 1)]), h=0.1).status == "certified-disjoint"


def test_check_identical_balls_witness_is_center():
    res = check_nonintersection(Collection([Ball([1, 1], 1), Ball([1, 1], 1)]), h=0.1)
    assert res.status == "intersection-witness" and np.allclose(res.point, [1, 1])


def test_check_resolution_bound():
    res = check_nonintersection(Collection([Ball([0, 0], 1), Ball([2.05, 0], 1)]), h=0.1)
    assert res.status == "inconclusive"


def test_check_needs_region_for_unbounded():
    with pytest.raises(PreconditionError):
        check_nonintersection(Collection([Halfspace([0, 1], 0), Halfspace([0, -1], -1)]))
    res = check_nonintersection(Collection([Halfspace([0, 1], 0), Halfspace([0, -1], -1)]), region=([0, 0], 3))
    assert res.status == "certified-disjoint"


def test_check_rejects_bad_step():
    with pytest.raises(ValidationError):
        check_nonintersection(Collection([Ball([0, 0], 1), Ball([3, 0], 1)]), h=0)


def test_check_uses_shifts():
    coll = Collection([Ball([0, 0], 1), Ball([0, 0], 1)], [[3, 0]])
    assert check_nonintersection(coll, h=0.1).status == "certified-disjoint"


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31))
def test_symmetric_and_asymmetric_forms_agree(seed):
    rng = np.random.default_rng(seed)
    sets = [Ball(rng.normal(size=2), rng.uniform(0.5, 1.5)) for _ in range(3)]
    a = rng.normal(size=(3, 2))
    sym = check_nonintersection(Collection(sets, a), h=0.1)
    asym = check_nonintersection(Collection(sets, asymmetric_reduce(a)), h=0.1)
    assert sym.status == asym.status


def test_asymmetric_reduce_examples():
    out = asymmetric_reduce([[1, 0], [0, 1], [0, 0]])
    assert np.array_equal(out, [[1, 0], [0, 1]])
    assert np.array_equal(asymmetric_reduce([[1, 0], [2, 0]]), [[-1, 0]])
    assert np.array_equal(asymmetric_reduce([[0, 0]], [[0, 0], [3, 0]]), [[-3, 0]])


def test_collection_validation():
    with pytest.raises(ValidationError):
        Collection([Ball([0, 0], 1)])
    with pytest.raises(ValidationError):
        Collection([Ball([0, 0], 1), Ball([3, 0], 1)], common_point=[0, 0])


def test_collection_round_trip():
    c = Collection([Ball([0, 0], 1), Halfspace([0, 1], 0)], [[1, 0]], [0, 0])
    assert Collection.from_dict(c.to_dict()).to_dict() == c.to_dict()


# ---------------------------------------------------------------------------
# primal certificates


def unit_balls_shifted(a):
    return Collection([Ball([0, 0], 1), Ball([0, 0], 1)], [a], [0, 0])


def test_primal_ball_pair_identity():
    coll = unit_balls_shifted([3, 0])
    eps = 1.2 * (3 - 1)
    cert = primal_certificate(coll, Gauge.identity(), eps, 2, 2, seed=1)
    assert cert.passed and not cert.partial
    assert 0 < cert.gap <= 3
    assert set(cert.checks) >= {"T12-2", "T12-3.lower", "T12-3.upper", "T12-5"}


def test_primal_holder_slope_factor():
    coll = unit_balls_shifted([3, 0])
    cert = primal_certificate(coll, Gauge.holder(2), 1.2 * (9 - 1), 2, 2, seed=1)
    assert cert.passed
    # the T12-5 residual equals eps minus phi'(gap) times the raw local ratio
    raw = primal_certificate(coll, Gauge.identity(), 1.2 * (9 - 1), 2, 2, seed=1)
    assert cert.params["gauge"] == {"kind": "holder", "q": 2.0, "alpha": 1.0}
    assert raw.passed


def test_primal_precondition_shared_point():
    coll = Collection([Ball([0, 0], 1), Ball([0, 0], 1)], [[0.5, 0]], [0, 0])
    with pytest.raises(PreconditionError, match="P10-1"):
        primal_certificate(coll, Gauge.identity(), 1.0, 1, 1)


def test_primal_precondition_gauge_inequality():
    with pytest.raises(PreconditionError, match="T12-1"):
        primal_certificate(unit_balls_shifted([3, 0]), Gauge.identity(), 1.5, 2, 2)


def test_primal_requires_common_point():
    coll = Collection([Ball([0, 0], 1), Ball([0, 0], 1)], [[3, 0]])
    with pytest.raises(PreconditionError):
        primal_certificate(coll, Gauge.identity(), 2.4, 2, 2)


def test_primal_reverification_is_exact():
    cert = primal_certificate(unit_balls_shifted([2.5, 1]), Gauge.identity(), 2.5, 1.5, 1.5, seed=4)
    assert verify_certificate(cert) == cert.residuals


def test_primal_t14_variant():
    coll = Collection([Halfspace([0, 1], 0), Ball([0, 1], 1)], [[0, 1], [0, 0]], [0, 0])
    cert = primal_certificate(coll, Gauge.identity(), 0.5, 0.5, 0.3, variant="T14", rho=1.0, seed=0)
    assert len(cert.omegas) == 3
    assert np.linalg.norm(cert.omegas[-1]) <= 0.3
    assert cert.passed


def test_primal_t14_needs_rho_above_eta():
    coll = Collection([Halfspace([0, 1], 0), Ball([0, 1], 1)], [[0, 1], [0, 0]], [0, 0])
    with pytest.raises(PreconditionError):
        primal_certificate(coll, Gauge.identity(), 0.5, 0.5, 0.3, variant="T14", rho=0.2)


def test_primal_p16_variant():
    coll = Collection([Halfspace([0, 1], 0), Ball([0, 2], 1)])
    cert = primal_certificate(coll, Gauge.identity(), 0.5, 1, 1, variant="P16", base_points=[[0, 0], [0, 1]])
    assert cert.passed and cert.gap == pytest.approx(1)


@settings(max_examples=8, deadline=None)
@given(st.floats(2.2, 4), st.floats(-np.pi, np.pi), st.integers(0, 1000))
def test_primal_upper_window_property(norm_a, ang, seed):
    a = norm_a * np.array([np.cos(ang), np.sin(ang)])
    # d = |a| - 2 for unit balls, so phi(|a|) - phi(d) = 2
    cert = primal_certificate(unit_balls_shifted(a), Gauge.identity(), 2.4, 2, 2, seed=seed,
                              budget=3000, n_probe=400)
    assert cert.gap <= np.linalg.norm(a) + 1e-12


# ---------------------------------------------------------------------------
# dual certificates


def test_dual_halfspace_ball_closest_points():
    coll = Collection([Halfspace([0, 1], 0), Ball([0, 2], 1)])
    cert = dual_certificate(coll, Gauge.identity(), 0.3, 1, 1, variant="ZhNg", base_points=[[0, 0], [0, 1]])
    x1, x2 = cert.duals
    assert np.allclose(x1, [0, 1]) and np.allclose(x2, -x1)
    assert cert.passed
    # the certified tuple is the closest pair, normal-cone distances vanish
    assert cert.residuals["ZN-2"] == pytest.approx(0.3)


def test_dual_t17_tau():
    coll = Collection([Halfspace([0, 1], 0), Ball([0, 1], 1)], [[0, 1]], [0, 0])
    cert = dual_certificate(coll, Gauge.identity(), 0.5, 1, 1, tau=0.99)
    assert cert.passed
    assert cert.residuals["T17-5"] == pytest.approx(0.01 * cert.gap)
    assert abs(cert.residuals["T17-1.sum"]) <= 1e-12 and abs(cert.residuals["T17-1.norm"]) <= 1e-12


def test_dual_rejects_intersecting_translates():
    coll = Collection([Ball([0, 0], 1), Ball([0, 0], 1)], [[0.2, 0]], [0, 0])
    with pytest.raises(PreconditionError):
        dual_certificate(coll, Gauge.identity(), 1.0, 1, 1)


def test_dual_t19_and_p21():
    coll = Collection([Halfspace([0, 1], 0), Ball([0, 1], 1)], [[0, 1], [0, 0]], [0, 0])
    c19 = dual_certificate(coll, Gauge.identity(), 0.5, 0.5, 0.3, variant="T19", rho=1.0)
    assert c19.passed and "T19-2" in c19.checks
    p21 = dual_certificate(Collection([Halfspace([0, 1], 0), Ball([0, 2], 1)], [[0, 1]]), Gauge.identity(), 0.5,
                           1, 1, variant="P21", base_points=[[0, 0], [0, 1]])
    assert p21.passed


def test_dual_reverification_is_exact():
    coll = Collection([Halfspace([0, 1], 0), Ball([0, 1], 1)], [[0.5, 1]], [0, 0])
    cert = dual_certificate(coll, Gauge.holder(2), 1.5, 1, 1, seed=2)
    assert verify_certificate(cert) == cert.residuals


def test_dual_optimal_weights_three_sets():
    sets = [Halfspace([0, 1], 0), Halfspace([0, -1], 0), Ball([0, 0], 1)]
    coll = Collection(sets, [[0, 1], [0, -1]], [0, 0])
    u = dual_certificate(coll, Gauge.identity(), 1.0, 1, 1, weights="uniform", seed=0)
    o = dual_certificate(coll, Gauge.identity(), 1.0, 1, 1, weights="optimal", seed=0)
    assert abs(sum(o.weights) - 1) <= 1e-12
    assert abs(o.residuals["T17-1.norm"]) <= 1e-12
    assert o.residuals["T17-2"] >= u.residuals["T17-2"] - 1e-9


@pytest.mark.parametrize("q, gap, factor", [(1, 0.37, 1.0), (2, 0.5, 1.0), (3, 2.0, 12.0)])
def test_holder_factor(q, gap, factor):
    assert holder_factor(q, gap) == pytest.approx(factor)


def test_holder_factor_blows_up_for_small_q():
    gaps = [1e-2, 1e-4, 1e-6]
    f = [holder_factor(0.5, g) for g in gaps]
    assert np.allclose(np.array(f) * np.sqrt(gaps), 0.5)


@pytest.mark.parametrize("q", [1, 2])
def test_holder_certificate_halfspace_ball(q):
    coll = Collection([Halfspace([0, 1], 0), Ball([0, 1], 1)], [[0, 1]], [0, 0])
    cert = holder_certificate(coll, q, 1, 0.5, 1, 1)
    assert cert.passed and "C4.5-2" in cert.checks


def test_holder_certificate_small_q_shrinking_gap_recorded():
    # off-optimal base points keep a fixed normal-cone defect while the gap shrinks
    res = []
    for s in (0.5, 0.1, 0.02):
        coll = Collection([Halfspace([0, 1], 0), Ball([0, 1 + s], 1)])
        cert = dual_certificate(coll, Gauge.holder(0.5), 10.0, 1, 1, variant="ZhNg",
                                base_points=[[0.3, 0], [0.3, 1 + s - math.sqrt(1 - 0.09)]])
        res.append(cert.residuals["C4.5-2"])
    assert res[0] > res[1] > res[2]


# ---------------------------------------------------------------------------
# stationarity probe


def lines_intersect(p1, d1, p2, d2):
    M = np.column_stack([d1, -d2])
    return abs(np.linalg.det(M)) > 1e-12


def test_probe_opposite_halfspaces_extremal():
    coll = Collection([Halfspace([0, 1], 0), Halfspace([0, -1], 0)], common_point=[0, 0])
    rep = stationarity_probe(coll, [0.5, 0.1], region=([0, 0], 1.0), h=0.05)
    assert all(r["found"] for r in rep["extremal"])
    assert all(r["found"] for r in rep["stationary"])


def test_probe_crossing_lines_not_extremal():
    d1, d2 = np.array([1.0, 0]), np.array([1.0, 1]) / math.sqrt(2)
    coll = Collection([AffineSubspace.line([0, 0], d1), AffineSubspace.line([0, 0], d2)], common_point=[0, 0])
    rep = stationarity_probe(coll, [0.5, 0.1], region=([0, 0], 1.0), h=0.05)
    # nonparallel lines meet after any translation
    assert lines_intersect([0, 0], d1, [0, 0], d2)
    assert not any(r["found"] for r in rep["extremal"])
    assert not any(r["found"] for r in rep["stationary"])


def test_probe_identical_halfspaces_not_stationary():
    coll = Collection([Halfspace([0, 1], 0), Halfspace([0, 1], 0)], common_point=[0, 0])
    rep = stationarity_probe(coll, [0.5, 0.1], region=([0, 0], 1.0), h=0.05)
    assert not any(r["found"] for r in rep["stationary"])
    assert not any(r["found"] for r in rep["approx_stationary"])


def test_probe_needs_region():
    coll = Collection([Halfspace([0, 1], 0), Halfspace([0, -1], 0)], common_point=[0, 0])
    with pytest.raises(PreconditionError):
        stationarity_probe(coll, [0.1], region=None)
