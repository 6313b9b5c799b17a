"""Exit criteria; each test records one pass/fail line for the run summary."""

import json
import math
import time

import numpy as np
import pytest

from setclash import (
    AffineSubspace,
    Ball,
    Box,
    Collection,
    Gauge,
    Halfspace,
    MaxGapInstance,
    Polytope,
    ProductNorm,
    chain_rule_slope,
    dual_certificate,
    estimate_delta,
    holder_certificate,
    index_details,
    local_slope,
    maxgap_subdiff,
    primal_certificate,
    product_normal_cone_check,
    run_ap,
    verify_certificate,
    verify_decrease,
    verify_linear_rate,
    HolderParams,
)
from setclash.cli import run_command
from setclash.varcalc import subdiff_residuals

pytestmark = pytest.mark.acceptance

THETAS = [math.pi / 6, math.pi / 4, math.pi / 3]


def lines(theta):
    return AffineSubspace.line([0, 0], [1, 0]), AffineSubspace.line([0, 0], [math.cos(theta), math.sin(theta)])


def test_criterion_1_example_reproduction(tmp_path, record_acceptance):
    t0 = time.perf_counter()
    code = run_command(["demo", "example-5.5", "--out", str(tmp_path)])
    elapsed = time.perf_counter() - t0
    rep = json.loads((tmp_path / "example-5.5.report.json").read_text())
    its = np.array(rep["result"]["trace"]["iterates"])
    steps = rep["result"]["trace"]["step_norms"]
    ok = (code == 0 and np.allclose(its[1:5], [(0.5, 1.5), (0.5, 0), (0, 1), (0, 0)], atol=1e-12)
          and abs(steps[-1] - 1.0) <= 1e-9 and abs(rep["result"]["dAB"] - 1.0) <= 1e-9
          and rep["result"]["status"] == "finite-attainment" and elapsed < 1.0)
    record_acceptance(1, ok, f"terminal step {steps[-1]!r}, status {rep['result']['status']}, {elapsed:.3f}s")
    assert ok


def test_criterion_2_linear_rate(record_acceptance):
    t0 = time.perf_counter()
    rows, ok = [], True
    for th in THETAS:
        est = estimate_delta(*lines(th), q=1, region=([0, 0], 2.0), seed=0)
        rate = verify_linear_rate(run_ap(*lines(th), [1, 0], max_iter=60), math.sin(th))
        ratios = rate["cycle_ratios"][10:]
        ratio_ok = bool(ratios) and max(abs(r - math.cos(th) ** 2) for r in ratios) <= 1e-6
        est_ok = abs(est - math.sin(th)) <= 0.02
        ok &= est_ok and rate["pass"] and ratio_ok
        rows.append(f"theta={th:.4f}: delta_est={est:.4f} (sin={math.sin(th):.4f}) rate_pass={rate['pass']} "
                    f"cycle_ratio_ok={ratio_ok}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 5
    record_acceptance(2, ok, "; ".join(rows) + f"; {elapsed:.2f}s")
    assert ok, rows


def test_criterion_3_decrease_estimate(record_acceptance):
    rows, ok = [], True
    for th in THETAS:
        A, B = lines(th)
        tr = run_ap(A, B, [1, 0], max_iter=60)
        delta = estimate_delta(A, B, q=1, region=([0, 0], 2.0), seed=0)
        rep = verify_decrease(tr, HolderParams(1, delta))
        worst = min(c["residual"] for c in rep["cycles"])
        inflated = verify_decrease(tr, HolderParams(1, 1.5 * delta))
        ok &= worst >= -1e-9 and not rep["vacuous"] and not inflated["pass"]
        rows.append(f"theta={th:.4f}: min residual {worst:.3g}, 1.5x fails at cycle {inflated['first_violation']}")
    record_acceptance(3, ok, "; ".join(rows))
    assert ok


def test_criterion_4_subdifferential(record_acceptance):
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    worst = {"sum": 0.0, "norm": 0.0, "support": 0.0, "subgradient": 0.0}
    for _ in range(200):
        n, dim = int(rng.integers(2, 5)), int(rng.integers(2, 4))
        inst = MaxGapInstance(rng.normal(size=(n - 1, dim)))
        u = rng.normal(size=(n, dim))
        X = np.array(maxgap_subdiff(inst, u))
        r = subdiff_residuals(inst, u, X)
        for k in ("sum", "norm", "support"):
            worst[k] = max(worst[k], abs(r[k]))
        fu = inst(u)
        W = u + rng.normal(scale=2, size=(100, n, dim))
        slack = np.array([inst(w) for w in W]) - fu - np.einsum("kij,ij->k", W - u, X)
        worst["subgradient"] = min(worst["subgradient"], float(slack.min()))
    elapsed = time.perf_counter() - t0
    ok = (worst["sum"] <= 1e-12 and worst["norm"] <= 1e-12 and worst["support"] <= 1e-9
          and worst["subgradient"] >= -1e-9 and elapsed < 10)
    record_acceptance(4, ok, f"worst {worst}, {elapsed:.2f}s")
    assert ok


def test_criterion_5_chain_rule(record_acceptance):
    rng = np.random.default_rng(5)
    ball = Ball([0.5, -1.0], 1.0)
    psi = ball.dist
    t0 = time.perf_counter()
    worst = 0.0
    for q in (0.5, 1.0, 2.0, 3.0):
        g = Gauge.holder(q)
        for _ in range(50):
            r = rng.uniform(0.1, 5.0)
            ang = rng.uniform(0, 2 * math.pi)
            x = ball.center + (ball.radius + r) * np.array([math.cos(ang), math.sin(ang)])
            lhs = local_slope(lambda y: g.value(psi(y)), x, budget=64, seed=int(rng.integers(1 << 30))).value
            rhs = chain_rule_slope(g, psi(x), local_slope(psi, x, budget=64).value)
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-3 and elapsed < 10
    record_acceptance(5, ok, f"worst relative error {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_6_primal_certificate(record_acceptance):
    rng = np.random.default_rng(6)
    rows, ok, slowest = [], True, 0.0
    for k in range(6):
        g = Gauge.identity() if k % 2 == 0 else Gauge.holder(2)
        r1, r2 = rng.uniform(0.5, 1.5, size=2)
        c1 = rng.uniform(-0.4, 0.4, size=2) * r1
        c2 = rng.uniform(-0.4, 0.4, size=2) * r2
        a = rng.normal(size=2)
        a *= rng.uniform(r1 + r2 + 0.5, r1 + r2 + 3) / np.linalg.norm(a)
        coll = Collection([Ball(c1, r1), Ball(c2, r2)], [a], [0, 0])
        d = max(float(np.linalg.norm(c1 - a - c2)) - r1 - r2, 0.0)
        eps = 1.25 * (g.value(float(np.linalg.norm(a))) - g.value(d))  # admissible margin over the premise
        t0 = time.perf_counter()
        cert = primal_certificate(coll, g, eps, 1.5, 1.5, seed=k)
        again = verify_certificate(cert)
        slowest = max(slowest, time.perf_counter() - t0)
        strict = [cert.residuals[t] for t in ("T12-2", "T12-5") if t in cert.residuals]
        this = (cert.passed and again == cert.residuals and all(s >= 1e-12 for s in strict)
                and cert.residuals["T12-3.lower"] > 0 and cert.residuals["T12-3.upper"] >= 0)
        ok &= this
        rows.append(f"{g.kind}: {'ok' if this else 'FAIL ' + str(cert.failures)}")
    ok &= slowest < 5
    record_acceptance(6, ok, f"{', '.join(rows)}; slowest {slowest:.2f}s")
    assert ok


def test_criterion_7_dual_certificate(record_acceptance):
    t0 = time.perf_counter()
    H, Bl = Halfspace([0, 1], 0), Ball([0.3, 2.5], 1)
    zn = dual_certificate(Collection([H, Bl]), Gauge.identity(), 0.3, 1, 1, variant="ZhNg",
                          base_points=[[0.3, 0], [0.3, 1.5]])
    x1, x2 = zn.duals
    aligned = np.allclose(x1, [0, 1], atol=1e-12) and np.allclose(x1, -x2, atol=1e-12)
    coll = Collection([H, Ball([0.3, 1.0], 1)], [[0, 1.5]], [0.3, 0])
    t17 = dual_certificate(coll, Gauge.identity(), 0.5, 1, 1, tau=0.99)
    tags = [t for t in t17.checks if t.split(".")[0] in ("T17-1", "T17-2", "T17-3", "T17-5")]
    have_all = {t.split(".")[0] for t in tags} == {"T17-1", "T17-2", "T17-3", "T17-5"}
    holder = {q: holder_certificate(coll, q, 1, 0.5, 1, 1) for q in (1, 2)}
    holder_ok = all(c.passed and c.checks["C4.5-2"]["pass"] for c in holder.values())
    elapsed = time.perf_counter() - t0
    ok = aligned and zn.passed and t17.passed and have_all and holder_ok and elapsed < 5
    record_acceptance(7, ok, f"aligned={aligned}, closest-point pass={zn.passed}, T17 pass={t17.passed}, "
                             f"Holder q=1,2 pass={holder_ok}, {elapsed:.2f}s")
    assert ok


def random_convex(rng, center):
    kind = rng.integers(3)
    if kind == 0:
        return Ball(center, rng.uniform(0.3, 1.2))
    if kind == 1:
        w = rng.uniform(0.3, 1.2, size=2)
        return Box(center - w, center + w)
    # random triangle around the center
    # spread angles keep the center strictly inside
    ang = rng.uniform(0, 2 * math.pi) + np.array([0, 2, 4]) * math.pi / 3 + rng.uniform(-0.4, 0.4, size=3)
    V = center + rng.uniform(0.4, 1.2, size=(3, 1)) * np.c_[np.cos(ang), np.sin(ang)]
    return triangle(V)


def triangle(V):
    """Polytope with vertices V."""
    V = np.asarray(V, float)
    E = np.roll(V, -1, axis=0) - V
    if np.sum(V[:, 0] * E[:, 1] - V[:, 1] * E[:, 0]) < 0:
        V = V[::-1]
    E = np.roll(V, -1, axis=0) - V
    N = np.c_[E[:, 1], -E[:, 0]]
    return Polytope.from_inequalities(N, np.einsum("ij,ij->i", N, V))


def test_criterion_8_index_oracle(record_acceptance):
    rng = np.random.default_rng(8)
    t0 = time.perf_counter()
    worst, zero_ok, count = 0.0, True, 0
    while count < 20:
        A = random_convex(rng, rng.uniform(-2, 2, size=2))
        B = random_convex(rng, rng.uniform(-2, 2, size=2))
        e = index_details([A, B], "exact2")
        if e.value <= 0.05:
            continue
        gr = index_details([A, B], "grid", h=0.01)
        worst = max(worst, abs(e.value - gr.value))
        count += 1
    hits = 0
    while hits < 20:
        c = rng.uniform(-2, 2, size=2)
        A = random_convex(rng, c)
        B = random_convex(rng, c + rng.uniform(-0.2, 0.2, size=2))
        if not (A.contains(c) and B.contains(c)):
            continue
        zero_ok &= index_details([A, B], "exact2").value == 0.0
        hits += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.02 and zero_ok and elapsed < 30
    record_acceptance(8, ok, f"max |exact2 - grid| = {worst:.4f}, intersecting pairs give 0: {zero_ok}, "
                             f"{elapsed:.2f}s")
    assert ok


def test_criterion_9_property_suites(record_acceptance):
    rng = np.random.default_rng(9)
    t0 = time.perf_counter()
    fails, cases = {}, {}

    def tally(name, good):
        cases[name] = cases.get(name, 0) + 1
        fails[name] = fails.get(name, 0) + (not good)

    sets = [Ball([0.3, -0.2], 1.1), Box([-1, 0], [0.5, 2]), Halfspace([1, 2], 0.4), AffineSubspace.line([0, 1], [1, 1]),
            triangle([[0, 0], [2, 0], [0.5, 1.5]])]
    for _ in range(200):
        n = int(rng.integers(2, 5))
        norm = ProductNorm(float(rng.uniform(0.2, 3)), float(rng.uniform(0.2, 3)), n)
        u, x = rng.normal(size=(n, 2)), rng.normal(size=(n, 2))
        tally("duality pairing", abs(float(np.sum(u * x))) <= norm(u) * norm.dual(x) * (1 + 1e-12))
    for _ in range(300):
        S = sets[rng.integers(len(sets))]
        x, y = rng.normal(scale=3, size=(2, 2))
        p, q = S.project(x), S.project(y)
        z = S.project(rng.normal(scale=3, size=2))
        tally("projection characterization", float((x - p) @ (z - p)) <= 1e-9)
        tally("firm nonexpansiveness", float((p - q) @ (p - q)) <= float((p - q) @ (x - y)) + 1e-9)
        tally("residual normality", S.normal_cone_dist(p, x - p) <= 1e-9)
    for _ in range(200):
        i, j = rng.integers(len(sets), size=2)
        x1, x2 = rng.normal(scale=3, size=(2, 2))
        p1, p2 = sets[i].project(x1), sets[j].project(x2)
        tally("product normal cone", product_normal_cone_check(sets[i], sets[j], p1, p2, x1 - p1, x2 - p2))
    for _ in range(200):
        i, j = rng.integers(len(sets), size=2)
        tr = run_ap(sets[i], sets[j], rng.normal(scale=3, size=2), max_iter=100)
        tally("trace monotonicity", tr.monotone(1e-9))
    elapsed = time.perf_counter() - t0
    total, failed = sum(cases.values()), sum(fails.values())
    ok = failed == 0 and total >= 1000 and elapsed < 60
    record_acceptance(9, ok, f"{total} cases, {failed} failures {fails if failed else ''}, {elapsed:.2f}s")
    assert ok
