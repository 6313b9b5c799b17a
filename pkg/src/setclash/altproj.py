"""Alternating projections with Holder-type decrease and rate checks."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _engine
from .conditions import Collection, check_nonintersection, dual_certificate, index_details
from .core import DEFAULT_TOL, Gauge, as_vector
from .errors import PreconditionError, ValidationError
from .sets import ClosedSet, Translate

STATUS = {
    _engine.MAX_ITER: "max-iter",
    _engine.CONVERGED: "converged",
    _engine.ATTAINED: "attained",
}


@dataclass
class APTrace:
    """Iterates x_0, x_1, ... with x_odd in B and x_even in A.

    `status` is ``"attained"`` (steps settled on a positive plateau),
    ``"converged"`` (a step below tol, i.e. a point of the intersection)
    or ``"max-iter"``.
    """

    iterates: np.ndarray
    status: str
    A: ClosedSet = field(repr=False)
    B: ClosedSet = field(repr=False)
    tol: float = DEFAULT_TOL

    @property
    def step_norms(self) -> np.ndarray:
        """``s_k = ||x_k - x_{k-1}||`` for k = 1..K (index 0 is s_1)."""
        return np.linalg.norm(np.diff(self.iterates, axis=0), axis=1)

    @property
    def set_labels(self) -> list:
        return ["start"] + ["B" if k % 2 else "A" for k in range(1, len(self.iterates))]

    def __len__(self):
        return len(self.iterates)

    def step(self, k: int) -> float:
        """``||x_k - x_{k-1}||`` (1-based)."""
        return float(np.linalg.norm(self.iterates[k] - self.iterates[k - 1]))

    def monotone(self, tol: float = 1e-9) -> bool:
        """Steps are nonincreasing from the second one on (x_0 need not lie in A)."""
        s = self.step_norms
        return bool(np.all(s[2:] <= s[1:-1] + tol))

    def to_dict(self) -> dict:
        return {
            "iterates": self.iterates.tolist(),
            "step_norms": self.step_norms.tolist(),
            "set_labels": self.set_labels,
            "status": self.status,
        }


@dataclass(frozen=True)
class HolderParams:
    """Exponent q and transversality constant delta."""

    q: float
    delta: float

    def __post_init__(self):
        if not self.q > 0:
            raise ValidationError("q must be positive")
        if not self.delta >= 0:
            raise ValidationError("delta must be nonnegative")

    def consistent_with(self, gap: float) -> bool:
        """``delta <= max(gap^(q-1), 1)``; warns when violated."""
        cap = max(gap ** (self.q - 1.0), 1.0) if gap > 0 else 1.0
        ok = self.delta <= cap
        if not ok:
            warnings.warn(f"delta = {self.delta} exceeds max(gap^(q-1), 1) = {cap}", stacklevel=2)
        return ok


def run_ap(A: ClosedSet, B: ClosedSet, x0, max_iter: int = 1000, tol: float = DEFAULT_TOL) -> APTrace:
    """Alternating projections ``x_{2n-1} = P_B(x_{2n-2})``, ``x_{2n} = P_A(x_{2n-1})``.

    Stops at a step below `tol`, at a repeated 2-cycle (positive plateau) or
    after `max_iter` projections.
    """
    if A.dim != B.dim:
        raise ValidationError("A and B have different dimensions")
    x0 = as_vector(x0, A.dim)
    its, status = _engine.alternate(A, B, x0, int(max_iter), float(tol))
    return APTrace(its, STATUS[status], A, B, tol)


def pair_condition_lhs(A: ClosedSet, B: ClosedSet, a, b, q: float, tol: float = DEFAULT_TOL) -> float:
    """``max(g^(q-2) d(b-a, N_A(a)), g^(-1) d(a-b, N_B(b)))`` with ``g = ||b - a||``."""
    a, b = as_vector(a, A.dim), as_vector(b, B.dim)
    g = float(np.linalg.norm(b - a))
    if g == 0.0:
        raise ValidationError("a and b coincide; the condition needs a positive gap")
    da = A.normal_cone_dist(a, b - a, tol)
    db = B.normal_cone_dist(b, a - b, tol)
    return max(g ** (q - 2.0) * da, db / g)


def _default_region(sets, extra):
    """Ball around the boxes of the bounded sets and `extra`, inflated by 2."""
    pts = [np.asarray(p, float) for p in extra]
    for s in sets:
        bb = s.bounding_box()
        if bb is not None:
            pts += [bb[0], bb[1]]
    if not pts:
        return None
    P = np.vstack(pts)
    lo, hi = P.min(axis=0), P.max(axis=0)
    return (lo + hi) / 2, max(float(np.linalg.norm(hi - lo)), 1.0)


def _region(region, dim):
    if isinstance(region, dict):
        return as_vector(region["center"], dim), float(region["radius"])
    c, r = region
    return as_vector(c, dim), float(r)


@dataclass
class DeltaEstimate:
    value: float
    pair: tuple
    admissible: int
    sampled: int
    dAB: float
    region: tuple

    def __float__(self):
        return float(self.value)


def estimate_delta(A: ClosedSet, B: ClosedSet, q: float = 1.0, region=None, count: int = 4000,
                   seed: int = 0, margin: float = 1e-9, x0=None, details: bool = False):
    """Sampled estimate of ``inf`` of :func:`pair_condition_lhs` over admissible pairs.

    Pairs ``(a, b)`` with ``d(b, A) > d(A, B) + margin`` are drawn from the
    projections of random points in `region` and from alternating-projection
    pairs started there; the minimum is then refined locally.  Since only a
    sample is examined the result is an upper bound for the true infimum.
    """
    dim = A.dim
    if region is None:
        region = _default_region([A, B], [] if x0 is None else [x0])
        if region is None:
            raise PreconditionError("a bounded sampling region is required")
    c, r = _region(region, dim)
    d = index_details([A, B], "exact2" if A.convex and B.convex else "grid", region=(c, r))
    dAB = d.value
    rng = np.random.default_rng(seed)
    X = c + r * sample_points_ball(rng, count, dim)
    best, best_pair, adm = math.inf, None, 0

    def consider(a, b):
        nonlocal best, best_pair, adm
        if A.dist(b) <= dAB + margin or np.array_equal(a, b):
            return math.inf
        adm += 1
        v = pair_condition_lhs(A, B, a, b, q)
        if v < best:
            best, best_pair = v, (a.copy(), b.copy())
        return v

    for x in X:
        a, b = A.project(x), B.project(x)
        consider(a, b)
        # projection pairs: a = P_A(b) realises d(b, A)
        consider(A.project(b), b)
        consider(a, B.project(a))
    if best_pair is None:
        raise PreconditionError("no admissible pair (d(b, A) > d(A, B)) was sampled")
    # local refinement around the best pair
    step = 0.1 * r
    a0, b0 = best_pair
    for _ in range(60):
        improved = False
        for _ in range(16):
            a = A.project(a0 + step * rng.standard_normal(dim))
            b = B.project(b0 + step * rng.standard_normal(dim))
            v = consider(a, b)
            if v < best:
                improved = True
        a0, b0 = best_pair
        if not improved:
            step *= 0.5
    if details:
        return DeltaEstimate(best, best_pair, adm, len(X), dAB, (c.tolist(), r))
    return best


def sample_points_ball(rng, count, dim):
    z = rng.standard_normal((count, dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z * rng.random((count, 1)) ** (1.0 / dim)


def _dAB(trace: APTrace, dAB):
    if dAB is not None:
        return float(dAB)
    return index_details([trace.A, trace.B], "exact2").value


def verify_decrease(trace: APTrace, params: HolderParams, dAB: Optional[float] = None,
                    margin: float = 1e-9, tol: float = 1e-9) -> dict:
    """Per-cycle check of ``s_{2n}^q <= s_{2n-1}^q - q delta^2 s_{2n-1}``.

    A cycle n is tested while ``d(x_{2n-1}, A) > d(A, B) + margin`` and
    ``x_{2n-2}`` lies in A (cycle 1 is skipped when x_0 is not in A).
    Residual = right side minus left side; a cycle fails when it is below
    ``-tol``.
    """
    if len(trace) < 3:
        raise ValidationError("the trace needs at least two steps")
    dAB = _dAB(trace, dAB)
    q, delta = params.q, params.delta
    X = trace.iterates
    cycles = []
    first_violation = None
    for n in range(1, (len(X) - 1) // 2 + 1):
        x2, x1, x0 = X[2 * n], X[2 * n - 1], X[2 * n - 2]
        if trace.A.dist(x1) <= dAB + margin:
            break
        if not trace.A.contains(x0, trace.tol):
            continue
        s1 = float(np.linalg.norm(x1 - x0))
        s2 = float(np.linalg.norm(x2 - x1))
        lhs = s2 ** q
        rhs = s1 ** q - q * delta ** 2 * s1
        ok = rhs - lhs >= -tol
        cycles.append({"cycle": n, "lhs": lhs, "rhs": rhs, "residual": rhs - lhs, "pass": ok})
        if not ok and first_violation is None:
            first_violation = n
    return {
        "inequality": "C5.4-2",
        "q": q,
        "delta": delta,
        "cycles": cycles,
        "vacuous": not cycles,
        "first_violation": first_violation,
        "pass": first_violation is None,
    }


def verify_linear_rate(trace: APTrace, delta: float, tol: float = 1e-9) -> dict:
    """Check ``s_{2n} <= (1 - delta^2) s_{2n-1}`` and report empirical ratios.

    `step_ratios` are ``s_{2n} / s_{2n-1}`` (the quantity bounded here) and
    `cycle_ratios` are ``s_{2n} / s_{2n-2}``.
    """
    s = np.concatenate([[np.nan], trace.step_norms])  # s[k] = ||x_k - x_{k-1}||
    K = len(s) - 1
    if K < 2:
        raise ValidationError("the trace needs at least two steps")
    factor = 1.0 - delta ** 2
    cycles, step_ratios, cycle_ratios = [], [], []
    first_violation = None
    for n in range(1, K // 2 + 1):
        s1, s2 = s[2 * n - 1], s[2 * n]
        res = factor * s1 - s2
        ok = res >= -tol
        cycles.append({"cycle": n, "lhs": float(s2), "rhs": float(factor * s1), "residual": float(res), "pass": ok})
        if not ok and first_violation is None:
            first_violation = n
        if s1 > 0:
            step_ratios.append(float(s2 / s1))
        if n >= 2 and s[2 * n - 2] > 0:
            cycle_ratios.append(float(s2 / s[2 * n - 2]))
    return {
        "inequality": "C5.6-1",
        "delta": delta,
        "cycles": cycles,
        "step_ratios": step_ratios,
        "cycle_ratios": cycle_ratios,
        "first_violation": first_violation,
        "pass": first_violation is None,
    }


def classify_termination(trace: APTrace, dAB: Optional[float] = None, tol: float = 1e-9) -> dict:
    """Finite attainment, vanishing steps or undetermined.

    Finite attainment at the first k with ``|s_k - d(A, B)| <= tol`` when
    ``d(A, B) > tol``; vanishing steps when ``d(A, B) <= tol`` and some step is
    at most `tol`.  A Cauchy-tail bound (the last step times the remaining
    geometric factor is not available in general) is reported as the tail
    sum of the last ten steps.
    """
    dAB = _dAB(trace, dAB)
    s = trace.step_norms
    out = {"dAB": dAB, "kind": "undetermined", "index": None, "value": None}
    if dAB > tol:
        hit = np.flatnonzero(np.abs(s - dAB) <= tol)
        if hit.size:
            k = int(hit[0]) + 1
            out.update(kind="finite-attainment", index=k, value=float(s[k - 1]))
    else:
        hit = np.flatnonzero(s <= tol)
        if hit.size:
            k = int(hit[0]) + 1
            out.update(kind="vanishing-steps", index=k, value=float(s[k - 1]),
                       tail_sum=float(s[max(0, len(s) - 10):].sum()))
    return out


def distance_decrease_bound(A: ClosedSet, xbar, b, q: float, delta: float, lam: float, count: int = 2000,
                            seed: int = 0, tol: float = DEFAULT_TOL) -> dict:
    """Sampled premise and direct check of ``d^q(b, A) <= ||b - xbar||^q - q lam delta``.

    The premise asks ``||b - a||^(q-2) d(b - a, N_A(a)) >= delta`` for every
    ``a`` in ``A`` within `lam` of `xbar` with ``||b - a||^q < d^q(b, A) + q lam delta``.
    Samples are projections of random points of the ball, plus `xbar`
    itself and ``P_A(b)``.  An empty sampled window is reported as vacuous.
    """
    xbar = as_vector(xbar, A.dim)
    b = as_vector(b, A.dim)
    if not A.contains(xbar, tol):
        raise PreconditionError("xbar is not in A")
    dbA = A.dist(b)
    if dbA <= tol:
        raise PreconditionError("b lies in A")
    rng = np.random.default_rng(seed)
    cand = [xbar, A.project(b)]
    cand += [A.project(x) for x in xbar + lam * sample_points_ball(rng, count, A.dim)]
    window = dbA ** q + q * lam * delta
    in_window, witness = 0, None
    for a in cand:
        if np.linalg.norm(a - xbar) >= lam or not A.contains(a, tol):
            continue
        g = float(np.linalg.norm(b - a))
        if not g ** q < window:
            continue
        in_window += 1
        val = g ** (q - 2.0) * A.normal_cone_dist(a, b - a, tol)
        if val < delta and witness is None:
            witness = a
    bound = float(np.linalg.norm(b - xbar)) ** q - q * lam * delta
    premise = witness is None and in_window > 0
    return {
        "inequality": "C5.3",
        "premise_holds": premise,
        "vacuous": in_window == 0,
        "window_samples": in_window,
        "witness": None if witness is None else witness.tolist(),
        "bound": bound,
        "lhs": dbA ** q,
        "conclusion_holds": dbA ** q <= bound + tol,
    }


def two_set_certificate(A: ClosedSet, B: ClosedSet, xbar, u, eps: float, q: float, lam: float, eta: float,
                        tau: float = 0.99, seed: int = 0, region=None, h: float = 0.05) -> dict:
    """Two-set Holder certificate for a translation ``u`` separating A from B.

    Runs the dual pipeline with ``a_1 = u`` and reports the three claims:
    positive gap, ``||b - a + u||^q < d^q(A - u, B) + eps`` and
    ``q g^(q-2) (lam d(b - a + u, N_A(a)) + eta d(a - b - u, N_B(b))) < eps``.
    """
    xbar = as_vector(xbar, A.dim)
    u = as_vector(u, A.dim)
    if not (A.contains(xbar) and B.contains(xbar)):
        raise PreconditionError("xbar must lie in both sets")
    res = check_nonintersection(Collection([Translate(A, u), B]), region=region, h=h)
    if res.status != "certified-disjoint":
        d = index_details([Translate(A, u), B], "exact2") if A.convex and B.convex else None
        if d is None or not (d.converged and d.value > 1e-9):
            raise PreconditionError(f"(A - u) and B not certified disjoint ({res.status})", inequality="P5.1-1")
    dq = index_details([Translate(A, u), B], "exact2").value ** q if A.convex and B.convex else None
    if dq is not None and not float(np.linalg.norm(u)) ** q < dq + eps:
        raise PreconditionError(f"||u||^q = {np.linalg.norm(u) ** q:.6g} is not below d^q + eps = {dq + eps:.6g}",
                                inequality="P5.1-1")
    dc = dual_certificate(Collection([A, B], [u], xbar), Gauge.holder(q), eps, lam, eta, tau, "T17",
                          region=region, h=h, seed=seed)
    a, b = dc.omegas
    w = b - a + u
    g = float(np.linalg.norm(w))
    dlo = dc.problem.d_lower
    da = A.normal_cone_dist(a, w, DEFAULT_TOL)
    db = B.normal_cone_dist(b, -w, DEFAULT_TOL)
    checks = {
        "P5.1-2.lower": {"residual": g, "pass": g > 0},
        "P5.1-2.upper": {"residual": dlo ** q + eps - g ** q, "pass": g ** q < dlo ** q + eps},
        "P5.1-3": {"residual": eps - q * g ** (q - 2.0) * (lam * da + eta * db),
                   "pass": bool(q * g ** (q - 2.0) * (lam * da + eta * db) < eps)},
    }
    return {"a": a.tolist(), "b": b.tolist(), "gap": g, "checks": checks,
            "pass": all(c["pass"] for c in checks.values()), "certificate": dc.to_dict()}
