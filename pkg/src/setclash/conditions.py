"""Non-intersection certificates for collections of closed sets.

Primal certificates are Ekeland points of ``phi(max-gap)`` over the product
of the sets with a weighted max metric, together with sampled slope
residuals.  Dual certificates add dual vectors built from subgradients of
the max-gap function and measure their distance to normal cones.

Residual convention: every check stores a ``residual`` that must be
``>= STRICT_MARGIN`` for strict inequalities, ``>= 0`` for non-strict ones
and ``<= EQ_TOL`` in absolute value for equalities.  Check names follow the
usual inequality tags (``T12-2``, ``T17-3``, ...).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import _engine
from .core import DEFAULT_TOL, Gauge, ProductNorm, as_tuple, as_vector
from .errors import (
    DimensionError,
    PreconditionError,
    UnsupportedMethodError,
    ValidationError,
)
from .sets import (
    Ball,
    ClosedSet,
    Translate,
    dist_many,
    project_many,
    set_from_dict,
)
from .varcalc import MaxGapInstance, ekeland_search, maxgap_subdiff

STRICT_MARGIN = 1e-12
EQ_TOL = 1e-9
NORM_TOL = 1e-12
PROBE_RADII = (10.0, 1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
LOCAL_RADIUS = 1e-3


# ---------------------------------------------------------------------------
# collections


def _parse_region(region, dim):
    if region is None:
        return None
    if isinstance(region, dict):
        c, r = region["center"], region["radius"]
    else:
        c, r = region
    r = float(r)
    if not r > 0:
        raise ValidationError("region radius must be positive")
    return as_vector(c, dim), r


@dataclass(eq=False)
class Collection:
    """Sets Omega_1..Omega_n with optional shifts and common point.

    `shifts` has n-1 entries (last set fixed) or n entries (all sets moved).
    """

    sets: list
    shifts: Optional[list] = None
    common_point: Optional[np.ndarray] = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        self.sets = list(self.sets)
        if len(self.sets) < 2:
            raise ValidationError("a collection needs at least two sets")
        dims = {s.dim for s in self.sets}
        if len(dims) != 1:
            raise DimensionError("sets have different dimensions")
        if self.shifts is not None:
            self.shifts = as_tuple(self.shifts)
            if len(self.shifts) not in (self.n - 1, self.n) or self.shifts[0].size != self.dim:
                raise DimensionError(f"expected {self.n - 1} or {self.n} shifts of dimension {self.dim}")
        if self.common_point is not None:
            self.common_point = as_vector(self.common_point, self.dim)
            for i, s in enumerate(self.sets):
                if not s.contains(self.common_point, self.tol):
                    raise ValidationError(f"common point is not in set {i + 1}")

    @property
    def n(self) -> int:
        return len(self.sets)

    @property
    def dim(self) -> int:
        return self.sets[0].dim

    @property
    def symmetric(self) -> bool:
        return self.shifts is not None and len(self.shifts) == self.n

    def asymmetric_shifts(self) -> list:
        if self.shifts is None:
            return [np.zeros(self.dim) for _ in range(self.n - 1)]
        if self.symmetric:
            return asymmetric_reduce(self.shifts)
        return list(self.shifts)

    def symmetric_shifts(self) -> list:
        if self.shifts is None:
            return [np.zeros(self.dim) for _ in range(self.n)]
        if self.symmetric:
            return list(self.shifts)
        return list(self.shifts) + [np.zeros(self.dim)]

    def shifted_sets(self) -> list:
        """Omega_i - a_i for every shifted index."""
        if self.shifts is None:
            return list(self.sets)
        out = [Translate(s, a) for s, a in zip(self.sets, self.shifts)]
        return out + self.sets[len(self.shifts):]

    def to_dict(self) -> dict:
        d = {"sets": [s.to_dict() for s in self.sets]}
        if self.shifts is not None:
            d["shifts"] = [a.tolist() for a in self.shifts]
        if self.common_point is not None:
            d["common_point"] = self.common_point.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict, tol: float = DEFAULT_TOL) -> "Collection":
        return cls(
            [set_from_dict(s) for s in d["sets"]],
            d.get("shifts"),
            d.get("common_point"),
            tol,
        )


def asymmetric_reduce(shifts, base_points=None) -> list:
    """Reduce shifts to the asymmetric form.

    Without `base_points`: ``a'_i = a_i - a_n`` for n given shifts.
    With n `base_points` omega and n-1 shifts: ``a'_i = a_i + omega_i - omega_n``.
    """
    a = as_tuple(shifts)
    if base_points is None:
        if len(a) < 2:
            raise ValidationError("need n >= 2 shifts")
        return [ai - a[-1] for ai in a[:-1]]
    w = as_tuple(base_points, len(a) + 1)
    return [ai + wi - w[-1] for ai, wi in zip(a, w[:-1])]


# ---------------------------------------------------------------------------
# lattice helpers


def _lattice(lo, hi, anchor, h, ball=None, max_points=4_000_000):
    """Points anchor + h*k inside [lo, hi] (at least one per axis)."""
    axes = []
    for j in range(lo.size):
        kmin = math.ceil((lo[j] - anchor[j]) / h - 1e-12)
        kmax = math.floor((hi[j] - anchor[j]) / h + 1e-12)
        if kmin > kmax:
            kmin = kmax = round(((lo[j] + hi[j]) / 2 - anchor[j]) / h)
        axes.append(anchor[j] + h * np.arange(kmin, kmax + 1))
    total = math.prod(len(ax) for ax in axes)
    if total > max_points:
        raise ValidationError(f"grid of {total} points is too large; increase h or shrink the region")
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, lo.size)
    if ball is not None:
        c, r = ball
        X = X[np.linalg.norm(X - c, axis=1) <= r + h * math.sqrt(lo.size)]
    return X


def _max_dist(sets, X, chunk=250_000):
    out = np.empty(len(X))
    for s in range(0, len(X), chunk):
        blk = X[s:s + chunk]
        out[s:s + chunk] = np.max([dist_many(t, blk) for t in sets], axis=0)
    return out


def _hull_box(sets, region):
    lo = hi = None
    for s in sets:
        bb = s.bounding_box()
        if bb is None:
            continue
        lo = bb[0] if lo is None else np.minimum(lo, bb[0])
        hi = bb[1] if hi is None else np.maximum(hi, bb[1])
    if region is not None:
        c, r = region
        if lo is None:
            lo, hi = c - r, c + r
        else:
            lo, hi = np.maximum(lo, c - r), np.minimum(hi, c + r)
    return lo, hi


# ---------------------------------------------------------------------------
# nonintersect index


@dataclass
class IndexResult:
    """Nonintersect index with provenance.

    `kind` is ``"exact"`` (alternating projections reached a fixed pair),
    ``"grid"`` (lattice value, an upper bound within ``h * sqrt(dim)`` of the
    infimum over the gridded box) or ``"upper"`` (cyclic descent bound).
    """

    value: float
    method: str
    kind: str
    points: list
    converged: bool = True
    lower: float = 0.0

    def __float__(self):
        return float(self.value)


def index_details(sets, method: str = "exact2", h: float = 0.01, budget: int = 2000,
                  region=None, max_iter: int = 100_000, tol: float = 1e-13) -> IndexResult:
    """Nonintersect index ``inf max_{i<n} ||u_n - u_i||`` with method details."""
    sets = list(sets)
    if len(sets) < 2:
        raise ValidationError("need at least two sets")
    dim = sets[0].dim
    region = _parse_region(region, dim)
    if method == "exact2":
        if len(sets) != 2 or not all(s.convex for s in sets):
            raise UnsupportedMethodError("exact2 needs exactly two convex sets")
        A, B = sets
        bb = _hull_box(sets, region)
        start = (bb[0] + bb[1]) / 2 if bb[0] is not None else np.zeros(dim)
        its, status = _engine.alternate(A, B, A.project(start), max_iter, tol)
        steps = np.linalg.norm(np.diff(its, axis=0), axis=1)
        if status == _engine.CONVERGED:
            val = 0.0
        else:
            val = float(steps[-1]) if len(steps) else 0.0
        a, b = (its[-1], its[-2]) if len(its) % 2 == 1 else (its[-2], its[-1])
        return IndexResult(val, "exact2", "exact", [a, b], status != _engine.MAX_ITER,
                           lower=max(0.0, val - 1e-9) if status != _engine.MAX_ITER else 0.0)
    if method == "grid":
        if not h > 0:
            raise ValidationError("grid step must be positive")
        last = sets[-1]
        bb = last.bounding_box()
        if region is not None:
            c, r = region
            bb = (c - r, c + r) if bb is None else (np.maximum(bb[0], c - r), np.minimum(bb[1], c + r))
        if bb is None:
            raise UnsupportedMethodError("grid method needs a bounded last set or a region")
        lo, hi = bb
        X = _lattice(lo, hi, (lo + hi) / 2, h)
        U = project_many(last, X)
        m = _max_dist(sets[:-1], U)
        j = int(np.argmin(m))
        pts = [s.project(U[j]) for s in sets[:-1]] + [U[j]]
        return IndexResult(float(m[j]), "grid", "grid", pts, True,
                           lower=max(0.0, float(m[j]) - h * math.sqrt(dim)))
    if method == "cyclic":
        return _cyclic_index(sets, budget, region)
    raise ValidationError(f"unknown index method {method!r}")


def nonintersect_index(sets, method: str = "exact2", **kw) -> float:
    """Nonintersect index ``inf_{u_i in Omega_i} max_{i<n} ||u_n - u_i||``.

    Methods: ``exact2`` (two convex sets, alternating projections to a fixed
    pair), ``grid`` (lattice over the last set, accuracy O(h)) and
    ``cyclic`` (projected subgradient descent, an upper bound).
    """
    return index_details(sets, method, **kw).value


def _cyclic_index(sets, budget, region):
    head, last = sets[:-1], sets[-1]
    bb = _hull_box(sets, region)
    u = last.project((bb[0] + bb[1]) / 2 if bb[0] is not None else np.zeros(last.dim))
    best_val, best_u = math.inf, u
    for k in range(1, budget + 1):
        P = [s.project(u) for s in head]
        d = [float(np.linalg.norm(u - p)) for p in P]
        i = int(np.argmax(d))
        if d[i] < best_val:
            best_val, best_u = d[i], u
        if d[i] == 0.0:
            break
        g = (u - P[i]) / d[i]
        u = last.project(u - d[i] / math.sqrt(k) * g)
    pts = [s.project(best_u) for s in head] + [best_u]
    return IndexResult(best_val, "cyclic", "upper", pts, False, lower=0.0)


# ---------------------------------------------------------------------------
# grid non-intersection check


@dataclass
class NonintersectionResult:
    status: str  # "certified-disjoint" | "intersection-witness" | "inconclusive"
    point: Optional[np.ndarray]
    min_gap: float
    h: float
    grid_points: int

    def to_dict(self):
        return {
            "status": self.status,
            "point": None if self.point is None else self.point.tolist(),
            "min_gap": self.min_gap,
            "h": self.h,
            "grid_points": self.grid_points,
        }


def check_nonintersection(coll: Collection, region=None, h: float = 0.1,
                          tol: float = DEFAULT_TOL, polish_sweeps: int = 2000) -> NonintersectionResult:
    """Grid test of ``cap_i (Omega_i - a_i) = empty`` (within `region` if given).

    The lattice (step `h`, anchored at the region centre or the box centre)
    covers the hull of the bounded sets' boxes intersected with the region.
    ``m(x) = max_i d(x, Omega_i - a_i)`` is 1-Lipschitz, so ``min m > h sqrt(dim)``
    on the lattice proves disjointness.  A witness is a lattice point with
    ``m <= tol`` (the one nearest the anchor) or, failing that, the best
    lattice point after cyclic projections drive ``m`` below `tol`.
    """
    if not h > 0:
        raise ValidationError("grid step h must be positive")
    T = coll.shifted_sets()
    region = _parse_region(region, coll.dim)
    lo, hi = _hull_box(T, region)
    if lo is None:
        raise PreconditionError("a region is required for unbounded sets")
    anchor = region[0] if region is not None else (lo + hi) / 2
    X = _lattice(lo, hi, anchor, h, ball=region)
    if len(X) == 0:
        return NonintersectionResult("certified-disjoint", None, math.inf, h, 0)
    m = _max_dist(T, X)
    hits = np.flatnonzero(m <= tol)
    if hits.size:
        j = hits[np.argmin(np.linalg.norm(X[hits] - anchor, axis=1))]
        return NonintersectionResult("intersection-witness", X[j].copy(), 0.0, h, len(X))
    j = int(np.argmin(m))
    x = X[j].copy()
    for _ in range(polish_sweeps):
        for t in T:
            x = t.project(x)
        if max(t.dist(x) for t in T) <= tol:
            break
    if max(t.dist(x) for t in T) <= tol and (region is None or np.linalg.norm(x - region[0]) <= region[1]):
        return NonintersectionResult("intersection-witness", x, 0.0, h, len(X))
    status = "certified-disjoint" if m[j] > h * math.sqrt(coll.dim) else "inconclusive"
    return NonintersectionResult(status, None, float(m[j]), h, len(X))


def _certify_disjoint(sets, region, h, tag):
    """Raise PreconditionError unless `sets` are shown to have empty intersection."""
    if len(sets) == 2 and all(s.convex for s in sets):
        res = index_details(sets, "exact2", max_iter=20_000)
        if res.kind == "exact" and res.converged and res.value > 1e-9:
            return res.value
    try:
        out = check_nonintersection(Collection(sets), region=region, h=h)
    except PreconditionError:
        raise PreconditionError("cannot certify non-intersection of unbounded sets without a region",
                                inequality=tag) from None
    if out.status != "certified-disjoint":
        raise PreconditionError(f"non-intersection not certified ({out.status})", inequality=tag)
    return out.min_gap


def _index_for(sets, region, h):
    """(estimate, lower bound) of the nonintersect index of `sets`."""
    if len(sets) == 2 and all(s.convex for s in sets):
        res = index_details(sets, "exact2", max_iter=20_000)
        if res.converged:
            return res.value, res.lower
    try:
        res = index_details(sets, "grid", h=h, region=region)
        return res.value, res.lower
    except (UnsupportedMethodError, ValidationError):
        res = index_details(sets, "cyclic", region=region)
        return res.value, 0.0


# ---------------------------------------------------------------------------
# certificate data


def _check(residual, kind):
    r = float(residual)
    if kind == "strict":
        ok = r >= STRICT_MARGIN
    elif kind == "nonstrict":
        ok = r >= 0.0
    elif kind == "equality":
        ok = abs(r) <= EQ_TOL
    elif kind == "norm":
        ok = abs(r) <= NORM_TOL
    else:
        raise ValueError(kind)
    return {"residual": r, "kind": kind, "pass": bool(ok)}


@dataclass
class _Problem:
    """Ekeland problem in original coordinates.

    Gap vectors are ``omega_last + shifts[i] - omega_i``; slot i is localised
    to the open ball of radius ``scales[i]`` around ``centers[i]``.
    """

    sets: list
    shifts: list
    centers: list
    scales: np.ndarray
    a_norm: float  # upper bound for the gap
    d_est: float
    d_lower: float

    def to_dict(self):
        return {
            "sets": [s.to_dict() for s in self.sets],
            "shifts": [a.tolist() for a in self.shifts],
            "centers": [c.tolist() for c in self.centers],
            "scales": self.scales.tolist(),
            "a_norm": self.a_norm,
            "d_est": self.d_est,
            "d_lower": self.d_lower,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            [set_from_dict(s) for s in d["sets"]],
            [np.array(a, dtype=float) for a in d["shifts"]],
            [np.array(c, dtype=float) for c in d["centers"]],
            np.array(d["scales"], dtype=float),
            float(d["a_norm"]),
            float(d["d_est"]),
            float(d["d_lower"]),
        )


TAGS = {
    "T12": {"sup": "T12-2", "window": "T12-3", "slope": "T12-5", "pre": "T12-1"},
    "T14": {"sup": "T14-2", "window": "T14-3", "slope": "T14-5", "pre": "T14-1"},
    "P16": {"sup": "P16-2", "window": "P16-3", "slope": "P16-5", "pre": "P16-1"},
    "P21": {"sup": "P21-2", "window": "P21-3", "slope": "P21-5", "pre": "P21-1"},
}

DUAL_TAGS = {
    "T17": {"primal": "T12", "norm": "T17-1", "cone": "T17-2", "support": "T17-3", "upper": "T17-4",
            "relaxed": "T17-5", "holder": "C4.5-2"},
    "T19": {"primal": "T14", "norm": "T19-1", "cone": "T19-2", "support": "T19-3", "upper": "T19-4",
            "relaxed": "T19-5", "holder": "C4.6-2"},
    "P21": {"primal": "P21", "norm": "T17-1", "cone": "P21-4", "support": "P21-3s", "upper": "P21-4u",
            "relaxed": "P21-5", "holder": "C4.5-2"},
    "ZhNg": {"primal": "P16", "norm": "T17-1", "cone": "ZN-2", "support": "ZN-3", "upper": "ZN-4",
             "relaxed": "ZN-5", "holder": "C4.5-2"},
}


def _gap_vectors(prob: _Problem, omegas):
    last = omegas[-1]
    return [last + s - w for s, w in zip(prob.shifts, omegas[:-1])]


def _pnorm(prob: _Problem, U, W):
    return max(float(np.linalg.norm(u - w)) / s for u, w, s in zip(U, W, prob.scales))


def _probe_tuples(prob: _Problem, omegas, seed, count):
    """Deterministic sample of tuples in the product of the sets."""
    rng = np.random.default_rng(seed)
    n = len(prob.sets)
    out = []
    # best-response moves: close one gap from either side
    gv = _gap_vectors(prob, omegas)
    for i in range(n - 1):
        u = [w.copy() for w in omegas]
        u[i] = prob.sets[i].project(omegas[-1] + prob.shifts[i])
        out.append(u)
        u = [w.copy() for w in omegas]
        u[-1] = prob.sets[-1].project(omegas[-1] - gv[i])
        out.append(u)
    per = max(1, count // len(PROBE_RADII))
    for r in PROBE_RADII:
        for _ in range(per):
            Z = rng.standard_normal((n, omegas[0].size)) * prob.scales[:, None]
            if n > 1 and rng.random() < 0.5:
                Z[np.arange(n) != rng.integers(n)] = 0.0
            out.append([s.project(w + r * z) for s, w, z in zip(prob.sets, omegas, Z)])
    return out


def evaluate_primal(prob: _Problem, omegas, gauge: Gauge, eps, variant, seed, n_probe, tol=DEFAULT_TOL):
    """Residuals of a primal certificate, recomputed from its data."""
    tags = TAGS[variant]
    omegas = [np.asarray(w, dtype=float) for w in omegas]
    inst = MaxGapInstance(prob.shifts)
    gap = inst(omegas)
    checks = {}
    checks["membership"] = _check(tol - max(s.dist(w) for s, w in zip(prob.sets, omegas)), "nonstrict")
    checks["localisation"] = _check(
        1.0 - max(float(np.linalg.norm(w - c)) / s for w, c, s in zip(omegas, prob.centers, prob.scales)),
        "strict",
    )
    checks[tags["window"] + ".lower"] = _check(gap, "strict")
    checks[tags["window"] + ".upper"] = _check(prob.a_norm - gap, "nonstrict")
    phi_gap = gauge.value(gap)
    sup_ratio, loc_ratio = 0.0, 0.0
    for U in _probe_tuples(prob, omegas, seed, n_probe):
        du = _pnorm(prob, U, omegas)
        if du == 0.0:
            continue
        gu = inst(U)
        sup_ratio = max(sup_ratio, (phi_gap - gauge.value(gu)) / du)
        if du <= LOCAL_RADIUS:
            loc_ratio = max(loc_ratio, (gap - gu) / du)
    checks[tags["sup"]] = _check(eps - sup_ratio, "strict")
    der = gauge.derivative(gap) if gap > 0 else math.nan
    if math.isfinite(der):
        checks[tags["slope"]] = _check(eps - (0.0 if der == 0.0 else der * loc_ratio), "strict")
    return gap, checks


def evaluate_dual(prob: _Problem, omegas, duals, gauge: Gauge, eps, tau, variant, tol=DEFAULT_TOL):
    """Residuals of a dual certificate, recomputed from its data."""
    tags = DUAL_TAGS[variant]
    omegas = [np.asarray(w, dtype=float) for w in omegas]
    duals = [np.asarray(x, dtype=float) for x in duals]
    gvs = _gap_vectors(prob, omegas)
    gap = MaxGapInstance(prob.shifts)(omegas)
    lam, eta = float(prob.scales[0]), float(prob.scales[-1])
    checks = {}
    checks[tags["norm"] + ".sum"] = _check(float(np.linalg.norm(np.sum(duals, axis=0))), "norm")
    checks[tags["norm"] + ".norm"] = _check(sum(float(np.linalg.norm(x)) for x in duals[:-1]) - 1.0, "norm")
    head = sum(s.normal_cone_dist(w, x, tol) for s, w, x in zip(prob.sets[:-1], omegas[:-1], duals[:-1]))
    if variant == "T19":
        # the last slot is the ball around xbar; its term is ||sum of the others||
        tail = float(np.linalg.norm(np.sum(duals[:-1], axis=0)))
    else:
        tail = prob.sets[-1].normal_cone_dist(omegas[-1], duals[-1], tol)
    weighted = lam * head + eta * tail
    der = gauge.derivative(gap)
    checks[tags["cone"]] = _check(eps - (0.0 if der == 0.0 else der * weighted), "strict")
    pairing = sum(float(x @ g) for x, g in zip(duals[:-1], gvs))
    checks[tags["support"]] = _check(pairing - gap, "equality")
    checks[tags["relaxed"]] = _check(pairing - tau * gap, "strict")
    bound = gauge.inverse(gauge.value(prob.d_lower) + eps)
    checks[tags["upper"]] = _check(bound - gap, "strict")
    if gauge.kind == "holder":
        checks[tags["holder"]] = _check(eps - gauge.q * gap ** (gauge.q - 1.0) * weighted, "strict")
    return gap, checks


def _merge_checks(primal_checks, dual_checks):
    """Window and membership checks of the primal part followed by the dual checks."""
    out = {k: v for k, v in primal_checks.items()
           if k in ("membership", "localisation") or k.endswith((".lower", ".upper"))}
    out.update(dual_checks)
    return out


def holder_factor(q: float, gap: float) -> float:
    """q * gap^(q-1), the Holder slope factor (alpha = 1)."""
    if gap <= 0:
        raise ValidationError("gap must be positive")
    return q * gap ** (q - 1.0)


@dataclass
class PrimalCertificate:
    variant: str
    omegas: list
    gap: float
    checks: dict
    params: dict
    problem: _Problem = field(repr=False)
    partial: bool = False

    @property
    def residuals(self) -> dict:
        return {k: v["residual"] for k, v in self.checks.items()}

    @property
    def passed(self) -> bool:
        return all(v["pass"] for v in self.checks.values())

    @property
    def failures(self) -> list:
        return [k for k, v in self.checks.items() if not v["pass"]]

    def to_dict(self) -> dict:
        return {
            "type": "primal",
            "variant": self.variant,
            "omegas": [w.tolist() for w in self.omegas],
            "gap": self.gap,
            "checks": self.checks,
            "params": self.params,
            "problem": self.problem.to_dict(),
            "partial": self.partial,
            "passed": self.passed,
        }


@dataclass
class DualCertificate:
    variant: str
    omegas: list
    duals: list
    gap: float
    tau: float
    weights: list
    checks: dict
    params: dict
    primal: PrimalCertificate = field(repr=False)

    @property
    def problem(self):
        return self.primal.problem

    @property
    def residuals(self) -> dict:
        return {k: v["residual"] for k, v in self.checks.items()}

    @property
    def passed(self) -> bool:
        return all(v["pass"] for v in self.checks.values())

    @property
    def failures(self) -> list:
        return [k for k, v in self.checks.items() if not v["pass"]]

    def to_dict(self) -> dict:
        return {
            "type": "dual",
            "variant": self.variant,
            "omegas": [w.tolist() for w in self.omegas],
            "duals": [x.tolist() for x in self.duals],
            "gap": self.gap,
            "tau": self.tau,
            "weights": list(self.weights),
            "checks": self.checks,
            "params": self.params,
            "primal": self.primal.to_dict(),
            "passed": self.passed,
        }


def _gauge_dict(g: Gauge) -> dict:
    return {"kind": "custom"} if g.kind == "custom" else g.to_dict()


def _gauge_for(p, gauge):
    if gauge is not None:
        return gauge
    if p["gauge"]["kind"] == "custom":
        raise ValidationError("pass the custom gauge explicitly to verify this certificate")
    return Gauge.from_dict(p["gauge"])


def verify_primal(data: dict, gauge: Optional[Gauge] = None) -> dict:
    """Re-evaluate a serialised primal certificate; returns ``{name: residual}``."""
    prob = _Problem.from_dict(data["problem"])
    p = data["params"]
    _, checks = evaluate_primal(prob, data["omegas"], _gauge_for(p, gauge), p["eps"], data["variant"],
                                p["seed"], p["n_probe"], p["tol"])
    return {k: v["residual"] for k, v in checks.items()}


def verify_dual(data: dict, gauge: Optional[Gauge] = None) -> dict:
    """Re-evaluate a serialised dual certificate; returns ``{name: residual}``."""
    prob = _Problem.from_dict(data["primal"]["problem"])
    p = data["params"]
    g = _gauge_for(p, gauge)
    _, pchecks = evaluate_primal(prob, data["omegas"], g, p["eps"], data["primal"]["variant"], p["seed"],
                                 p["n_probe"], p["tol"])
    _, checks = evaluate_dual(prob, data["omegas"], data["duals"], g, p["eps"], data["tau"], data["variant"],
                              p["tol"])
    return {k: v["residual"] for k, v in _merge_checks(pchecks, checks).items()}


def verify_certificate(cert, gauge: Optional[Gauge] = None) -> dict:
    """Independent re-evaluation of a certificate (object or serialised dict).

    The certificate is serialised and the sets rebuilt from their
    dictionaries before the residuals are recomputed.
    """
    data = cert if isinstance(cert, dict) else json.loads(json.dumps(cert.to_dict()))
    return verify_primal(data, gauge) if data["type"] == "primal" else verify_dual(data, gauge)


# ---------------------------------------------------------------------------
# primal certificates


def _build_problem(coll: Collection, gauge, eps, lam, eta, variant, rho, base_points, region, h):
    """Set up the Ekeland problem and check the variant's hypotheses."""
    dim = coll.dim
    n = coll.n
    if variant in ("T12", "T14"):
        if coll.common_point is None:
            raise PreconditionError("a common point is required", inequality=TAGS[variant]["pre"])
        xbar = coll.common_point
    if variant == "T12":
        a = coll.asymmetric_shifts()
        shifted = [Translate(s, ai) for s, ai in zip(coll.sets[:-1], a)] + [coll.sets[-1]]
        _certify_disjoint(shifted, region, h, "P10-1")
        d_est, d_lo = _index_for(shifted, region, h)
        a_norm = max(float(np.linalg.norm(ai)) for ai in a)
        sets = list(coll.sets)
        shifts = a
        centers = [xbar] * n
        scales = np.array([lam] * (n - 1) + [eta], dtype=float)
    elif variant == "T14":
        if rho is None:
            raise ValidationError("T14 needs rho")
        rho = float(rho)
        if not rho > eta:
            raise PreconditionError(f"rho = {rho} must exceed eta = {eta}", inequality="T14")
        a = coll.symmetric_shifts()
        shifted = [Translate(s, ai) for s, ai in zip(coll.sets, a)]
        if math.isfinite(rho):
            _certify_disjoint(shifted + [Ball(xbar, rho)], (xbar, rho), h, "D1-3")
        else:
            _certify_disjoint(shifted, region, h, "D1-3")
        ball = Ball(xbar, eta)
        d_est, d_lo = _index_for(shifted + [ball], region, h)
        a_norm = max(float(np.linalg.norm(ai)) for ai in a)
        sets = list(coll.sets) + [ball]
        shifts = a
        centers = [xbar] * (n + 1)
        scales = np.array([lam] * n + [eta], dtype=float)
    elif variant in ("P16", "P21"):
        if base_points is None:
            raise ValidationError(f"{variant} needs base points")
        w = as_tuple(base_points, n)
        for i, (s, wi) in enumerate(zip(coll.sets, w)):
            if not s.contains(wi, coll.tol):
                raise PreconditionError(f"base point {i + 1} is not in its set", inequality=variant)
        if variant == "P16":
            _certify_disjoint(list(coll.sets), region, h, "P16")
            d_est, d_lo = _index_for(list(coll.sets), region, h)
            shifts = [np.zeros(dim) for _ in range(n - 1)]
            a_norm = max(float(np.linalg.norm(w[-1] - wi)) for wi in w[:-1])
        else:
            a = coll.asymmetric_shifts()
            moved = [Translate(s, wi + ai) for s, wi, ai in zip(coll.sets[:-1], w[:-1], a)]
            moved.append(Translate(coll.sets[-1], w[-1]))
            _certify_disjoint(moved, None if region is None else (region[0] - w[-1], region[1]), h, "P21")
            d_est, d_lo = _index_for(moved, None if region is None else (region[0] - w[-1], region[1]), h)
            shifts = asymmetric_reduce(a, w)
            a_norm = max(float(np.linalg.norm(ai)) for ai in a)
        sets = list(coll.sets)
        centers = list(w)
        scales = np.array([lam] * (n - 1) + [eta], dtype=float)
    else:
        raise ValidationError(f"unknown primal variant {variant!r}")
    shifts = [np.asarray(s, float) for s in shifts]
    centers = [np.asarray(c, float) for c in centers]
    # the gap at the start tuple equals a_norm in exact arithmetic; using the
    # evaluated value keeps the upper window exact in floating point
    start_gap = MaxGapInstance(shifts)(centers)
    if abs(start_gap - a_norm) > 1e-12 * max(1.0, a_norm):
        raise ValidationError("start tuple does not reproduce the shift norm")
    return _Problem(sets, shifts, centers, scales, start_gap, float(d_est), float(d_lo))


def primal_certificate(
    coll: Collection,
    gauge: Gauge,
    eps: float,
    lam: float,
    eta: float,
    variant: str = "T12",
    rho: Optional[float] = None,
    base_points=None,
    region=None,
    h: float = 0.05,
    seed: int = 0,
    budget: int = 30_000,
    n_probe: int = 2000,
    tol: float = DEFAULT_TOL,
) -> PrimalCertificate:
    """Slope certificate for a non-intersection property.

    Parameters
    ----------
    coll : Collection
        Sets, shifts and (for T12/T14) the common point.
    gauge : Gauge
    eps, lam, eta : float
        Tolerance and localisation radii.
    variant : {"T12", "T14", "P16", "P21"}
        ``T12``: n-1 shifts, last set fixed.  ``T14``: n shifts, a closed
        ball of radius `eta` around the common point is appended as an extra
        set (needs ``rho > eta``).  ``P16``: no common point; `base_points`
        supply the reference tuple.  ``P21``: base points plus shifts.
    region : (center, radius), optional
        Needed to certify non-intersection of unbounded sets.

    Raises
    ------
    PreconditionError
        When non-intersection is not certified or the gauge inequality
        (``T12-1`` and its analogues) fails.
    """
    if not (eps > 0 and lam > 0 and eta > 0):
        raise ValidationError("eps, lam and eta must be positive")
    region = _parse_region(region, coll.dim)
    prob = _build_problem(coll, gauge, eps, lam, eta, variant, rho, base_points, region, h)
    tag = TAGS[variant]["pre"]
    lhs = gauge.value(prob.a_norm)
    rhs = gauge.value(prob.d_lower)
    if not lhs < rhs + eps:
        raise PreconditionError(f"phi(max|a|) = {lhs:.6g} is not below phi(d) + eps = {rhs + eps:.6g}",
                                inequality=tag)
    # any eps' in ]lhs - rhs, eps[ works; take the midpoint
    eps_p = 0.5 * (max(lhs - rhs, 0.0) + eps)
    inst = MaxGapInstance(prob.shifts)
    fn = lambda U: gauge.value(inst(U))
    norm = ProductNorm(lam, eta, len(prob.sets))
    # certify against the same probe family the evaluator uses
    res = ekeland_search(fn, prob.sets, prob.centers, eps=eps_p, lam=1.0, norm=norm, inf_estimate=rhs,
                         budget=budget, seed=seed, tol=tol,
                         candidates=lambda X: _probe_tuples(prob, X, seed, n_probe))
    omegas = res.point
    gap, checks = evaluate_primal(prob, omegas, gauge, eps, variant, seed, n_probe, tol)
    params = {
        "eps": eps, "eps_prime": eps_p, "lam": lam, "eta": eta, "rho": rho, "gauge": _gauge_dict(gauge),
        "seed": seed, "n_probe": n_probe, "tol": tol, "budget": budget, "precondition": {tag: rhs + eps - lhs},
        "ekeland": {"iterations": res.iterations, "evaluations": res.evaluations, "min_slack": res.min_slack,
                    "certified_on_sample": res.certified},
    }
    return PrimalCertificate(variant, omegas, gap, checks, params, prob,
                             partial=not res.certified or res.budget_exhausted)


# ---------------------------------------------------------------------------
# dual certificates


def _optimal_weights(prob, omegas, active, tol):
    """Active weights minimising the weighted normal-cone distance."""
    idx = np.flatnonzero(active)
    gvs = _gap_vectors(prob, omegas)
    units = [gvs[i] / np.linalg.norm(gvs[i]) for i in idx]
    lam, eta = float(prob.scales[0]), float(prob.scales[-1])

    def cost(w):
        w = np.abs(w) / np.abs(w).sum()
        xs = [wi * u for wi, u in zip(w, units)]
        head = sum(prob.sets[i].normal_cone_dist(omegas[i], x, tol) for i, x in zip(idx, xs))
        tail = prob.sets[-1].normal_cone_dist(omegas[-1], -np.sum(xs, axis=0), tol)
        return lam * head + eta * tail

    w0 = np.full(idx.size, 1.0 / idx.size)
    res = minimize(cost, w0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14})
    w = np.abs(res.x) / np.abs(res.x).sum() if cost(res.x) < cost(w0) else w0
    full = np.zeros(len(prob.shifts))
    full[idx] = w
    return full / full.sum()


def dual_certificate(
    coll: Collection,
    gauge: Gauge,
    eps: float,
    lam: float,
    eta: float,
    tau: float = 0.99,
    variant: str = "T17",
    rho: Optional[float] = None,
    base_points=None,
    weights: str = "uniform",
    region=None,
    h: float = 0.05,
    seed: int = 0,
    budget: int = 30_000,
    n_probe: int = 2000,
    tol: float = DEFAULT_TOL,
) -> DualCertificate:
    """Dual (normal-cone) certificate built on a primal one.

    `variant` is one of ``T17`` (common point, n-1 shifts), ``T19`` (ball
    augmentation, n shifts, `rho`), ``P21`` (base points and shifts) or
    ``ZhNg`` (base points only).  Dual vectors are
    ``x_i* = w_i (omega_n + a_i - omega_i) / gap_i`` on active indices, and
    ``x_n* = -sum``; normal cones are taken at the certified points.
    """
    if not 0 < tau < 1:
        raise ValidationError("tau must lie in ]0, 1[")
    if variant not in DUAL_TAGS:
        raise ValidationError(f"unknown dual variant {variant!r}")
    pc = primal_certificate(coll, gauge, eps, lam, eta, DUAL_TAGS[variant]["primal"], rho, base_points, region,
                            h, seed, budget, n_probe, tol)
    prob = pc.problem
    inst = MaxGapInstance(prob.shifts)
    g = inst.gaps(pc.omegas)
    active = g >= g.max() * (1.0 - 1e-9)
    if weights == "uniform":
        w = active / active.sum()
    elif weights == "optimal":
        w = _optimal_weights(prob, pc.omegas, active, tol)
    else:
        raise ValidationError("weights must be 'uniform' or 'optimal'")
    duals = [-x for x in maxgap_subdiff(inst, pc.omegas, w)]
    gap, checks = evaluate_dual(prob, pc.omegas, duals, gauge, eps, tau, variant, tol)
    merged = _merge_checks(pc.checks, checks)
    params = dict(pc.params)
    return DualCertificate(variant, pc.omegas, duals, gap, tau, [float(x) for x in w], merged, params, pc)


def holder_certificate(coll: Collection, q: float, alpha: float, eps: float, lam: float, eta: float,
                       tau: float = 0.99, variant: str = "T17", **kw) -> DualCertificate:
    """:func:`dual_certificate` with the Holder gauge ``t^q / alpha``."""
    return dual_certificate(coll, Gauge.holder(q, alpha), eps, lam, eta, tau, variant, **kw)


# ---------------------------------------------------------------------------
# stationarity probe


def _translation_candidates(n, dim, size, rng, n_dirs=16):
    if dim == 2:
        ang = 2 * np.pi * np.arange(n_dirs) / n_dirs
        dirs = np.column_stack([np.cos(ang), np.sin(ang)])
    else:
        dirs = np.vstack([np.eye(dim), -np.eye(dim), rng.standard_normal((n_dirs, dim))])
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    for d in dirs:
        for i in range(n - 1):
            a = [np.zeros(dim) for _ in range(n - 1)]
            a[i] = size * d
            yield a
        if n > 2:
            yield [size * d for _ in range(n - 1)]


def _disjoint_near(sets, shifts, center, rho, h):
    moved = [Translate(s, a) for s, a in zip(sets[:-1], shifts)] + [sets[-1]]
    if math.isinf(rho):
        if len(moved) == 2 and all(s.convex for s in moved):
            res = index_details(moved, "exact2", max_iter=20_000)
            return res.kind == "exact" and res.converged and res.value > 1e-9
        return False
    out = check_nonintersection(Collection(moved + [Ball(center, rho)]), region=(center, rho), h=h)
    return out.status == "certified-disjoint"


def stationarity_probe(coll: Collection, eps_list, region, h: float = 0.05, seed: int = 0,
                       rho_list=None) -> dict:
    """Per-epsilon grid search for non-intersection witnesses of the four properties.

    Translations are searched on the asymmetric form (last set fixed).
    A found witness is a proof up to the grid certification; not finding one
    is evidence only.  For the approximate-stationarity item the points
    omega_i are drawn from the common point and boundary-biased projections
    of a circle of radius eps/2 around it.
    """
    if coll.n < 2:
        raise ValidationError("need n >= 2 sets")
    if coll.common_point is None:
        raise PreconditionError("stationarity probe needs a common point")
    if region is None:
        raise PreconditionError("stationarity probe needs a bounded search region")
    c, R = _parse_region(region, coll.dim)
    xbar = coll.common_point
    rng = np.random.default_rng(seed)
    eps_list = [float(e) for e in eps_list]
    if any(a <= b for a, b in zip(eps_list, eps_list[1:])) or any(e <= 0 for e in eps_list):
        raise ValidationError("eps_list must be positive and decreasing")
    sets, n, dim = coll.sets, coll.n, coll.dim
    rho_list = rho_list or [R, R / 2, R / 4]

    def search(size, rho, hh, base=None):
        base_sets = sets if base is None else [Translate(s, w) for s, w in zip(sets, base)]
        ctr = xbar if base is None else np.zeros(dim)
        for a in _translation_candidates(n, dim, size, rng):
            if _disjoint_near(base_sets, a, ctr, rho, hh):
                return [ai.tolist() for ai in a]
        return None

    report = {"extremal": [], "locally_extremal": [], "stationary": [], "approx_stationary": [],
              "note": "grid non-discovery is evidence, not proof, of failure"}
    for e in eps_list:
        size = 0.9 * e
        hh = min(h, 0.3 * size / math.sqrt(dim))
        a = search(size, R, hh)
        report["extremal"].append({"eps": e, "found": a is not None, "shifts": a, "rho": R})
    for rho in rho_list:
        for e in eps_list:
            size = 0.9 * e
            hh = min(h, 0.3 * size / math.sqrt(dim), rho / 4)
            a = search(size, rho, hh)
            report["locally_extremal"].append({"eps": e, "found": a is not None, "shifts": a, "rho": rho})
    for e in eps_list:
        row = {"eps": e, "found": False, "shifts": None, "rho": None}
        for rho in (0.5 * e, 0.25 * e):
            size = 0.9 * e * rho
            hh = min(h, 0.3 * size / math.sqrt(dim), rho / 4)
            a = search(size, rho, hh)
            if a is not None:
                row.update(found=True, shifts=a, rho=rho)
                break
        report["stationary"].append(row)
    for e in eps_list:
        row = {"eps": e, "found": False, "shifts": None, "rho": None, "omegas": None}
        pool = [[xbar] * n]
        ang = np.linspace(0, 2 * np.pi, 8, endpoint=False)
        for t in ang:
            p = xbar + 0.5 * e * np.concatenate([[np.cos(t), np.sin(t)], np.zeros(dim - 2)])[:dim]
            for i in range(n):
                w = [xbar] * n
                w[i] = sets[i].project(p)
                if np.linalg.norm(w[i] - xbar) < e:
                    pool.append(w)
        for base in pool:
            for rho in (0.5 * e,):
                size = 0.9 * e * rho
                hh = min(h, 0.3 * size / math.sqrt(dim), rho / 4)
                a = search(size, rho, hh, base=base)
                if a is not None:
                    row.update(found=True, shifts=a, rho=rho, omegas=[np.asarray(w).tolist() for w in base])
                    break
            if row["found"]:
                break
        report["approx_stationary"].append(row)
    return report
