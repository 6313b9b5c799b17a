"""Closed-set descriptors with projection, distance and normal-cone oracles.

Every descriptor is immutable and describes a nonempty closed subset of R^d.
Convex descriptors have a unique metric projection; :class:`FinitePointSet`
breaks ties by lowest index.  Normal cones are the convex-analysis ones (on
convex sets they coincide with the Frechet cone); for a finite point set the
cone at any of its points is the whole space.
"""

from __future__ import annotations

import itertools
import math
from typing import Optional

import numpy as np
from scipy.optimize import linprog, minimize_scalar

from . import _kernels_py
from ._backend import kernels
from .core import DEFAULT_TOL, as_vector
from .errors import DimensionError, PreconditionError, UnsupportedMethodError, ValidationError

K = _kernels_py  # kind constants


class ClosedSet:
    """Base class of all set descriptors."""

    dim: int
    convex = True
    exact_projection = True

    def project(self, x) -> np.ndarray:
        raise NotImplementedError

    def dist(self, x) -> float:
        x = self._vec(x)
        return float(np.linalg.norm(x - self.project(x)))

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        return self.dist(x) <= tol

    def normal_cone_dist(self, w, v, tol: float = DEFAULT_TOL) -> float:
        """Distance from `v` to the normal cone of the set at `w`."""
        w = self._vec(w)
        v = self._vec(v)
        if not self.contains(w, tol):
            raise PreconditionError(
                f"normal cone requested at a point outside the set (distance {self.dist(w):.3e})"
            )
        return self._cone_dist(w, v, tol)

    def _cone_dist(self, w, v, tol) -> float:
        raise UnsupportedMethodError(f"normal cone not available for {type(self).__name__}")

    def kernel_spec(self, shift=None):
        """Return ``(kind, params)`` for the compiled kernels, or None."""
        return None

    def bounding_box(self):
        """``(lo, hi)`` of an axis-aligned box containing the set, or None if unbounded."""
        return None

    def to_dict(self) -> dict:
        raise NotImplementedError

    def translate(self, by) -> "Translate":
        return Translate(self, by)

    def _vec(self, x) -> np.ndarray:
        return as_vector(x, self.dim)

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


def _ray_dist(v, g) -> float:
    """Distance from v to the ray {t g : t >= 0}."""
    gg = float(g @ g)
    if gg == 0.0:
        return float(np.linalg.norm(v))
    t = max(0.0, float(v @ g) / gg)
    return float(np.linalg.norm(v - t * g))


def cone_dist(generators, v) -> float:
    """Distance from `v` to the cone generated by the rows of `generators`.

    Exact: enumerates linearly independent generator subsets; the projection
    onto a polyhedral cone is the projection onto the span of one of them
    with nonnegative coefficients.
    """
    v = np.asarray(v, dtype=float)
    G = np.asarray(generators, dtype=float).reshape(-1, v.size)
    best = float(np.linalg.norm(v))
    d = v.size
    for k in range(1, min(d, len(G)) + 1):
        for idx in itertools.combinations(range(len(G)), k):
            Gs = G[list(idx)]
            if np.linalg.matrix_rank(Gs) < k:
                continue
            coef, *_ = np.linalg.lstsq(Gs.T, v, rcond=None)
            if np.all(coef >= -1e-14):
                best = min(best, float(np.linalg.norm(v - Gs.T @ np.maximum(coef, 0.0))))
    return best


# ---------------------------------------------------------------------------
# primitive variants


class Halfspace(ClosedSet):
    """{x : <normal, x> <= offset}."""

    def __init__(self, normal, offset):
        self.normal = as_vector(normal)
        if not np.any(self.normal):
            raise ValidationError("halfspace normal must be nonzero")
        self.offset = float(offset)
        self.dim = self.normal.size
        self._nn = float(np.linalg.norm(self.normal))

    def project(self, x):
        x = self._vec(x)
        viol = float(self.normal @ x) - self.offset
        if viol <= 0:
            return x.copy()
        return x - viol / self._nn**2 * self.normal

    def dist(self, x):
        x = self._vec(x)
        return max(0.0, float(self.normal @ x) - self.offset) / self._nn

    def _cone_dist(self, w, v, tol):
        if (float(self.normal @ w) - self.offset) / self._nn < -tol:
            return float(np.linalg.norm(v))
        return _ray_dist(v, self.normal)

    def kernel_spec(self, shift=None):
        c = self.offset if shift is None else self.offset - float(self.normal @ shift)
        return K.HALFSPACE, np.append(self.normal, c)

    def to_dict(self):
        return {"type": "halfspace", "normal": self.normal.tolist(), "offset": self.offset}


class Hyperplane(ClosedSet):
    """{x : <normal, x> = offset}."""

    def __init__(self, normal, offset):
        self.normal = as_vector(normal)
        if not np.any(self.normal):
            raise ValidationError("hyperplane normal must be nonzero")
        self.offset = float(offset)
        self.dim = self.normal.size
        self._nn = float(np.linalg.norm(self.normal))

    def project(self, x):
        x = self._vec(x)
        return x - (float(self.normal @ x) - self.offset) / self._nn**2 * self.normal

    def dist(self, x):
        x = self._vec(x)
        return abs(float(self.normal @ x) - self.offset) / self._nn

    def _cone_dist(self, w, v, tol):
        return float(np.linalg.norm(v - float(v @ self.normal) / self._nn**2 * self.normal))

    def kernel_spec(self, shift=None):
        c = self.offset if shift is None else self.offset - float(self.normal @ shift)
        return K.HYPERPLANE, np.append(self.normal, c)

    def to_dict(self):
        return {"type": "hyperplane", "normal": self.normal.tolist(), "offset": self.offset}


class AffineSubspace(ClosedSet):
    """point + span(basis), with an orthonormal basis (possibly empty)."""

    def __init__(self, point, basis=()):
        self.point = as_vector(point)
        self.dim = self.point.size
        b = np.array(basis, dtype=float).reshape(-1, self.dim) if len(basis) else np.zeros((0, self.dim))
        if b.shape[0] > self.dim:
            raise ValidationError("more basis vectors than the ambient dimension")
        if not np.allclose(b @ b.T, np.eye(b.shape[0]), atol=1e-9):
            raise ValidationError("affine subspace basis must be orthonormal")
        self.basis = b

    @classmethod
    def line(cls, point, direction):
        d = as_vector(direction)
        return cls(point, [d / np.linalg.norm(d)])

    def project(self, x):
        x = self._vec(x)
        return self.point + self.basis.T @ (self.basis @ (x - self.point))

    def _cone_dist(self, w, v, tol):
        return float(np.linalg.norm(self.basis @ v))

    def kernel_spec(self, shift=None):
        p = self.point if shift is None else self.point - shift
        return K.AFFINE, np.concatenate([p, [self.basis.shape[0]], self.basis.ravel()])

    def bounding_box(self):
        if self.basis.shape[0] == 0:
            return self.point.copy(), self.point.copy()
        return None

    def to_dict(self):
        return {"type": "affine", "point": self.point.tolist(), "basis": self.basis.tolist()}


class Ball(ClosedSet):
    """Closed Euclidean ball."""

    def __init__(self, center, radius):
        self.center = as_vector(center)
        self.radius = float(radius)
        if not self.radius >= 0:
            raise ValidationError("ball radius must be nonnegative")
        self.dim = self.center.size

    def project(self, x):
        x = self._vec(x)
        diff = x - self.center
        nrm = float(np.linalg.norm(diff))
        if nrm <= self.radius:
            return x.copy()
        return self.center + self.radius / nrm * diff

    def dist(self, x):
        x = self._vec(x)
        return max(0.0, float(np.linalg.norm(x - self.center)) - self.radius)

    def _cone_dist(self, w, v, tol):
        g = w - self.center
        if float(np.linalg.norm(g)) < self.radius - tol:
            return float(np.linalg.norm(v))
        if self.radius <= tol:
            return 0.0  # degenerate ball: a single point
        return _ray_dist(v, g)

    def kernel_spec(self, shift=None):
        c = self.center if shift is None else self.center - shift
        return K.BALL, np.append(c, self.radius)

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def to_dict(self):
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}


class Box(ClosedSet):
    """{x : lo <= x <= hi} componentwise."""

    def __init__(self, lo, hi):
        self.lo = as_vector(lo)
        self.hi = as_vector(hi, self.lo.size)
        if np.any(self.lo > self.hi):
            raise ValidationError("box requires lo <= hi componentwise")
        self.dim = self.lo.size

    def project(self, x):
        return np.clip(self._vec(x), self.lo, self.hi)

    def _cone_dist(self, w, v, tol):
        at_lo = w <= self.lo + tol
        at_hi = w >= self.hi - tol
        res = np.where(at_lo & at_hi, 0.0, v)
        res = np.where(at_lo & ~at_hi, np.maximum(v, 0.0), res)
        res = np.where(at_hi & ~at_lo, np.minimum(v, 0.0), res)
        return float(np.linalg.norm(res))

    def kernel_spec(self, shift=None):
        s = 0.0 if shift is None else shift
        return K.BOX, np.concatenate([self.lo - s, self.hi - s])

    def bounding_box(self):
        return self.lo.copy(), self.hi.copy()

    def to_dict(self):
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class _Polyhedron:
    """Exact projection onto {x : A x <= b} by active-set enumeration."""

    def __init__(self, A, b):
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)
        m, d = self.A.shape
        self.groups = []
        for k in range(1, min(m, d) + 1):
            idx, mats = [], []
            for S in itertools.combinations(range(m), k):
                As = self.A[list(S)]
                gram = As @ As.T
                if np.linalg.matrix_rank(gram) < k:
                    continue
                idx.append(S)
                mats.append(As.T @ np.linalg.inv(gram))
            if idx:
                self.groups.append((np.array(idx), np.array(mats)))
        self._feas_tol = 1e-12 * (1.0 + np.abs(self.b))

    def feasible(self, X):
        return np.all(X @ self.A.T <= self.b + self._feas_tol, axis=-1)

    def project_many(self, X, chunk=2048):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = X.copy()
        for start in range(0, len(X), chunk):
            out[start:start + chunk] = self._project_chunk(X[start:start + chunk])
        return out

    def _project_chunk(self, X):
        best = X.copy()
        best_d = np.where(self.feasible(X), 0.0, np.inf)
        for idx, mats in self.groups:
            # residual of the active constraints, shape (m, C, k)
            r = np.einsum("cki,mi->mck", self.A[idx], X) - self.b[idx][None]
            Y = X[:, None, :] - np.einsum("cik,mck->mci", mats, r)
            dd = np.sqrt(((Y - X[:, None, :]) ** 2).sum(axis=-1))
            dd = np.where(self.feasible(Y), dd, np.inf)
            j = np.argmin(dd, axis=1)
            rows = np.arange(len(X))
            cand = dd[rows, j]
            better = cand < best_d
            best_d = np.where(better, cand, best_d)
            best[better] = Y[rows, j][better]
        return best

    def active(self, w, tol):
        nrm = np.linalg.norm(self.A, axis=1)
        return (self.A @ w - self.b) / nrm >= -tol


class Polytope(ClosedSet):
    """Bounded intersection of at most 16 halfspaces in dimension <= 3."""

    MAX_FACETS = 16
    MAX_DIM = 3

    def __init__(self, halfspaces):
        hs = [h if isinstance(h, Halfspace) else Halfspace(h["normal"], h["offset"]) for h in halfspaces]
        if not hs:
            raise ValidationError("polytope needs at least one halfspace")
        dims = {h.dim for h in hs}
        if len(dims) != 1:
            raise DimensionError("polytope halfspaces must share a dimension")
        self.dim = dims.pop()
        if self.dim > self.MAX_DIM or len(hs) > self.MAX_FACETS:
            raise ValidationError(f"polytope limited to dim <= {self.MAX_DIM}, <= {self.MAX_FACETS} facets")
        self.halfspaces = hs
        A = np.array([h.normal for h in hs])
        b = np.array([h.offset for h in hs])
        self._poly = _Polyhedron(A, b)
        self._check_bounded(A)
        self.vertices = self._enumerate_vertices(A, b)
        if len(self.vertices) == 0:
            raise ValidationError("polytope is empty (no feasible vertex)")

    @classmethod
    def from_inequalities(cls, A, b):
        return cls([Halfspace(a, c) for a, c in zip(np.asarray(A, float), np.asarray(b, float))])

    @staticmethod
    def _check_bounded(A):
        d = A.shape[1]
        for j in range(d):
            for sgn in (1.0, -1.0):
                c = np.zeros(d)
                c[j] = -sgn
                res = linprog(c, A_ub=A, b_ub=np.zeros(len(A)), bounds=[(-1, 1)] * d, method="highs")
                if res.status == 0 and -res.fun > 1e-9:
                    raise ValidationError("polytope halfspaces do not describe a bounded set")

    def _enumerate_vertices(self, A, b):
        d = self.dim
        verts = []
        for S in itertools.combinations(range(len(A)), d):
            As = A[list(S)]
            if abs(np.linalg.det(As)) < 1e-12:
                continue
            x = np.linalg.solve(As, b[list(S)])
            if np.all(A @ x <= b + 1e-9 * (1 + np.abs(b))):
                verts.append(x)
        return np.unique(np.round(np.array(verts), 12), axis=0) if verts else np.zeros((0, d))

    def project(self, x):
        return self._poly.project_many(self._vec(x)[None])[0]

    def project_many(self, X):
        return self._poly.project_many(X)

    def _cone_dist(self, w, v, tol):
        act = self._poly.active(w, tol)
        return cone_dist(self._poly.A[act], v)

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def to_dict(self):
        return {
            "type": "polytope",
            "halfspaces": [{"normal": h.normal.tolist(), "offset": h.offset} for h in self.halfspaces],
        }


class AbsEpigraph(ClosedSet):
    """{(u, v) in R^2 : v >= |u| + shift}."""

    dim = 2

    def __init__(self, shift=0.0):
        self.shift = float(shift)
        if not math.isfinite(self.shift):
            raise ValidationError("shift must be finite")
        self._A = np.array([[1.0, -1.0], [-1.0, -1.0]])
        self._b = np.array([-self.shift, -self.shift])

    def project(self, x):
        return K._project_absepi(self.shift, self._vec(x))

    def dist(self, x):
        x = self._vec(x)
        if x[1] >= abs(x[0]) + self.shift:
            return 0.0
        return float(np.linalg.norm(x - self.project(x)))

    def _cone_dist(self, w, v, tol):
        act = (self._A @ w - self._b) / math.sqrt(2.0) >= -tol
        return cone_dist(self._A[act], v)

    def kernel_spec(self, shift=None):
        if shift is not None and np.any(shift):
            return None
        return K.ABSEPI, np.array([self.shift])

    def to_dict(self):
        return {"type": "abs_epigraph", "shift": self.shift}


class FinitePointSet(ClosedSet):
    """Finitely many points; nearest-point ties go to the lowest index."""

    def __init__(self, points):
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None]
        if pts.size == 0 or len(pts) == 0:
            raise ValidationError("point set must be nonempty")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("points must be finite")
        self.points = pts
        self.dim = pts.shape[1]
        self.convex = len(pts) == 1

    def project(self, x):
        x = self._vec(x)
        d2 = ((self.points - x) ** 2).sum(axis=1)
        return self.points[int(np.argmin(d2))].copy()

    def _cone_dist(self, w, v, tol):
        return 0.0  # isolated points: the normal cone is the whole space

    def kernel_spec(self, shift=None):
        pts = self.points if shift is None else self.points - shift
        return K.POINTS, np.concatenate([[len(pts)], pts.ravel()])

    def bounding_box(self):
        return self.points.min(axis=0), self.points.max(axis=0)

    def to_dict(self):
        return {"type": "points", "points": self.points.tolist()}


class Translate(ClosedSet):
    """The set ``inner - by``."""

    def __init__(self, inner: ClosedSet, by):
        self.inner = inner
        self.dim = inner.dim
        self.by = as_vector(by, inner.dim)
        self.convex = inner.convex
        self.exact_projection = inner.exact_projection

    def project(self, x):
        x = self._vec(x)
        return self.inner.project(x + self.by) - self.by

    def dist(self, x):
        return self.inner.dist(self._vec(x) + self.by)

    def contains(self, x, tol=DEFAULT_TOL):
        return self.inner.contains(self._vec(x) + self.by, tol)

    def _cone_dist(self, w, v, tol):
        return self.inner._cone_dist(w + self.by, v, tol)

    def kernel_spec(self, shift=None):
        s = self.by if shift is None else self.by + shift
        return self.inner.kernel_spec(s)

    def bounding_box(self):
        bb = self.inner.bounding_box()
        return None if bb is None else (bb[0] - self.by, bb[1] - self.by)

    def to_dict(self):
        return {"type": "translate", "inner": self.inner.to_dict(), "by": self.by.tolist()}


class BallRestriction(ClosedSet):
    """``inner`` intersected with a closed ball; convex `inner` only.

    The projection is computed by Dykstra's alternating scheme and is
    therefore approximate (``exact_projection`` is False).
    """

    exact_projection = False
    CUTOFF = 1e-12
    MAX_SWEEPS = 100_000

    def __init__(self, inner: ClosedSet, center, radius):
        if not inner.convex:
            raise UnsupportedMethodError("ball restriction is implemented for convex inner sets only")
        self.inner = inner
        self.ball = Ball(center, radius)
        if self.ball.dim != inner.dim:
            raise DimensionError("ball and inner set dimensions differ")
        self.dim = inner.dim
        if inner.dist(self.ball.center) > self.ball.radius + DEFAULT_TOL:
            raise ValidationError("ball restriction is empty")

    @property
    def center(self):
        return self.ball.center

    @property
    def radius(self):
        return self.ball.radius

    def project(self, x):
        x = self._vec(x)
        y = x.copy()
        p = np.zeros_like(x)
        q = np.zeros_like(x)
        for _ in range(self.MAX_SWEEPS):
            z = self.inner.project(y + p)
            p = y + p - z
            y_new = self.ball.project(z + q)
            q = z + q - y_new
            if np.linalg.norm(y_new - y) <= self.CUTOFF and np.linalg.norm(y_new - z) <= self.CUTOFF:
                return y_new
            y = y_new
        return y

    def contains(self, x, tol=DEFAULT_TOL):
        return self.inner.contains(x, tol) and self.ball.contains(x, tol)

    def _cone_dist(self, w, v, tol):
        g = w - self.ball.center
        if float(np.linalg.norm(g)) < self.ball.radius - tol:
            return self.inner._cone_dist(w, v, tol)
        # N = N_inner(w) + R_+ g ; minimise the convex map t -> d(v - t g, N_inner(w))
        h = lambda t: self.inner._cone_dist(w, v - t * g, tol)
        hi = max(1.0, float(np.linalg.norm(v)) / max(float(np.linalg.norm(g)), 1e-300))
        for _ in range(60):
            if h(2 * hi) >= h(hi):
                break
            hi *= 2
        res = minimize_scalar(h, bounds=(0.0, 2 * hi), method="bounded", options={"xatol": 1e-13})
        return float(min(res.fun, h(0.0)))

    def bounding_box(self):
        lo, hi = self.ball.bounding_box()
        bb = self.inner.bounding_box()
        if bb is not None:
            lo, hi = np.maximum(lo, bb[0]), np.minimum(hi, bb[1])
        return lo, hi

    def to_dict(self):
        return {
            "type": "ball_restriction",
            "inner": self.inner.to_dict(),
            "center": self.ball.center.tolist(),
            "radius": self.ball.radius,
        }


# ---------------------------------------------------------------------------
# functional interface


def project(s: ClosedSet, x) -> np.ndarray:
    return s.project(x)


def dist(s: ClosedSet, x) -> float:
    return s.dist(x)


def normal_cone_dist(s: ClosedSet, w, v, tol: float = DEFAULT_TOL) -> float:
    return s.normal_cone_dist(w, v, tol)


def product_normal_cone_check(s1, s2, w1, w2, v1, v2, tol: float = DEFAULT_TOL) -> bool:
    """Is ``(v1, v2)`` in the normal cone of ``s1 x s2`` at ``(w1, w2)``?

    The normal cone of a product is the product of the normal cones.
    """
    return s1.normal_cone_dist(w1, v1, tol) <= tol and s2.normal_cone_dist(w2, v2, tol) <= tol


def project_many(s: ClosedSet, X) -> np.ndarray:
    """Project each row of `X`; uses the compiled kernels where possible."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != s.dim:
        raise DimensionError(f"points have dimension {X.shape[1]}, set has {s.dim}")
    enc = s.kernel_spec()
    if enc is not None:
        return kernels.project_points(enc[0], enc[1], X)
    if isinstance(s, Polytope):
        return s.project_many(X)
    if isinstance(s, Translate) and isinstance(s.inner, Polytope):
        return s.inner.project_many(X + s.by) - s.by
    return np.array([s.project(x) for x in X]).reshape(X.shape)


def dist_many(s: ClosedSet, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    enc = s.kernel_spec()
    if enc is not None and X.shape[1] == s.dim:
        return kernels.dist_points(enc[0], enc[1], X)
    return np.sqrt(((X - project_many(s, X)) ** 2).sum(axis=1))


_REGISTRY = {
    "halfspace": lambda d: Halfspace(d["normal"], d["offset"]),
    "hyperplane": lambda d: Hyperplane(d["normal"], d["offset"]),
    "affine": lambda d: AffineSubspace(d["point"], d.get("basis", [])),
    "ball": lambda d: Ball(d["center"], d["radius"]),
    "box": lambda d: Box(d["lo"], d["hi"]),
    "polytope": lambda d: Polytope(d["halfspaces"]),
    "abs_epigraph": lambda d: AbsEpigraph(d["shift"]),
    "points": lambda d: FinitePointSet(d["points"]),
    "translate": lambda d: Translate(set_from_dict(d["inner"]), d["by"]),
    "ball_restriction": lambda d: BallRestriction(set_from_dict(d["inner"]), d["center"], d["radius"]),
}


def set_from_dict(d: dict) -> ClosedSet:
    """Inverse of ``ClosedSet.to_dict``."""
    try:
        make = _REGISTRY[d["type"]]
    except KeyError:
        raise ValidationError(f"unknown set type {d.get('type')!r}") from None
    return make(d)


def sample_points(s: ClosedSet, n: int, rng, center=None, scale: float = 1.0) -> np.ndarray:
    """Points of `s` obtained by projecting Gaussian samples around `center`."""
    c = np.zeros(s.dim) if center is None else as_vector(center, s.dim)
    X = c + scale * rng.standard_normal((n, s.dim))
    return project_many(s, X)


def common_bounding_box(sets) -> Optional[tuple]:
    """Box containing the intersection of `sets` (None if every set is unbounded)."""
    lo = hi = None
    for s in sets:
        bb = s.bounding_box()
        if bb is None:
            continue
        lo = bb[0] if lo is None else np.maximum(lo, bb[0])
        hi = bb[1] if hi is None else np.minimum(hi, bb[1])
    return None if lo is None else (lo, hi)
