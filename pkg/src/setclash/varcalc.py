"""Max-gap function, sampled slopes, the slope chain rule, a constructive
Ekeland search and subgradients of the max-gap function.

Slopes are estimated by sampling and are lower bounds of the true
(lim)sup; sampling is deterministic for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import DEFAULT_TOL, Gauge, ProductNorm, as_tuple, as_vector
from .errors import DimensionError, DomainError, PreconditionError, ValidationError

DEFAULT_RADII = tuple(10.0 ** -k for k in range(1, 7))
NONLOCAL_RADII = tuple(10.0 ** k for k in range(3, -7, -1))


# ---------------------------------------------------------------------------
# max-gap function


@dataclass(frozen=True, eq=False)
class MaxGapInstance:
    """f(u) = max_{i<n} ||u_i - a_i - u_n|| for shifts a_1..a_{n-1}."""

    shifts: tuple

    def __post_init__(self):
        sh = tuple(as_tuple(self.shifts))
        if len(sh) < 1:
            raise ValidationError("need at least one shift (n >= 2)")
        object.__setattr__(self, "shifts", sh)

    @classmethod
    def zero(cls, n: int, dim: int) -> "MaxGapInstance":
        return cls(tuple(np.zeros(dim) for _ in range(n - 1)))

    @property
    def n(self) -> int:
        return len(self.shifts) + 1

    @property
    def dim(self) -> int:
        return self.shifts[0].size

    def residuals(self, u) -> np.ndarray:
        """Rows v_i = u_i - a_i - u_n, shape (n-1, dim)."""
        u = as_tuple(u, self.n)
        if u[0].size != self.dim:
            raise DimensionError(f"points have dimension {u[0].size}, shifts {self.dim}")
        U = np.array(u)
        return U[:-1] - np.array(self.shifts) - U[-1]

    def gaps(self, u) -> np.ndarray:
        return np.linalg.norm(self.residuals(u), axis=1)

    def __call__(self, u) -> float:
        return float(self.gaps(u).max())


def maxgap_eval(inst: MaxGapInstance, u) -> float:
    return inst(u)


def maxgap_subdiff(inst: MaxGapInstance, u, weights=None, rel_tol: float = 1e-9):
    """Subgradient of the max-gap function built from active-index weights.

    Parameters
    ----------
    inst : MaxGapInstance
    u : sequence of n vectors
        Point with positive max-gap.
    weights : sequence of n-1 floats, optional
        Nonnegative, summing to one, zero on inactive indices.  Uniform over
        the active indices when omitted.
    rel_tol : float
        An index is active when its gap is within ``rel_tol * max`` of the max.

    Returns
    -------
    list of ndarray
        ``x_i* = w_i v_i / ||v_i||`` for i < n and ``x_n* = -sum_i x_i*``.
    """
    V = inst.residuals(u)
    g = np.linalg.norm(V, axis=1)
    m = float(g.max())
    if m <= 0:
        raise PreconditionError("subdifferential formula needs a positive max-gap", inequality="L6-2")
    active = g >= m * (1.0 - rel_tol)
    if weights is None:
        w = active / active.sum()
    else:
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.size != inst.n - 1:
            raise DimensionError(f"expected {inst.n - 1} weights, got {w.size}")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError("weights must be nonnegative and sum to 1")
        if np.any(w[~active] > 1e-12):
            raise ValidationError("weights must vanish on inactive indices")
    X = np.zeros_like(V)
    X[active] = w[active, None] * V[active] / g[active, None]
    return [row for row in X] + [-X.sum(axis=0)]


def subdiff_residuals(inst: MaxGapInstance, u, duals) -> dict:
    """Residuals of the three defining relations of the subdifferential."""
    duals = as_tuple(duals, inst.n)
    V = inst.residuals(u)
    D = np.array(duals)
    return {
        "sum": float(np.linalg.norm(D.sum(axis=0))),
        "norm": float(np.linalg.norm(D[:-1], axis=1).sum() - 1.0),
        "support": float(np.einsum("ij,ij->", D[:-1], V) - np.linalg.norm(V, axis=1).max()),
    }


# ---------------------------------------------------------------------------
# slopes


@dataclass(frozen=True)
class SlopeEstimate:
    """Sampled slope: `value` is a lower bound of the true slope.

    ``sequence`` holds the estimate restricted to each radius of the schedule
    (for the local slope it is nonincreasing as the radius shrinks).
    """

    value: float
    radius_used: float
    samples: int
    sequence: tuple = field(default=(), compare=False)


def _directions(dim: int, count: int, rng) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        ang = 2 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(ang), np.sin(ang)])
    Z = rng.standard_normal((count, dim))
    Z[: 2 * dim] = np.vstack([np.eye(dim), -np.eye(dim)])[: min(count, 2 * dim)]
    return Z / np.linalg.norm(Z, axis=1, keepdims=True)


def _fd_gradient(fn, x, h=1e-7):
    g = np.zeros_like(x)
    step = h * max(1.0, float(np.linalg.norm(x)))
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = step
        g[j] = (fn(x + e) - fn(x - e)) / (2 * step)
    return g


def _probe_dirs(fn, x, rng, budget):
    dirs = _directions(x.size, budget, rng)
    g = _fd_gradient(fn, x)
    if np.all(np.isfinite(g)) and np.any(g):
        dirs = np.vstack([dirs, -g / np.linalg.norm(g)])
    return dirs


def local_slope(
    fn: Callable,
    x,
    radii: Sequence[float] = DEFAULT_RADII,
    budget: int = 512,
    seed: int = 0,
    metric: Optional[Callable] = None,
) -> SlopeEstimate:
    """Sampled estimate of the slope ``limsup [fn(x) - fn(u)]_+ / d(x, u)``.

    Directions are evenly spaced in the plane and seeded Gaussian otherwise,
    plus the negative finite-difference gradient.  The value is the estimate
    at the smallest radius.
    """
    x = as_vector(x)
    radii = _check_radii(radii)
    fx = float(fn(x))
    if not math.isfinite(fx):
        return SlopeEstimate(math.inf, radii[-1], 0, ())
    rng = np.random.default_rng(seed)
    dirs = _probe_dirs(fn, x, rng, budget)
    dist = metric or (lambda a, b: float(np.linalg.norm(a - b)))
    per_radius = []
    for r in radii:
        best = 0.0
        for d in dirs:
            u = x + r * d
            du = dist(x, u)
            if du > 0:
                best = max(best, max(fx - float(fn(u)), 0.0) / du)
        per_radius.append(best)
    # sup over the ball B_r uses every sample at radius <= r
    seq = tuple(np.maximum.accumulate(per_radius[::-1])[::-1])
    return SlopeEstimate(per_radius[-1], radii[-1], len(dirs) * len(radii), seq)


def nonlocal_slope(
    fn: Callable,
    x,
    budget: int = 512,
    seed: int = 0,
    radii: Sequence[float] = NONLOCAL_RADII,
    extra_points: Optional[Sequence] = None,
    metric: Optional[Callable] = None,
) -> SlopeEstimate:
    """Sampled ``sup_u [fn(x) - fn(u)_+]_+ / d(x, u)`` over all radii and `extra_points`.

    Sampling includes the whole local schedule for the same seed, so for
    nonnegative `fn` the result is never below :func:`local_slope`.
    """
    x = as_vector(x)
    fx = float(fn(x))
    if not math.isfinite(fx):
        return SlopeEstimate(math.inf, 0.0, 0, ())
    radii = sorted(set(_check_radii(radii)) | set(DEFAULT_RADII), reverse=True)
    rng = np.random.default_rng(seed)
    dirs = _probe_dirs(fn, x, rng, budget)
    dist = metric or (lambda a, b: float(np.linalg.norm(a - b)))
    pts = [x + r * d for r in radii for d in dirs]
    if extra_points is not None:
        pts += [as_vector(p, x.size) for p in extra_points]
    best, where = 0.0, 0.0
    for u in pts:
        du = dist(x, u)
        if du <= 0:
            continue
        val = max(fx - max(float(fn(u)), 0.0), 0.0) / du
        if val > best:
            best, where = val, du
    return SlopeEstimate(best, where, len(pts), ())


def _check_radii(radii):
    r = [float(t) for t in radii]
    if not r or any(t <= 0 for t in r) or any(a <= b for a, b in zip(r, r[1:])):
        raise ValidationError("radii must be positive and strictly decreasing")
    return r


def chain_rule_slope(g: Gauge, psi_value: float, psi_slope: float) -> float:
    """phi'(psi) * slope, with 0 * inf = 0."""
    der = g.derivative(psi_value)
    if math.isnan(der) or math.isinf(der):
        raise DomainError(f"gauge is not differentiable at {psi_value}")
    if der == 0.0:
        return 0.0
    return der * float(psi_slope)


# ---------------------------------------------------------------------------
# Ekeland search


@dataclass
class EkelandResult:
    """Output of :func:`ekeland_search`.

    ``min_slack`` is the smallest sampled value of
    ``fn(u) + (eps/lam) d(u, x_hat) - fn(x_hat)``; condition (iii) is
    certified on the sample only.
    """

    point: list
    value: float
    start_value: float
    distance: float
    lam: float
    iterations: int
    evaluations: int
    cert_samples: int
    min_slack: float
    certified: bool
    budget_exhausted: bool

    @property
    def cond_i(self) -> bool:
        return self.distance < self.lam

    @property
    def cond_ii(self) -> bool:
        return self.value <= self.start_value


class _Domain:
    """Product of projectable slots with a max-type metric."""

    def __init__(self, domain, start, norm: Optional[ProductNorm]):
        start = as_tuple(start)
        n = len(start)
        if domain is None:
            domain = [None] * n
        domain = list(domain)
        if len(domain) != n:
            raise DimensionError(f"domain has {len(domain)} slots, start has {n}")
        self.sets = domain
        self.n = n
        self.dim = start[0].size
        if norm is not None:
            if norm.n != n:
                raise DimensionError(f"product norm has {norm.n} slots, start has {n}")
            self.scales = norm.slot_scales()
        else:
            self.scales = np.ones(n)

    def project(self, U):
        out = U.copy()
        for i, s in enumerate(self.sets):
            if s is not None:
                out[i] = s.project(U[i])
        return out

    def contains(self, U, tol):
        return all(s is None or s.contains(U[i], tol) for i, s in enumerate(self.sets))

    def dist(self, U, W):
        return float((np.linalg.norm(U - W, axis=1) / self.scales).max())


def ekeland_search(
    fn: Callable,
    domain,
    start,
    eps: float,
    lam: float,
    norm: Optional[ProductNorm] = None,
    inf_estimate: float = 0.0,
    budget: int = 10_000,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    cert_samples: int = 512,
    candidates: Optional[Callable] = None,
) -> EkelandResult:
    """Constructive Ekeland point for `fn` on a product of projectable sets.

    Parameters
    ----------
    fn : callable
        Takes a list of n vectors.
    domain : sequence of ClosedSet or None
        One entry per slot; None means the whole space.
    start : sequence of n vectors
        Must lie in the domain and satisfy ``fn(start) < inf_estimate + eps``.
    eps, lam : float
        Ekeland parameters; the perturbation slope is ``eps / lam``.
    norm : ProductNorm, optional
        Metric on the product; the plain max norm when omitted.
    candidates : callable, optional
        Maps the current point (list of n vectors) to extra tuples that are
        tested along with the random certification sample.

    Notes
    -----
    Each outer step minimises ``u -> fn(u) + (eps/lam) d(u, x_k)`` by a
    projected (1+1) evolution strategy and moves only on strict decrease of
    that penalised value, which keeps every iterate within distance
    ``lam * (fn(start) - fn(x_k)) / eps < lam`` of the start and `fn`
    nonincreasing.  (i) and (ii) are checked exactly on the output.
    """
    if not (eps > 0 and lam > 0):
        raise ValidationError("eps and lam must be positive")
    dom = _Domain(domain, start, norm)
    x0 = np.array(as_tuple(start, dom.n))
    if not dom.contains(x0, tol):
        raise PreconditionError("start point is outside the domain", inequality="EVP")
    F = lambda U: float(fn(list(U)))
    f0 = F(x0)
    if not f0 < inf_estimate + eps:
        raise PreconditionError(
            f"fn(start) = {f0:.6g} is not below inf + eps = {inf_estimate + eps:.6g}", inequality="EVP"
        )
    rng = np.random.default_rng(seed)
    c = eps / lam
    x, fx = x0.copy(), f0
    evals, iters = 1, 0

    def certify(x, fx):
        nonlocal evals
        slack, worst = math.inf, None
        pts = _cert_points(dom, x, rng, cert_samples)
        if candidates is not None:
            pts += [np.array(as_tuple(U, dom.n)) for U in candidates([row.copy() for row in x])]
        for U in pts:
            du = dom.dist(U, x)
            if du == 0.0:
                continue
            fu = F(U)
            evals += 1
            s = fu + c * du - fx
            if s < slack:
                slack, worst = s, (U, fu)
        return slack, worst, len(pts)

    while True:
        # inner minimisation of the penalised function around x
        best, g_best = x.copy(), fx
        sigma = 0.5
        while sigma > 1e-12 and evals < budget:
            Z = rng.standard_normal(x.shape) * dom.scales[:, None]
            if dom.n > 1 and rng.random() < 0.5:
                Z[np.arange(dom.n) != rng.integers(dom.n)] = 0.0
            cand = dom.project(best + sigma * Z)
            gc = F(cand) + c * dom.dist(cand, x)
            evals += 1
            if gc < g_best:
                best, g_best = cand, gc
                sigma *= 1.5
            else:
                sigma *= 1.5 ** -0.25
        slack, worst, n_cert = certify(x, fx)
        moves = []
        if g_best < fx - 1e-15 * max(1.0, abs(fx)):
            moves.append((g_best, best))
        if worst is not None and slack < -tol:
            moves.append((slack + fx, worst[0]))
        if not moves:
            break  # no sampled penalised descent: x is the Ekeland point
        move = min(moves, key=lambda m: m[0])[1]
        fmove = F(move)
        if not fmove <= fx or dom.dist(move, x0) >= lam:
            break  # non-decreasing step (or a bad inf estimate): keep x
        x, fx = move, fmove
        iters += 1
        if evals >= budget:
            slack, _, n_cert = certify(x, fx)
            break
    return EkelandResult(
        point=[row.copy() for row in x],
        value=fx,
        start_value=f0,
        distance=dom.dist(x, x0),
        lam=lam,
        iterations=iters,
        evaluations=evals,
        cert_samples=n_cert,
        min_slack=float(slack),
        certified=bool(slack >= -tol),
        budget_exhausted=evals >= budget,
    )


def _cert_points(dom: _Domain, x, rng, count):
    pts = []
    radii = np.logspace(0, -8, 9)
    per = max(1, count // len(radii))
    for r in radii:
        Z = rng.standard_normal((per,) + x.shape) * dom.scales[None, :, None]
        for z in Z:
            if dom.n > 1 and rng.random() < 0.5:
                keep = rng.integers(dom.n)
                z[np.arange(dom.n) != keep] = 0.0
            pts.append(dom.project(x + r * z))
    return pts
