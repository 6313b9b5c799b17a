"""Vectors, the weighted product norm and its dual, and gauge functions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionError, DomainError, ValidationError

DEFAULT_TOL = 1e-9


def as_vector(x, dim: Optional[int] = None) -> np.ndarray:
    """Return `x` as a finite 1-D float array, optionally checking its length."""
    v = np.array(x, dtype=float).reshape(-1)
    if v.size == 0:
        raise DimensionError("vector must have dimension >= 1")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"vector has non-finite coordinates: {v}")
    if dim is not None and v.size != dim:
        raise DimensionError(f"expected dimension {dim}, got {v.size}")
    return v


def as_tuple(parts: Sequence, n: Optional[int] = None) -> list[np.ndarray]:
    """Validate a tuple of vectors sharing one dimension."""
    vs = [as_vector(p) for p in parts]
    if n is not None and len(vs) != n:
        raise DimensionError(f"expected a tuple of {n} vectors, got {len(vs)}")
    if len({v.size for v in vs}) > 1:
        raise DimensionError("all vectors in a tuple must have the same dimension")
    return vs


@dataclass(frozen=True)
class ProductNorm:
    """Max-type norm on X^n with weight `lam` on the first n-1 slots and `eta` on the last."""

    lam: float
    eta: float
    n: int

    def __post_init__(self):
        if not (self.lam > 0 and self.eta > 0):
            raise ValidationError("lam and eta must be positive")
        if self.n < 2:
            raise ValidationError("product norm needs n >= 2 slots")

    def __call__(self, parts) -> float:
        return product_norm_eval(self, parts)

    def dual(self, duals) -> float:
        return dual_product_norm_eval(self, duals)

    def distance(self, u, w) -> float:
        """Metric induced on X^n."""
        u = as_tuple(u, self.n)
        w = as_tuple(w, self.n)
        return product_norm_eval(self, [a - b for a, b in zip(u, w)])

    def slot_scales(self) -> np.ndarray:
        s = np.full(self.n, float(self.lam))
        s[-1] = self.eta
        return s


def product_norm_eval(norm: ProductNorm, parts) -> float:
    """max{||u_1||/lam, ..., ||u_{n-1}||/lam, ||u_n||/eta}."""
    vs = as_tuple(parts, norm.n)
    head = max(float(np.linalg.norm(v)) for v in vs[:-1]) / norm.lam
    return max(head, float(np.linalg.norm(vs[-1])) / norm.eta)


def dual_product_norm_eval(norm: ProductNorm, duals) -> float:
    """lam * sum_{i<n} ||x_i*|| + eta * ||x_n*||."""
    vs = as_tuple(duals, norm.n)
    return norm.lam * sum(float(np.linalg.norm(v)) for v in vs[:-1]) + norm.eta * float(
        np.linalg.norm(vs[-1])
    )


# ---------------------------------------------------------------------------
# gauges


_LOG_GRID = np.concatenate([[0.0], np.logspace(-6, 3, 999)])


@dataclass(frozen=True)
class Gauge:
    """Strictly increasing reparametrisation phi of [0, inf) with phi(0) = 0.

    Use the constructors :meth:`identity`, :meth:`holder` and :meth:`custom`
    rather than instantiating directly.
    """

    kind: str
    q: float = 1.0
    alpha: float = 1.0
    fn: Optional[Callable[[float], float]] = field(default=None, compare=False)
    dfn: Optional[Callable[[float], float]] = field(default=None, compare=False)
    inv: Optional[Callable[[float], float]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("identity", "holder", "custom"):
            raise ValidationError(f"unknown gauge kind {self.kind!r}")
        if self.kind == "holder" and not (self.q > 0 and self.alpha > 0):
            raise ValidationError("Holder gauge needs q > 0 and alpha > 0")
        if self.kind == "custom":
            if self.fn is None or self.dfn is None:
                raise ValidationError("custom gauge needs value and derivative functions")
            _validate_custom(self.fn, self.dfn)

    @classmethod
    def identity(cls) -> "Gauge":
        return cls("identity")

    @classmethod
    def holder(cls, q: float, alpha: float = 1.0) -> "Gauge":
        return cls("holder", q=float(q), alpha=float(alpha))

    @classmethod
    def custom(cls, fn, dfn, inv=None) -> "Gauge":
        return cls("custom", fn=fn, dfn=dfn, inv=inv)

    def value(self, t: float) -> float:
        t = _check_nonneg(t)
        if self.kind == "identity":
            return t
        if self.kind == "holder":
            return t**self.q / self.alpha
        return float(self.fn(t))

    def derivative(self, t: float) -> float:
        """phi'(t); at t = 0 the one-sided limit, possibly ``inf`` (Holder q < 1)."""
        t = _check_nonneg(t)
        if self.kind == "identity":
            return 1.0
        if self.kind == "holder":
            if t == 0.0:
                if self.q < 1:
                    return math.inf
                return 1.0 / self.alpha if self.q == 1 else 0.0
            return self.q / self.alpha * t ** (self.q - 1.0)
        return float(self.dfn(t))

    def inverse(self, s: float) -> float:
        s = _check_nonneg(s)
        if self.kind == "identity":
            return s
        if self.kind == "holder":
            return (self.alpha * s) ** (1.0 / self.q)
        if self.inv is not None:
            return float(self.inv(s))
        return _bisect_inverse(self.fn, s)

    def to_dict(self) -> dict:
        if self.kind == "custom":
            raise ValidationError("custom gauges are not serialisable")
        if self.kind == "identity":
            return {"kind": "identity"}
        return {"kind": "holder", "q": self.q, "alpha": self.alpha}

    @classmethod
    def from_dict(cls, d: dict) -> "Gauge":
        kind = d.get("kind", "identity")
        if kind == "identity":
            return cls.identity()
        if kind == "holder":
            return cls.holder(d.get("q", 1.0), d.get("alpha", 1.0))
        raise ValidationError(f"unknown gauge kind {kind!r}")


def gauge_eval_suite(g: Gauge, t: float) -> tuple[float, float, float]:
    """Return ``(phi(t), phi'(t), phi^{-1}(t))``."""
    return g.value(t), g.derivative(t), g.inverse(t)


def _check_nonneg(t) -> float:
    t = float(t)
    if not t >= 0 or math.isnan(t):
        raise DomainError(f"gauge argument must be >= 0, got {t}")
    return t


def _validate_custom(fn, dfn):
    vals = np.array([fn(t) for t in _LOG_GRID], dtype=float)
    if abs(vals[0]) > 0:
        raise ValidationError("custom gauge must satisfy phi(0) = 0")
    if not np.all(np.diff(vals) > 0):
        raise ValidationError("custom gauge is not strictly increasing on the sample grid")
    ders = np.array([dfn(t) for t in _LOG_GRID[1:]], dtype=float)
    if not np.all(ders > 0):
        raise ValidationError("custom gauge derivative must be positive on (0, inf)")


def _bisect_inverse(fn, s: float) -> float:
    if s == 0.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while fn(hi) < s:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise DomainError(f"gauge never reaches {s}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if fn(mid) < s:
            lo = mid
        else:
            hi = mid
    return hi if abs(fn(hi) - s) <= abs(fn(lo) - s) else lo
