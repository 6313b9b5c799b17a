"""Pure-Python/numpy implementation of the projection kernels.

Mirrors ``_kernels.pyx`` function for function; it is selected at import
time when the compiled module is unavailable.  Sets are passed in a compact
encoding ``(kind, params)``:

======  ===========  ====================================================
kind    set          params layout
======  ===========  ====================================================
0       halfspace    ``a_0..a_{d-1}, c``       {x : <a, x> <= c}
1       hyperplane   ``a_0..a_{d-1}, c``       {x : <a, x> = c}
2       ball         ``c_0..c_{d-1}, r``
3       box          ``lo_0..lo_{d-1}, hi_0..hi_{d-1}``
4       abs-epi      ``s``  (d = 2)            {(u, v) : v >= |u| + s}
5       affine       ``p_0..p_{d-1}, k, basis rows (k*d)``  (orthonormal)
6       points       ``m, points (m*d)``       nearest, lowest index on ties
======  ===========  ====================================================
"""

import math

import numpy as np

HALFSPACE, HYPERPLANE, BALL, BOX, ABSEPI, AFFINE, POINTS = range(7)

MAX_ITER, CONVERGED, ATTAINED = 0, 1, 2


def _project_one(kind, p, x):
    d = x.shape[0]
    if kind == HALFSPACE or kind == HYPERPLANE:
        a = p[:d]
        viol = float(a @ x) - p[d]
        if kind == HALFSPACE and viol <= 0.0:
            return x.copy()
        return x - (viol / float(a @ a)) * a
    if kind == BALL:
        c = p[:d]
        r = p[d]
        diff = x - c
        nrm = math.sqrt(float(diff @ diff))
        if nrm <= r:
            return x.copy()
        return c + (r / nrm) * diff
    if kind == BOX:
        return np.minimum(np.maximum(x, p[:d]), p[d:2 * d])
    if kind == ABSEPI:
        return _project_absepi(p[0], x)
    if kind == AFFINE:
        pt = p[:d]
        k = int(p[d])
        basis = p[d + 1:d + 1 + k * d].reshape(k, d)
        return pt + basis.T @ (basis @ (x - pt))
    if kind == POINTS:
        m = int(p[0])
        pts = p[1:1 + m * d].reshape(m, d)
        dist2 = ((pts - x) ** 2).sum(axis=1)
        return pts[int(np.argmin(dist2))].copy()
    raise ValueError(f"unknown kernel kind {kind}")


def _project_absepi(s, x):
    u, v = float(x[0]), float(x[1])
    if v >= abs(u) + s:
        return np.array([u, v])
    best = None
    # right branch v = u + s (u >= 0), left branch v = -u + s (u <= 0), vertex
    t = (u + v - s) / 2.0
    if t >= 0.0:
        best = _better(best, (t, t + s), u, v)
    t = (u - v + s) / 2.0
    if t <= 0.0:
        best = _better(best, (t, -t + s), u, v)
    best = _better(best, (0.0, s), u, v)
    return np.array(best[1])


def _better(best, cand, u, v):
    d2 = (cand[0] - u) ** 2 + (cand[1] - v) ** 2
    if best is None or d2 < best[0] or (d2 == best[0] and cand < best[1]):
        return (d2, cand)
    return best


def project_points(kind, params, X):
    """Project every row of `X` onto the encoded set."""
    params = np.ascontiguousarray(params, dtype=float)
    X = np.ascontiguousarray(X, dtype=float)
    if kind == BALL:
        d = X.shape[1]
        c, r = params[:d], params[d]
        diff = X - c
        nrm = np.sqrt((diff**2).sum(axis=1))
        scale = np.where(nrm > r, r / np.where(nrm > 0, nrm, 1.0), 1.0)
        out = c + diff * scale[:, None]
        inside = nrm <= r
        out[inside] = X[inside]
        return out
    if kind == BOX:
        d = X.shape[1]
        return np.minimum(np.maximum(X, params[:d]), params[d:2 * d])
    if kind in (HALFSPACE, HYPERPLANE):
        d = X.shape[1]
        a, c = params[:d], params[d]
        viol = X @ a - c
        if kind == HALFSPACE:
            viol = np.maximum(viol, 0.0)
        return X - np.outer(viol / (a @ a), a)
    return np.array([_project_one(kind, params, x) for x in X]).reshape(X.shape)


def dist_points(kind, params, X):
    """Euclidean distance of every row of `X` to the encoded set."""
    X = np.ascontiguousarray(X, dtype=float)
    return np.sqrt(((X - project_points(kind, params, X)) ** 2).sum(axis=1))


def alternating_projections(kind_a, params_a, kind_b, params_b, x0, max_iter, tol):
    """Run x_{2n-1} = P_B(x_{2n-2}), x_{2n} = P_A(x_{2n-1}).

    Returns ``(iterates, status)`` where iterates has shape (K+1, d) and
    status is one of MAX_ITER, CONVERGED, ATTAINED.
    """
    pa = np.ascontiguousarray(params_a, dtype=float)
    pb = np.ascontiguousarray(params_b, dtype=float)
    x = np.array(x0, dtype=float)
    its = [x.copy()]
    steps = [0.0]
    status = MAX_ITER
    for k in range(1, max_iter + 1):
        if k % 2 == 1:
            y = _project_one(kind_b, pb, x)
        else:
            y = _project_one(kind_a, pa, x)
        diff = y - x
        s = math.sqrt(float(diff @ diff))
        its.append(y)
        steps.append(s)
        x = y
        if s <= tol:
            status = CONVERGED
            break
        if k >= 2 and abs(s - steps[k - 1]) <= tol * s:
            back = y - its[k - 2]
            if math.sqrt(float(back @ back)) <= tol * s:
                status = ATTAINED
                break
    return np.array(its), status
