# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled projection kernels; same API and encoding as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()

# keep in sync with _kernels_py
DEF HALFSPACE = 0
DEF HYPERPLANE = 1
DEF BALL = 2
DEF BOX = 3
DEF ABSEPI = 4
DEF AFFINE = 5
DEF POINTS = 6

MAX_ITER, CONVERGED, ATTAINED = 0, 1, 2


cdef inline double _dot(const double* a, const double* b, Py_ssize_t d) nogil:
    cdef double s = 0.0
    cdef Py_ssize_t j
    for j in range(d):
        s += a[j] * b[j]
    return s


cdef int _project(int kind, const double* p, Py_ssize_t plen,
                  const double* x, double* out, Py_ssize_t d) nogil:
    cdef Py_ssize_t j, i, k, m, best_i
    cdef double viol, aa, nrm, r, t, u, v, s, d2, best_d2, cu, cv, bu, bv, c
    if kind == HALFSPACE or kind == HYPERPLANE:
        viol = _dot(p, x, d) - p[d]
        if kind == HALFSPACE and viol <= 0.0:
            viol = 0.0
        aa = _dot(p, p, d)
        for j in range(d):
            out[j] = x[j] - (viol / aa) * p[j]
        return 0
    if kind == BALL:
        nrm = 0.0
        for j in range(d):
            nrm += (x[j] - p[j]) * (x[j] - p[j])
        nrm = sqrt(nrm)
        r = p[d]
        if nrm <= r:
            for j in range(d):
                out[j] = x[j]
        else:
            for j in range(d):
                out[j] = p[j] + (r / nrm) * (x[j] - p[j])
        return 0
    if kind == BOX:
        for j in range(d):
            t = x[j]
            if t < p[j]:
                t = p[j]
            if t > p[d + j]:
                t = p[d + j]
            out[j] = t
        return 0
    if kind == ABSEPI:
        s = p[0]
        u = x[0]
        v = x[1]
        if v >= fabs(u) + s:
            out[0] = u
            out[1] = v
            return 0
        best_d2 = -1.0
        bu = 0.0
        bv = 0.0
        t = (u + v - s) / 2.0
        if t >= 0.0:
            cu = t
            cv = t + s
            d2 = (cu - u) * (cu - u) + (cv - v) * (cv - v)
            best_d2 = d2
            bu = cu
            bv = cv
        t = (u - v + s) / 2.0
        if t <= 0.0:
            cu = t
            cv = -t + s
            d2 = (cu - u) * (cu - u) + (cv - v) * (cv - v)
            if best_d2 < 0.0 or d2 < best_d2 or (d2 == best_d2 and (cu < bu or (cu == bu and cv < bv))):
                best_d2 = d2
                bu = cu
                bv = cv
        cu = 0.0
        cv = s
        d2 = u * u + (cv - v) * (cv - v)
        if best_d2 < 0.0 or d2 < best_d2 or (d2 == best_d2 and (cu < bu or (cu == bu and cv < bv))):
            bu = cu
            bv = cv
        out[0] = bu
        out[1] = bv
        return 0
    if kind == AFFINE:
        k = <Py_ssize_t>p[d]
        for j in range(d):
            out[j] = p[j]
        for i in range(k):
            c = 0.0
            for j in range(d):
                c += p[d + 1 + i * d + j] * (x[j] - p[j])
            for j in range(d):
                out[j] += c * p[d + 1 + i * d + j]
        return 0
    if kind == POINTS:
        m = <Py_ssize_t>p[0]
        best_i = 0
        best_d2 = -1.0
        for i in range(m):
            d2 = 0.0
            for j in range(d):
                d2 += (p[1 + i * d + j] - x[j]) * (p[1 + i * d + j] - x[j])
            if best_d2 < 0.0 or d2 < best_d2:
                best_d2 = d2
                best_i = i
        for j in range(d):
            out[j] = p[1 + best_i * d + j]
        return 0
    return -1


def project_points(int kind, params, X):
    """Project every row of `X` onto the encoded set."""
    cdef double[::1] p = np.ascontiguousarray(params, dtype=np.float64)
    cdef double[:, ::1] xs = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t m = xs.shape[0], d = xs.shape[1], i
    out = np.empty((m, d), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef int rc = 0
    with nogil:
        for i in range(m):
            rc = _project(kind, &p[0], p.shape[0], &xs[i, 0], &o[i, 0], d)
            if rc != 0:
                break
    if rc != 0:
        raise ValueError(f"unknown kernel kind {kind}")
    return out


def dist_points(int kind, params, X):
    """Euclidean distance of every row of `X` to the encoded set."""
    cdef double[::1] p = np.ascontiguousarray(params, dtype=np.float64)
    cdef double[:, ::1] xs = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t m = xs.shape[0], d = xs.shape[1], i, j
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    cdef double[::1] buf = np.empty(d, dtype=np.float64)
    cdef double acc
    cdef int rc = 0
    with nogil:
        for i in range(m):
            rc = _project(kind, &p[0], p.shape[0], &xs[i, 0], &buf[0], d)
            if rc != 0:
                break
            acc = 0.0
            for j in range(d):
                acc += (xs[i, j] - buf[j]) * (xs[i, j] - buf[j])
            o[i] = sqrt(acc)
    if rc != 0:
        raise ValueError(f"unknown kernel kind {kind}")
    return out


def alternating_projections(int kind_a, params_a, int kind_b, params_b, x0,
                            Py_ssize_t max_iter, double tol):
    """Run x_{2n-1} = P_B(x_{2n-2}), x_{2n} = P_A(x_{2n-1}).

    Returns ``(iterates, status)``; see ``_kernels_py.alternating_projections``.
    """
    cdef double[::1] pa = np.ascontiguousarray(params_a, dtype=np.float64)
    cdef double[::1] pb = np.ascontiguousarray(params_b, dtype=np.float64)
    x0a = np.ascontiguousarray(x0, dtype=np.float64)
    cdef Py_ssize_t d = x0a.shape[0], k, j, last = 0
    its = np.empty((max_iter + 1, d), dtype=np.float64)
    cdef double[:, ::1] it = its
    cdef double[::1] x0v = x0a
    cdef double s, prev = 0.0, back
    cdef int status = 0, rc = 0
    for j in range(d):
        it[0, j] = x0v[j]
    with nogil:
        for k in range(1, max_iter + 1):
            if k % 2 == 1:
                rc = _project(kind_b, &pb[0], pb.shape[0], &it[k - 1, 0], &it[k, 0], d)
            else:
                rc = _project(kind_a, &pa[0], pa.shape[0], &it[k - 1, 0], &it[k, 0], d)
            if rc != 0:
                break
            last = k
            s = 0.0
            for j in range(d):
                s += (it[k, j] - it[k - 1, j]) * (it[k, j] - it[k - 1, j])
            s = sqrt(s)
            if s <= tol:
                status = 1
                break
            if k >= 2 and fabs(s - prev) <= tol * s:
                back = 0.0
                for j in range(d):
                    back += (it[k, j] - it[k - 2, j]) * (it[k, j] - it[k - 2, j])
                if sqrt(back) <= tol * s:
                    status = 2
                    break
            prev = s
    if rc != 0:
        raise ValueError("unknown kernel kind")
    return its[:last + 1].copy(), status
