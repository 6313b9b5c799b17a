"""Shared alternating-projections loop (kernel fast path + generic fallback)."""

import numpy as np

from . import _kernels_py
from ._backend import kernels
from .core import as_vector

MAX_ITER = _kernels_py.MAX_ITER
CONVERGED = _kernels_py.CONVERGED
ATTAINED = _kernels_py.ATTAINED


def alternate(A, B, x0, max_iter: int, tol: float):
    """x_{2n-1} = P_B(x_{2n-2}), x_{2n} = P_A(x_{2n-1}).

    Stops when a step is <= tol (CONVERGED) or when the iterates close a
    2-cycle, i.e. the step norm and the point two steps back both repeat
    within tol relative to the step (ATTAINED).  Returns ``(iterates, status)``.
    """
    x0 = as_vector(x0, A.dim)
    sa, sb = A.kernel_spec(), B.kernel_spec()
    if sa is not None and sb is not None:
        its, status = kernels.alternating_projections(sa[0], sa[1], sb[0], sb[1], x0, int(max_iter), float(tol))
        return np.asarray(its), int(status)
    its = [x0.copy()]
    status = MAX_ITER
    prev = 0.0
    for k in range(1, int(max_iter) + 1):
        y = (B if k % 2 == 1 else A).project(its[-1])
        its.append(y)
        s = float(np.linalg.norm(y - its[-2]))
        if s <= tol:
            status = CONVERGED
            break
        if k >= 2 and abs(s - prev) <= tol * s and float(np.linalg.norm(y - its[-3])) <= tol * s:
            status = ATTAINED
            break
        prev = s
    return np.array(its), status
