"""Compiled core shared by the continuous and discrete simulators.

Both call :func:`volterra_paths`, so identical weights and innovations give
bit-identical volatility paths.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(nogil=True, cache=True)
def volterra_paths(sigma, beta, w, z, n_out):
    """V[0] = sigma, V[i] = sigma + beta * sum_{j<i} w[i-1-j] * V[j] * z[j].

    ``z`` has shape (>= n_out - 1, paths).  For each path the sum runs over
    ``j`` in increasing order, independent of how many paths share the call.
    """
    P = z.shape[1]
    V = np.empty((n_out, P))
    Y = np.empty((max(n_out - 1, 1), P))
    acc = np.empty(P)
    for p in range(P):
        V[0, p] = sigma
    for i in range(1, n_out):
        for p in range(P):
            Y[i - 1, p] = V[i - 1, p] * z[i - 1, p]
            acc[p] = 0.0
        for j in range(i):
            wij = w[i - 1 - j]
            for p in range(P):
                acc[p] += wij * Y[j, p]
        for p in range(P):
            V[i, p] = sigma + beta * acc[p]
    return V
