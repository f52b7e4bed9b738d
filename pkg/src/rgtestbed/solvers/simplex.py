"""Maps from arbitrary vectors onto the probability simplex."""

from __future__ import annotations

import numpy as np

from rgtestbed._jit import njit


@njit(cache=True)
def project_kernel(v):
    """Sort-and-threshold Euclidean projection; ``v`` must be non-empty."""
    n = v.size
    u = np.sort(v)[::-1]
    css = 0.0
    theta = 0.0
    for k in range(n):
        css += u[k]
        t = (css - 1.0) / (k + 1.0)
        if u[k] > t:
            theta = t
    w = np.maximum(v - theta, 0.0)
    # absorb the last ulp of drift so the output sums to one
    return w / w.sum()


def project_to_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex.

    Find the largest ``k`` such that the ``k`` biggest entries stay positive
    after subtracting a common shift ``theta``, then clip everything else to
    zero.  O(n log n).
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("cannot project an empty vector")
    return project_kernel(np.ascontiguousarray(v))


def normalize_to_simplex(v) -> np.ndarray:
    """Clip negatives to zero and rescale; uniform when nothing is left."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("cannot normalize an empty vector")
    w = np.maximum(v, 0.0)
    total = w.sum()
    if total <= 0.0:
        return np.full(v.size, 1.0 / v.size)
    return w / total
