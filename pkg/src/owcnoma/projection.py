"""Euclidean projection onto the ordered probability simplex.

The feasible set for a group's power fractions is

    { a : sum(a) = 1, 0 <= a_i <= 1, a_1 <= a_2 <= ... <= a_M }.

Projection alternates between the monotone cone (pool-adjacent-violators
isotonic regression) and the probability simplex (sort-based projection),
with Dykstra correction terms so the iteration converges to the exact
Euclidean projection onto the intersection.
"""

from __future__ import annotations

import numpy as np

MAX_ITERS = 50
TOL = 1e-9


def isotonic_non_decreasing(y: np.ndarray) -> np.ndarray:
    """Pool-adjacent-violators fit: closest non-decreasing vector to y."""
    y = np.asarray(y, dtype=float)
    n = y.size
    # blocks of pooled values: (mean, count)
    means = np.empty(n)
    counts = np.empty(n, dtype=int)
    k = 0
    for v in y:
        means[k] = v
        counts[k] = 1
        k += 1
        while k > 1 and means[k - 2] > means[k - 1]:
            total = means[k - 2] * counts[k - 2] + means[k - 1] * counts[k - 1]
            counts[k - 2] += counts[k - 1]
            means[k - 2] = total / counts[k - 2]
            k -= 1
    return np.repeat(means[:k], counts[:k])


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Closest point on {x : x >= 0, sum(x) = 1} (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, v.size + 1)
    cond = u + (1.0 - css) / j > 0
    rho = int(np.nonzero(cond)[0][-1])
    lam = (1.0 - css[rho]) / (rho + 1.0)
    return np.maximum(v + lam, 0.0)


def project_ordered_simplex(raw: np.ndarray, max_iters: int = MAX_ITERS,
                            tol: float = TOL) -> np.ndarray:
    """Euclidean projection of `raw` onto the ordered probability simplex.

    Dykstra's alternating projections between the monotone cone and the
    simplex; both the sum and ordering then hold to within `tol`. The box
    bounds follow from non-negativity plus the unit sum.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 1 or raw.size == 0:
        raise ValueError("raw must be a non-empty 1-D vector")
    if not np.all(np.isfinite(raw)):
        raise ValueError("raw must be finite")
    if raw.size == 1:
        return np.array([1.0])

    x = raw.copy()
    p = np.zeros_like(x)  # Dykstra correction for the cone
    q = np.zeros_like(x)  # Dykstra correction for the simplex
    for _ in range(max_iters):
        y = isotonic_non_decreasing(x + p)
        p = x + p - y
        x_new = project_simplex(y + q)
        q = y + q - x_new
        if (np.max(np.abs(x_new - x)) < tol
                and np.all(x_new[:-1] <= x_new[1:] + tol)):
            x = x_new
            break
        x = x_new
    # tiny Dykstra residual can leave an ordering violation below tol;
    # one closing isotonic pass and sum renormalization clean it up exactly
    x = isotonic_non_decreasing(np.maximum(x, 0.0))
    s = float(np.sum(x))
    if s <= 0.0:
        return np.full(raw.size, 1.0 / raw.size)
    return x / s
