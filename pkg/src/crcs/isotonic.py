"""Cumulative sum diagrams, greatest convex minorants and isotonic regression."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InfeasibleBoundsError(ValueError):
    def __init__(self, message: str, indices: tuple[int, int]):
        super().__init__(message)
        self.indices = indices


@dataclass(frozen=True)
class CumSumDiagram:
    """Points ``(x_j, y_j)`` starting at the origin with ``x`` strictly increasing."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1 or x.size < 1:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if x[0] != 0 or y[0] != 0:
            raise ValueError("diagram must start at the origin")
        if np.any(np.diff(x) <= 0):
            raise ValueError("x must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_weights(cls, weights, responses) -> "CumSumDiagram":
        """Diagram of cumulative weights against cumulative weighted responses."""
        w = np.asarray(weights, dtype=float)
        r = np.asarray(responses, dtype=float)
        return cls(np.concatenate(([0.0], np.cumsum(w))), np.concatenate(([0.0], np.cumsum(w * r))))

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])


def gcm_left_slopes(d: CumSumDiagram) -> np.ndarray:
    """Left derivatives of the greatest convex minorant at ``x_1, ..., x_m``.

    Builds the lower convex hull with a monotone-chain stack, then reads
    off the slope of the hull segment ending at or passing over each point.
    """
    x, y = d.x, d.y
    hull = [0]
    for j in range(1, len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it lies on or above the chord a -> j
            if (y[b] - y[a]) * (x[j] - x[a]) >= (y[j] - y[a]) * (x[b] - x[a]):
                hull.pop()
            else:
                break
        hull.append(j)
    slopes = np.empty(len(x) - 1)
    for a, b in zip(hull[:-1], hull[1:]):
        slopes[a:b] = (y[b] - y[a]) / (x[b] - x[a])
    return slopes


def pava(y, w) -> np.ndarray:
    """Weighted least squares nondecreasing fit by pool-adjacent-violators.

    Adjacent blocks with equal means are pooled too, so the output does not
    depend on how ties happen to be ordered.
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    n = y.size
    means = np.empty(n)
    weights = np.empty(n)
    sizes = np.empty(n, dtype=np.int64)
    top = -1
    for i in range(n):
        top += 1
        means[top], weights[top], sizes[top] = y[i], w[i], 1
        while top > 0 and means[top - 1] >= means[top]:
            wt = weights[top - 1] + weights[top]
            means[top - 1] = (weights[top - 1] * means[top - 1] + weights[top] * means[top]) / wt
            weights[top - 1] = wt
            sizes[top - 1] += sizes[top]
            top -= 1
    return np.repeat(means[: top + 1], sizes[: top + 1])


def _check_bounds(lower, upper):
    running = np.maximum.accumulate(lower)
    bad = np.nonzero(running > upper)[0]
    if bad.size:
        j = int(bad[0])
        i = int(np.argmax(lower[: j + 1]))
        raise InfeasibleBoundsError(
            f"no nondecreasing sequence fits the bounds: lower[{i}]={lower[i]} > upper[{j}]={upper[j]}",
            (i, j),
        )


def weighted_isotonic(y, w, lower=None, upper=None, *, tol=1e-12, max_iter=100_000) -> np.ndarray:
    """Minimize ``sum w_i (x_i - y_i)^2`` over nondecreasing ``x`` with ``lower <= x <= upper``.

    Without bounds this is a single PAVA pass. With bounds, Dykstra's
    alternating projections between the monotone cone and the box are run
    until the objective stalls and the two projections agree.
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    if y.shape != w.shape or y.ndim != 1:
        raise ValueError("y and w must be 1-d arrays of equal length")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    n = y.size
    lo = None if lower is None else np.broadcast_to(np.asarray(lower, dtype=float), (n,)).copy()
    hi = None if upper is None else np.broadcast_to(np.asarray(upper, dtype=float), (n,)).copy()
    if n == 0:
        return np.empty(0)
    if lo is not None and hi is not None:
        _check_bounds(lo, hi)
    if n == 1:
        return np.clip(y, lo, hi) if (lo is not None or hi is not None) else y.copy()
    if lo is None and hi is None:
        return pava(y, w)

    def box(v):
        return np.clip(v, lo, hi)

    def objective(v):
        return float(np.sum(w * (v - y) ** 2))

    x = y.copy()
    p = np.zeros(n)
    q = np.zeros(n)
    prev = np.inf
    scale = 1.0 + float(np.max(np.abs(y)))
    for _ in range(max_iter):
        a = pava(x + p, w)
        p = x + p - a
        x = box(a + q)
        q = a + q - x
        obj = objective(x)
        if abs(prev - obj) < tol and np.max(np.abs(x - a)) <= 1e-13 * scale:
            break
        prev = obj
    # residual round-off may leave x a hair out of order
    x = box(np.maximum.accumulate(x))
    return x
