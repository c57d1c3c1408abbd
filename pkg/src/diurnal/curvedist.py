"""Distances between two sampled curves on the bin-index axis.

Every curve is treated as the polyline through ``(i, y_i)`` for
``i = 0..n-1``.  DTW compares values only; the point-based measures
(discrete Frechet, partial curve mapping, curve length) use the 2-D points.
"""
from __future__ import annotations

from enum import Enum
from functools import lru_cache

import numpy as np


class MetricKind(str, Enum):
    PCM = "pcm"
    DISCRETE_FRECHET = "discrete_frechet"
    AREA_BETWEEN = "area_between"
    CURVE_LENGTH = "curve_length"
    DTW = "dtw"
    MAE = "mae"
    MSE = "mse"


ALL_METRICS = tuple(MetricKind)
SYMMETRIC = frozenset({MetricKind.DISCRETE_FRECHET, MetricKind.DTW, MetricKind.MAE,
                       MetricKind.MSE, MetricKind.AREA_BETWEEN, MetricKind.CURVE_LENGTH})


@lru_cache(maxsize=16)
def _diagonals(n: int, m: int) -> tuple:
    """Flat indices into an ``(n+1, m+1)`` padded table, one group per anti-diagonal."""
    width = m + 1
    groups = []
    for s in range(2, n + m + 1):
        i = np.arange(max(1, s - m), min(n, s - 1) + 1)
        j = s - i
        here = i * width + j
        groups.append((here, (i - 1) * m + (j - 1), here - width, here - 1, here - width - 1))
    return tuple(groups)


def _monotone_dp(cost: np.ndarray, accumulate: str) -> float:
    """Best monotone alignment score, filled one anti-diagonal at a time.

    ``accumulate="sum"`` gives DTW, ``"max"`` the discrete Frechet distance.
    """
    n, m = cost.shape
    acc = np.full((n + 1) * (m + 1), np.inf)
    acc[0] = 0.0
    flat_cost = np.ascontiguousarray(cost, dtype=float).ravel()
    for here, c, up, left, diag in _diagonals(n, m):
        best = np.minimum(np.minimum(acc[up], acc[left]), acc[diag])
        if accumulate == "sum":
            acc[here] = flat_cost[c] + best
        else:
            acc[here] = np.maximum(flat_cost[c], best)
    return float(acc[-1])


def dtw(a, b) -> float:
    """Unconstrained DTW with absolute-difference local cost."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    return _monotone_dp(np.abs(a[:, None] - b[None, :]), "sum")


def discrete_frechet(a, b) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    ia, ib = np.arange(len(a), dtype=float), np.arange(len(b), dtype=float)
    cost = np.hypot(ia[:, None] - ib[None, :], a[:, None] - b[None, :])
    return _monotone_dp(cost, "max")


def area_between(a, b) -> float:
    """Exact area between two polylines sharing the bin axis (crossings handled)."""
    d = np.asarray(a, float) - np.asarray(b, float)
    d0, d1 = d[:-1], d[1:]
    same = d0 * d1 >= 0
    denom = np.abs(d0) + np.abs(d1)
    crossing = np.divide(d0 ** 2 + d1 ** 2, 2 * denom, out=np.zeros_like(d0), where=denom > 0)
    return float(np.sum(np.where(same, (np.abs(d0) + np.abs(d1)) / 2, crossing)))


def _segments(y):
    y = np.asarray(y, float)
    return np.hypot(1.0, np.diff(y))


def arc_length(y) -> float:
    return float(_segments(y).sum())


def curve_length(a, b) -> float:
    """Difference of the two polylines' arc lengths."""
    return abs(arc_length(a) - arc_length(b))


def _point_at(y, cum, seg, s):
    n = len(y)
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, n - 1)
    seg_ext = np.append(seg, 1.0)
    t = np.where(idx < n - 1, (s - cum[idx]) / seg_ext[idx], 0.0)
    t = np.clip(t, 0.0, 1.0)
    nxt = np.minimum(idx + 1, n - 1)
    x = (1 - t) * idx + t * nxt
    v = (1 - t) * y[idx] + t * y[nxt]
    return x, v


def pcm(reference, candidate, n_offsets: int = 65) -> float:
    """Partial curve mapping of ``reference`` onto ``candidate``.

    Points of the reference are placed on the candidate at the same arc
    length, the shorter reference sliding along a longer candidate (the best
    of ``n_offsets`` evenly spaced offsets is kept).  A longer reference is
    compressed onto the candidate's length.  The score sums point-to-point
    distances weighted by the reference's arc length around each point, so
    it has area units and is not symmetric.
    """
    a = np.asarray(reference, float)
    b = np.asarray(candidate, float)
    seg_a, seg_b = _segments(a), _segments(b)
    cum_a = np.concatenate([[0.0], np.cumsum(seg_a)])
    cum_b = np.concatenate([[0.0], np.cumsum(seg_b)])
    la, lb = cum_a[-1], cum_b[-1]
    weights = np.zeros(len(a))
    weights[:-1] += seg_a / 2
    weights[1:] += seg_a / 2
    ia = np.arange(len(a), dtype=float)
    if la <= lb:
        positions = cum_a
        offsets = np.linspace(0.0, lb - la, n_offsets) if lb > la else np.zeros(1)
    else:
        positions = cum_a * (lb / la)
        offsets = np.zeros(1)
    best = np.inf
    for off in offsets:
        x, v = _point_at(b, cum_b, seg_b, np.minimum(positions + off, lb))
        best = min(best, float(np.sum(weights * np.hypot(ia - x, a - v))))
    return best


def curve_distance(a, b, metric: MetricKind | str) -> float:
    """Distance between two equal-length curves under ``metric``."""
    a = np.asarray(getattr(a, "values", a), float)
    b = np.asarray(getattr(b, "values", b), float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("curves must be finite")
    metric = MetricKind(metric)
    if metric is MetricKind.MAE:
        return float(np.mean(np.abs(a - b)))
    if metric is MetricKind.MSE:
        return float(np.mean((a - b) ** 2))
    if metric is MetricKind.DTW:
        return dtw(a, b)
    if metric is MetricKind.DISCRETE_FRECHET:
        return discrete_frechet(a, b)
    if metric is MetricKind.AREA_BETWEEN:
        return area_between(a, b)
    if metric is MetricKind.CURVE_LENGTH:
        return curve_length(a, b)
    return pcm(a, b)
