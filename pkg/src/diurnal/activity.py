"""Diurnal activity curves on the 96-bin circular day grid."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import time
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from ._parallel import ordered_map, chunked
from .ingest import N_BINS, PostTable

KINDS = ("raw", "smoothed", "spectral")


class EmptyUserError(ValueError):
    pass


@dataclass(frozen=True)
class DiurnalCurve:
    """96 values, one per 15-minute bin; bin ``b`` covers ``[b/4, b/4 + 1/4)`` hours.

    Raw and smoothed curves must be non-negative.  Spectral reconstructions
    may dip slightly below zero and are not checked.
    """

    values: np.ndarray
    kind: str = "raw"

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (N_BINS,):
            raise ValueError(f"curve must have {N_BINS} values, got shape {values.shape}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown curve kind {self.kind!r}")
        if not np.all(np.isfinite(values)):
            raise ValueError("curve values must be finite")
        if self.kind != "spectral" and np.any(values < 0):
            raise ValueError("activity values must be non-negative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def mass(self) -> float:
        return float(self.values.sum())

    def shift(self, k: int) -> "DiurnalCurve":
        """Circular shift: the value at bin ``b`` moves to bin ``b + k``."""
        return DiurnalCurve(np.roll(self.values, k), self.kind)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"bin_start": bin_labels(), "value": self.values})

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.12g")

    def to_json(self) -> str:
        return json.dumps([float(v) for v in self.values])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return N_BINS


def bin_labels() -> list[str]:
    return [f"{b // 4:02d}:{(b % 4) * 15:02d}" for b in range(N_BINS)]


def _as_hours(local_time) -> float:
    if isinstance(local_time, time):
        return local_time.hour + local_time.minute / 60 + (local_time.second + local_time.microsecond / 1e6) / 3600
    if isinstance(local_time, str):
        parts = [float(p) for p in local_time.split(":")]
        parts += [0.0] * (3 - len(parts))
        return parts[0] + parts[1] / 60 + parts[2] / 3600
    return float(local_time)


def bin_index(local_time) -> int:
    """Bin of a wall-clock time given as ``datetime.time``, ``"HH:MM[:SS]"`` or float hours."""
    hours = _as_hours(local_time)
    if not 0 <= hours < 24:
        raise ValueError(f"time of day must lie in [0, 24), got {hours}")
    # minute-exact inputs: avoid 4*hours landing just below an integer
    return min(int(math.floor(round(4 * hours, 9))), N_BINS - 1)


def _normalise(counts: np.ndarray) -> np.ndarray:
    return counts / counts.sum()


def user_count_matrix(posts: PostTable, users: Sequence[str] | None = None,
                      workers: int | None = None, chunk_size: int = 2048) -> tuple[list[str], np.ndarray]:
    """Per-user post counts per bin, all categories.

    Returns the (sorted) user list and an ``(n_users, 96)`` integer array.
    Users are processed in fixed-size chunks so results never depend on
    ``workers``.
    """
    frame = posts.frame
    if users is None:
        users = posts.users
    users = sorted(users)
    codes = pd.Categorical(frame["user"], categories=users).codes
    keep = codes >= 0
    codes = codes[keep].astype(np.int64)
    bins = frame["bin"].to_numpy()[keep].astype(np.int64)

    def tally(bounds):
        lo, hi = bounds
        sel = (codes >= lo) & (codes < hi)
        flat = (codes[sel] - lo) * N_BINS + bins[sel]
        return np.bincount(flat, minlength=(hi - lo) * N_BINS).reshape(hi - lo, N_BINS)

    parts = ordered_map(tally, chunked(len(users), chunk_size), workers)
    matrix = np.vstack(parts) if parts else np.zeros((0, N_BINS), dtype=np.int64)
    return users, matrix


def user_activity_curve(posts: PostTable, user: str) -> DiurnalCurve:
    """Share of a user's posts falling in each bin."""
    bins = posts.frame.loc[posts.frame["user"] == user, "bin"].to_numpy()
    if bins.size == 0:
        raise EmptyUserError(f"empty user {user!r}")
    return DiurnalCurve(_normalise(np.bincount(bins, minlength=N_BINS).astype(float)))


def cluster_activity_curve(posts: PostTable, members: Iterable[str]) -> DiurnalCurve:
    """Pooled activity of a user group: every post counts once, so heavy posters dominate."""
    members = set(members)
    if not members:
        raise EmptyUserError("cluster has no members")
    bins = posts.frame.loc[posts.frame["user"].isin(members), "bin"].to_numpy()
    if bins.size == 0:
        raise EmptyUserError("no member of the cluster has posts")
    return DiurnalCurve(_normalise(np.bincount(bins, minlength=N_BINS).astype(float)))


def gaussian_kernel(window_minutes: float = 90.0, sigma_bins: float | None = None) -> np.ndarray:
    """Unit-sum truncated Gaussian with ``2*round(window/30)+1`` taps."""
    if window_minutes < 15:
        raise ValueError("smoothing window shorter than one bin")
    half = int(round(window_minutes / 30.0))
    if sigma_bins is None:
        sigma_bins = window_minutes / 15.0 / 4.0
    if sigma_bins <= 0:
        raise ValueError("sigma must be positive")
    offsets = np.arange(-half, half + 1, dtype=float)
    kernel = np.exp(-0.5 * (offsets / sigma_bins) ** 2)
    return kernel / kernel.sum()


def circular_convolve(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    half = len(kernel) // 2
    out = np.zeros_like(values)
    for j, w in enumerate(kernel):
        out += w * np.roll(values, j - half)
    return out


def gaussian_circular_smooth(curve: DiurnalCurve, window_minutes: float = 90.0,
                             sigma_bins: float | None = None) -> DiurnalCurve:
    """Rolling Gaussian average that wraps around midnight.

    The default 90-minute window gives 7 taps (offsets -3..3 bins) with
    ``sigma = 1.5`` bins.  Mass is preserved because the kernel sums to one.
    """
    kernel = gaussian_kernel(window_minutes, sigma_bins)
    values = curve.values if isinstance(curve, DiurnalCurve) else np.asarray(curve, dtype=float)
    return DiurnalCurve(circular_convolve(values, kernel), "smoothed")


def smoothed_profiles(counts: np.ndarray, window_minutes: float = 90.0,
                      sigma_bins: float | None = None) -> np.ndarray:
    """Row-normalize a count matrix and smooth every row (clustering features)."""
    counts = np.asarray(counts, dtype=float)
    totals = counts.sum(axis=1, keepdims=True)
    if np.any(totals == 0):
        raise EmptyUserError("profile matrix contains a user without posts")
    kernel = gaussian_kernel(window_minutes, sigma_bins)
    rows = counts / totals
    half = len(kernel) // 2
    out = np.zeros_like(rows)
    for j, w in enumerate(kernel):
        out += w * np.roll(rows, j - half, axis=1)
    return out
