"""Clock arithmetic, heightened-activity windows, waking-time alignment and extrema."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .activity import DiurnalCurve
from .ingest import N_BINS

BINS_PER_HOUR = N_BINS // 24


def mod_time(t: float, n: float) -> float:
    """Clock time ``n`` hours after ``t``, in [0, 24)."""
    out = math.fmod(t + n, 24.0)
    if out < 0:
        out += 24.0
    return 0.0 if out >= 24.0 else out + 0.0


def in_window(t: float, s: float, n: float) -> bool:
    """Whether clock time ``s`` falls in the ``n``-hour window starting at ``t``.

    The window is half-open, ``[t, t + n)``, wrapping past midnight.
    """
    end = mod_time(t, n)
    if t < end:
        return t <= s < end
    return s >= t or s < end


@dataclass(frozen=True)
class WakeWindow:
    onset: float
    length: float
    window_sum: float = float("nan")
    degenerate: bool = False

    @property
    def end(self) -> float:
        return mod_time(self.onset, self.length)

    @property
    def onset_bin(self) -> int:
        return int(round(self.onset * BINS_PER_HOUR)) % N_BINS

    def bins(self) -> np.ndarray:
        width = int(round(self.length * BINS_PER_HOUR))
        return (self.onset_bin + np.arange(width)) % N_BINS

    def complement_bins(self) -> np.ndarray:
        """Bins of prolonged wakefulness (after the end, before the onset)."""
        inside = np.zeros(N_BINS, dtype=bool)
        inside[self.bins()] = True
        return np.flatnonzero(~inside)


def window_sums(values, n_hours: float) -> np.ndarray:
    """Sum over every circular window of ``n_hours`` (indexed by starting bin)."""
    values = np.asarray(values, float)
    width = int(round(n_hours * BINS_PER_HOUR))
    if not 0 < width < N_BINS:
        raise ValueError("window length must lie strictly between 0 and 24 hours")
    idx = (np.arange(N_BINS)[:, None] + np.arange(width)[None, :]) % N_BINS
    return values[idx].sum(axis=1)


def heightened_window(curve, n: float = 16.0, rtol: float = 1e-12) -> WakeWindow:
    """Onset of the ``n`` contiguous hours with the largest summed activity.

    Window sums within ``rtol`` of the maximum count as ties; the earliest
    clock time wins.  A curve whose window sums are all tied is flagged
    ``degenerate`` (onset 00:00).
    """
    values = np.asarray(getattr(curve, "values", curve), float)
    sums = window_sums(values, n)
    top = sums.max()
    tol = rtol * max(abs(top), 1e-300)
    onset_bin = int(np.flatnonzero(sums >= top - tol)[0])
    degenerate = bool(sums.max() - sums.min() <= tol)
    return WakeWindow(onset_bin / BINS_PER_HOUR, float(n), float(sums[onset_bin]), degenerate)


def align_by_reference(curve, reference_hour: float) -> DiurnalCurve:
    """Rotate a curve so ``reference_hour`` becomes position 0 (hours past reference)."""
    k = reference_hour * BINS_PER_HOUR
    if abs(k - round(k)) > 1e-9:
        raise ValueError(f"reference {reference_hour} h is not on a bin boundary")
    values = np.asarray(getattr(curve, "values", curve), float)
    kind = getattr(curve, "kind", "raw")
    return DiurnalCurve(np.roll(values, -int(round(k)) % N_BINS), kind)


@dataclass(frozen=True)
class Extremum:
    hour: float
    value: float
    kind: str

    @property
    def bin(self) -> int:
        return int(round(self.hour * BINS_PER_HOUR))


def extract_extrema(curve, count: int = 2) -> list[Extremum]:
    """Strict local maxima and minima on the circular grid.

    Maxima are ranked by decreasing value and minima by increasing value; at
    most ``count`` of each are returned, maxima first.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    v = np.asarray(getattr(curve, "values", curve), float)
    prev, nxt = np.roll(v, 1), np.roll(v, -1)
    maxima = np.flatnonzero((v > prev) & (v > nxt))
    minima = np.flatnonzero((v < prev) & (v < nxt))
    maxima = maxima[np.argsort(-v[maxima], kind="stable")][:count]
    minima = minima[np.argsort(v[minima], kind="stable")][:count]
    return ([Extremum(b / BINS_PER_HOUR, float(v[b]), "max") for b in maxima]
            + [Extremum(b / BINS_PER_HOUR, float(v[b]), "min") for b in minima])
