"""Fourier decomposition of diurnal curves and top-m harmonic reconstruction."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import pandas as pd

from .activity import DiurnalCurve
from .curvedist import ALL_METRICS, MetricKind, curve_distance
from .ingest import N_BINS

PERIOD_HOURS = 24.0


@lru_cache(maxsize=8)
def _dft_matrix(n: int) -> np.ndarray:
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n)


@dataclass(frozen=True)
class SpectralDecomposition:
    """DFT of one sampled period.

    ``amplitudes[n]`` and ``phases[n]`` for ``n = 0..N/2`` make the series
    ``amplitudes[0]/2 + sum_n amplitudes[n] * cos(2 pi n (t - t0) / period - phases[n])``
    pass exactly through the samples, where sample ``b`` sits at
    ``t = t0 + b * period / N`` and ``t0`` is half a bin (bin midpoints).
    """

    coefficients: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray
    period: float = PERIOD_HOURS

    @property
    def n_samples(self) -> int:
        return len(self.coefficients)

    @property
    def n_harmonics(self) -> int:
        return self.n_samples // 2

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"n": np.arange(len(self.amplitudes)),
                             "amplitude": self.amplitudes, "phase": self.phases})

    def top_harmonics(self, m: int) -> np.ndarray:
        """Indices of the ``m`` largest-amplitude harmonics (n >= 1); ties go to lower n."""
        amps = self.amplitudes[1:]
        order = np.argsort(-amps, kind="stable")
        return np.sort(order[:m] + 1)

    def evaluate(self, hours, harmonics=None) -> np.ndarray:
        """Series value at arbitrary clock times (hours)."""
        n = self.n_samples
        t0 = self.period / n / 2
        t = np.atleast_1d(np.asarray(hours, float))
        if harmonics is None:
            harmonics = np.arange(1, self.n_harmonics + 1)
        out = np.full(t.shape, self.amplitudes[0] / 2)
        for h in harmonics:
            out += self.amplitudes[h] * np.cos(2 * np.pi * h * (t - t0) / self.period - self.phases[h])
        return out


def dft_forward(curve) -> SpectralDecomposition:
    """Direct (unnormalized) DFT ``X_k = sum_n x_n exp(-2 pi i k n / N)``."""
    x = np.asarray(getattr(curve, "values", curve), float)
    n = len(x)
    coeffs = _dft_matrix(n) @ x
    half = n // 2
    amps = 2.0 * np.abs(coeffs[: half + 1]) / n
    amps[0] = 2.0 * coeffs[0].real / n
    if n % 2 == 0:
        amps[half] /= 2.0
    phases = -np.angle(coeffs[: half + 1])
    phases[0] = 0.0
    return SpectralDecomposition(coeffs, amps, phases)


def _reconstruct(spec: SpectralDecomposition, m: int) -> np.ndarray:
    n = spec.n_samples
    b = np.arange(n)
    out = np.full(n, spec.amplitudes[0] / 2)
    if m == 0:
        return out
    h = spec.top_harmonics(m)
    waves = np.cos(2 * np.pi * np.outer(h, b) / n - spec.phases[h][:, None])
    return out + spec.amplitudes[h] @ waves


def reconstruct_top_m(spec: SpectralDecomposition, m: int) -> DiurnalCurve:
    """Mean plus the ``m`` harmonics of largest amplitude, sampled at the bin midpoints."""
    if not 1 <= m <= spec.n_harmonics:
        raise ValueError(f"m must lie in [1, {spec.n_harmonics}], got {m}")
    return DiurnalCurve(_reconstruct(spec, m), "spectral")


def distance_table(curve, metrics=ALL_METRICS, m_values=range(0, 6)) -> pd.DataFrame:
    """``D[m, metric]``: distance between the top-m reconstruction and the curve."""
    x = np.asarray(getattr(curve, "values", curve), float)
    spec = dft_forward(x)
    rows = {}
    for m in m_values:
        rec = _reconstruct(spec, m)
        rows[m] = {MetricKind(u).value: curve_distance(rec, x, u) for u in metrics}
    table = pd.DataFrame.from_dict(rows, orient="index")
    table.index.name = "m"
    return table


def select_m(curve, metrics=ALL_METRICS, m_range: tuple[int, int] = (1, 4)) -> tuple[int, pd.DataFrame]:
    """Choose the harmonic budget by a per-metric knee vote.

    For every metric the distances ``D(m)`` are computed for
    ``m = m_lo-1 .. m_hi+1`` (``m = 0`` is the mean alone).  A metric votes
    for the ``m`` in ``[m_lo, m_hi]`` after which the improvement drops the
    most, i.e. the largest ``(D(m-1) - D(m)) - (D(m) - D(m+1))``; ties go to
    the smaller ``m``.  The result is the smallest of the most common votes.

    Returns
    -------
    m, table
        ``table`` holds the distances (rows ``m``) plus a ``vote`` row.
    """
    m_lo, m_hi = m_range
    metrics = [MetricKind(u) for u in metrics]
    if not metrics:
        raise ValueError("at least one metric required")
    n = len(np.asarray(getattr(curve, "values", curve)))
    if not (1 <= m_lo <= m_hi and m_hi + 1 <= n // 2):
        raise ValueError(f"m_range {m_range} outside [1, {n // 2 - 1}]")
    table = distance_table(curve, metrics, range(m_lo - 1, m_hi + 2))
    votes = {}
    for u in metrics:
        d = table[u.value]
        knee = [(d[m - 1] - d[m]) - (d[m] - d[m + 1]) for m in range(m_lo, m_hi + 1)]
        best = max(knee)
        votes[u.value] = m_lo + knee.index(best)
    counts = Counter(votes.values())
    top = max(counts.values())
    m = min(v for v, c in counts.items() if c == top)
    table.loc["vote"] = pd.Series(votes)
    return m, table


def smooth_spectral(curve, m: int | None = None, metrics=ALL_METRICS,
                    m_range=(1, 4)) -> tuple[DiurnalCurve, int, pd.DataFrame | None]:
    """Top-m reconstruction, choosing ``m`` with :func:`select_m` when not given."""
    table = None
    if m is None:
        m, table = select_m(curve, metrics, m_range)
    return reconstruct_top_m(dft_forward(curve), m), m, table
