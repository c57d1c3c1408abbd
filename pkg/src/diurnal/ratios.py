"""User-weighted content-type ratios per time-of-day bin.

Every post of user ``i`` carries weight ``1 / (total posts of i)`` so each
user contributes equally.  Ratios are taken over the classifiable categories
only (everything except ``Other``); bins without any weighted classifiable
post are masked.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from typing import Iterable

import numpy as np
import pandas as pd

from ._parallel import chunked, ordered_map
from .ingest import (ALL_CATEGORIES, CATEGORY_CODES, DISINFORMATIVE, KNOWN_CATEGORIES,
                     N_BINS, ContentCategory, PostTable)
from .activity import EmptyUserError
from .rhythm import in_window
from .spectral import ALL_METRICS, dft_forward, reconstruct_top_m, select_m

N_CAT = len(ALL_CATEGORIES)
_KNOWN_CODES = np.array([CATEGORY_CODES[c] for c in KNOWN_CATEGORIES])


def _category_set(categories) -> tuple[ContentCategory, ...]:
    cats = {ContentCategory.parse(c) for c in categories}
    if ContentCategory.OTHER in cats:
        raise ValueError("ratios exclude the Other category")
    return tuple(c for c in ALL_CATEGORIES if c in cats)


def user_weight(posts: PostTable, user: str) -> float:
    n = int((posts.frame["user"] == user).sum())
    if n == 0:
        raise EmptyUserError(f"empty user {user!r}")
    return 1.0 / n


def weighted_tally(posts: PostTable, members: Iterable[str], groups: np.ndarray | None = None,
                   n_groups: int = 1, workers: int | None = None,
                   chunk_size: int = 2048) -> np.ndarray:
    """``out[g, f, t]`` = sum over members of ``w(i) * #posts(i, f, t)`` within group ``g``.

    Counts are formed per user first and then weighted, and users are reduced
    in sorted order over fixed chunks, so the result does not depend on the
    worker count and duplicating a user's posts changes nothing.
    """
    frame = posts.frame
    users = sorted(set(members))
    codes = pd.Categorical(frame["user"], categories=users).codes.astype(np.int64)
    keep = codes >= 0
    codes = codes[keep]
    totals = np.bincount(codes, minlength=len(users)).astype(float)
    cats = frame["category"].map(lambda c: CATEGORY_CODES[ContentCategory(c)]).to_numpy()[keep].astype(np.int64)
    bins = frame["bin"].to_numpy()[keep].astype(np.int64)
    grp = np.zeros(len(codes), dtype=np.int64) if groups is None else np.asarray(groups)[keep].astype(np.int64)
    cell = (grp * N_CAT + cats) * N_BINS + bins
    n_cells = n_groups * N_CAT * N_BINS
    order = np.argsort(codes, kind="stable")
    codes, cell = codes[order], cell[order]
    bounds = np.searchsorted(codes, np.arange(len(users) + 1))

    def partial(span):
        lo, hi = span
        a, b = bounds[lo], bounds[hi]
        counts = np.bincount((codes[a:b] - lo) * n_cells + cell[a:b],
                             minlength=(hi - lo) * n_cells).reshape(hi - lo, n_cells)
        # divide rather than multiply by 1/total: k*c / k*T rounds exactly like c / T
        return (counts / totals[lo:hi, None]).sum(axis=0)

    out = np.zeros(n_cells)
    for part in ordered_map(partial, chunked(len(users), chunk_size), workers):
        out += part
    return out.reshape(n_groups, N_CAT, N_BINS)


def _ratios_from_tally(tally: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-category ratios ``(..., N_CAT, 96)`` (NaN where masked) and the mask."""
    den = tally[..., _KNOWN_CODES, :].sum(axis=-2)
    mask = den == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        r = tally / den[..., None, :]
    r[..., CATEGORY_CODES[ContentCategory.OTHER], :] = np.nan
    r = np.where(mask[..., None, :], np.nan, r)
    return r, mask


def _combine(per_cat: np.ndarray, cats: tuple[ContentCategory, ...]) -> np.ndarray:
    out = per_cat[..., CATEGORY_CODES[cats[0]], :].copy()
    for c in cats[1:]:
        out = out + per_cat[..., CATEGORY_CODES[c], :]
    return out


@dataclass(frozen=True)
class RatioSeries:
    values: np.ndarray
    mask: np.ndarray
    categories: tuple
    label: str = ""
    kind: str = "raw"

    @property
    def unmasked(self) -> np.ndarray:
        return self.values[~self.mask]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"bin": np.arange(N_BINS), "value": self.values, "masked": self.mask})


def ratio_series(posts: PostTable, members: Iterable[str], categories=DISINFORMATIVE,
                 label: str = "", workers: int | None = None) -> RatioSeries:
    """Weighted share of ``categories`` among classifiable posts, per bin."""
    cats = _category_set(categories)
    tally = weighted_tally(posts, members, workers=workers)[0]
    per_cat, mask = _ratios_from_tally(tally)
    return RatioSeries(_combine(per_cat, cats), mask, tuple(c.value for c in cats), label, "raw")


def category_ratio_table(posts: PostTable, members: Iterable[str],
                         workers: int | None = None) -> pd.DataFrame:
    """Single-category ratio series for every classifiable category (columns) by bin."""
    tally = weighted_tally(posts, members, workers=workers)[0]
    per_cat, _ = _ratios_from_tally(tally)
    return pd.DataFrame({c.value: per_cat[CATEGORY_CODES[c]] for c in KNOWN_CATEGORIES})


def day_total_ratio(posts: PostTable, members: Iterable[str], categories=DISINFORMATIVE,
                    workers: int | None = None) -> float:
    """Weighted share over the whole day (all bins pooled)."""
    cats = _category_set(categories)
    tally = weighted_tally(posts, members, workers=workers)[0].sum(axis=-1)
    den = tally[_KNOWN_CODES].sum()
    if den == 0:
        return float("nan")
    return float(sum(tally[CATEGORY_CODES[c]] for c in cats) / den)


def fill_masked(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Circular linear interpolation across masked bins."""
    values = np.asarray(values, float)
    if mask.all():
        raise ValueError("every bin is masked")
    if not mask.any():
        return values.copy()
    known = np.flatnonzero(~mask)
    xp = np.concatenate([known - N_BINS, known, known + N_BINS])
    fp = np.tile(values[known], 3)
    return np.interp(np.arange(N_BINS), xp, fp)


def smooth_ratio(series: RatioSeries, m: int | None = None, metrics=ALL_METRICS,
                 m_range=(1, 4)) -> tuple[RatioSeries, int, pd.DataFrame | None]:
    """Spectral smoothing of a ratio series (masked bins interpolated first)."""
    filled = fill_masked(series.values, series.mask)
    table = None
    if m is None:
        m, table = select_m(filled, metrics, m_range)
    smooth = reconstruct_top_m(dft_forward(filled), m).values
    return (RatioSeries(smooth, np.zeros(N_BINS, dtype=bool), series.categories, series.label, "spectral"),
            m, table)


def susceptibility_windows(smoothed_ratio) -> np.ndarray:
    """Bins whose smoothed ratio exceeds the third quartile (linear interpolation)."""
    if isinstance(smoothed_ratio, RatioSeries):
        if smoothed_ratio.kind != "spectral":
            raise ValueError("susceptibility windows need a spectrally smoothed series")
        values = smoothed_ratio.values
    else:
        values = np.asarray(smoothed_ratio, float)
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return np.array([], dtype=int)
    q3 = np.quantile(finite, 0.75, method="linear")
    return np.flatnonzero(np.isfinite(values) & (values > q3))


# -- day / night partitions -------------------------------------------------

def _circular_bins(lo: float, hi: float) -> np.ndarray:
    length = (hi - lo) % 24.0
    return np.array([b for b in range(N_BINS) if in_window(lo % 24.0, b / 4.0, length)], dtype=int)


def day_night_bins(boundaries: tuple[float, float], margin: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Bins of day ``[start+margin, end-margin)`` and night ``[end+margin, start-margin)``."""
    start, end = boundaries
    day_len = (end - start) % 24.0
    night_len = 24.0 - day_len
    if margin < 0:
        raise ValueError("margin must be non-negative")
    if day_len == 0 or not (margin < day_len / 2 and margin < night_len / 2):
        raise ValueError(f"degenerate day/night window for boundaries {boundaries} and margin {margin}")
    return (_circular_bins(start + margin, end - margin),
            _circular_bins(end + margin, start - margin))


def day_night_split(ratio_samples, boundaries: tuple[float, float],
                    margin: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Split per-bin values into day and night samples; masked (NaN) bins are dropped.

    ``ratio_samples`` may be a 96-vector or a ``(rows, 96)`` matrix whose rows
    are pooled.
    """
    values = np.atleast_2d(np.asarray(getattr(ratio_samples, "values", ratio_samples), float))
    if isinstance(ratio_samples, RatioSeries):
        values = np.where(ratio_samples.mask, np.nan, values)
    day, night = day_night_bins(boundaries, margin)
    d, n = values[:, day].ravel(), values[:, night].ravel()
    return d[np.isfinite(d)], n[np.isfinite(n)]


# -- period comparison -------------------------------------------------------

@dataclass(frozen=True)
class PeriodComparison:
    label: str
    period: tuple[date, date]
    users: int
    days_in: int
    days_out: int
    posts_per_day_user_in: float
    posts_per_day_user_out: float
    disinfo_per_day_user_in: float
    disinfo_per_day_user_out: float
    ratio_in: float
    ratio_out: float

    @property
    def posts_delta(self) -> float:
        return self.posts_per_day_user_in - self.posts_per_day_user_out

    @property
    def disinfo_delta(self) -> float:
        return self.disinfo_per_day_user_in - self.disinfo_per_day_user_out

    @property
    def ratio_delta(self) -> float:
        return self.ratio_in - self.ratio_out

    def rows(self) -> list[dict]:
        out = []
        for metric, a, b in (("posts_per_day_user", self.posts_per_day_user_out, self.posts_per_day_user_in),
                             ("disinformative_posts_per_day_user", self.disinfo_per_day_user_out,
                              self.disinfo_per_day_user_in),
                             ("disinformative_ratio", self.ratio_out, self.ratio_in)):
            out.append(dict(cluster=self.label, metric=metric, outside=a, inside=b, change=b - a))
        return out


def _post_dates(posts: PostTable) -> pd.Series:
    if "local_date" in posts.frame.columns:
        return pd.to_datetime(posts.frame["local_date"]).dt.date
    return posts.frame["ts"].dt.date


def period_comparison(posts: PostTable, members: Iterable[str], period: tuple[date, date],
                      label: str = "", workers: int | None = None) -> PeriodComparison:
    """Posting volume and disinformative share inside vs outside a date range (inclusive)."""
    members = sorted(set(members))
    span_lo, span_hi = posts.span
    lo, hi = max(period[0], span_lo), min(period[1], span_hi)
    days_in = (hi - lo).days + 1 if hi >= lo else 0
    if days_in <= 0:
        raise ValueError(f"period {period} does not overlap the analysis span")
    days_out = (span_hi - span_lo).days + 1 - days_in
    sub = posts.select_users(members)
    dates = _post_dates(sub)
    inside = ((dates >= period[0]) & (dates <= period[1])).to_numpy()
    groups = (~inside).astype(np.int64)
    tally = weighted_tally(sub, members, groups=groups, n_groups=2, workers=workers).sum(axis=-1)
    disinfo_codes = [CATEGORY_CODES[c] for c in ALL_CATEGORIES if c in DISINFORMATIVE]
    is_disinfo = sub.frame["category"].isin([c.value for c in DISINFORMATIVE]).to_numpy()
    n_users = max(len(members), 1)

    def per_day(count, days):
        return count / days / n_users if days > 0 else float("nan")

    def ratio(g):
        den = tally[g, _KNOWN_CODES].sum()
        return float(tally[g, disinfo_codes].sum() / den) if den > 0 else float("nan")

    return PeriodComparison(
        label, period, len(members), days_in, days_out,
        per_day(int(inside.sum()), days_in), per_day(int((~inside).sum()), days_out),
        per_day(int((inside & is_disinfo).sum()), days_in), per_day(int((~inside & is_disinfo).sum()), days_out),
        ratio(0), ratio(1) if days_out > 0 else float("nan"),
    )


def month_bin_ratios(posts: PostTable, members: Iterable[str], categories=DISINFORMATIVE,
                     workers: int | None = None) -> pd.DataFrame:
    """Month x bin matrix of weighted ratios (NaN where masked), months as ``YYYY-MM``."""
    cats = _category_set(categories)
    members = sorted(set(members))
    sub = posts.select_users(members)
    months = pd.to_datetime(_post_dates(sub)).dt.to_period("M")
    lo, hi = posts.span
    index = pd.period_range(pd.Period(lo, "M"), pd.Period(hi, "M"), freq="M")
    codes = np.asarray([index.get_loc(p) for p in months], dtype=np.int64) if len(months) else np.zeros(0, np.int64)
    tally = weighted_tally(sub, members, groups=codes, n_groups=len(index), workers=workers)
    per_cat, _ = _ratios_from_tally(tally)
    matrix = _combine(per_cat, cats)
    return pd.DataFrame(matrix, index=[str(p) for p in index], columns=range(N_BINS))


def user_disinfo_ratios(posts: PostTable, members: Iterable[str]) -> pd.DataFrame:
    """Per user: total posts and unweighted share of disinformative among classifiable posts."""
    frame = posts.frame.loc[posts.frame["user"].isin(set(members))]
    known = frame["category"] != ContentCategory.OTHER.value
    dis = frame["category"].isin([c.value for c in DISINFORMATIVE])
    g = pd.DataFrame({"user": frame["user"], "known": known, "dis": dis}).groupby("user", sort=True)
    out = pd.DataFrame({"total_posts": g.size(), "known": g["known"].sum(), "disinformative": g["dis"].sum()})
    out["ratio"] = np.where(out["known"] > 0, out["disinformative"] / out["known"].where(out["known"] > 0, 1), np.nan)
    return out
