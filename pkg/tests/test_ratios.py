from datetime import date

import numpy as np
import pandas as pd
import pytest

from diurnal.ingest import ContentCategory, DISINFORMATIVE, KNOWN_CATEGORIES
from diurnal.ratios import (RatioSeries, category_ratio_table, day_night_bins, day_night_split,
                            day_total_ratio, fill_masked, month_bin_ratios, period_comparison,
                            ratio_series, smooth_ratio, susceptibility_windows, user_weight,
                            user_disinfo_ratios, weighted_tally)
from conftest import make_table

CATS = [c.value for c in ContentCategory]
SPAN = (date(2020, 1, 1), date(2020, 12, 31))


def random_table(rng, n_users=15, n_posts=1500, span=SPAN):
    users = [f"u{i:02d}" for i in range(n_users)]
    days = (span[1] - span[0]).days + 1
    rows = []
    for _ in range(n_posts):
        u = users[rng.integers(n_users)]
        day = pd.Timestamp(span[0]) + pd.Timedelta(days=int(rng.integers(days)))
        ts = day + pd.Timedelta(seconds=int(rng.integers(86400)))
        rows.append((ts.strftime("%Y-%m-%dT%H:%M:%SZ"), u, CATS[rng.integers(len(CATS))]))
    return make_table(rows, span=span), users


def brute_ratio(table, members, cats):
    f = table.frame[table.frame["user"].isin(members)]
    totals = f.groupby("user").size()
    num, den = np.zeros(96), np.zeros(96)
    for user, b, c in zip(f["user"], f["bin"], f["category"]):
        w = 1.0 / totals[user]
        if c != "Other":
            den[b] += w
            if c in cats:
                num[b] += w
    with np.errstate(invalid="ignore"):
        return np.where(den > 0, num / den, np.nan)


def test_ratio_matches_brute_force(rng):
    t, users = random_table(rng)
    r = ratio_series(t, users)
    expected = brute_ratio(t, users, {c.value for c in DISINFORMATIVE})
    assert np.array_equal(np.isnan(expected), r.mask)
    assert np.allclose(r.unmasked, expected[~r.mask], rtol=1e-12)


def test_single_categories_sum_to_one(rng):
    t, users = random_table(rng)
    table = category_ratio_table(t, users)
    sums = table.sum(axis=1, min_count=1).to_numpy()
    ok = ~np.isnan(sums)
    assert np.allclose(sums[ok], 1.0)
    composite = ratio_series(t, users).values
    parts = table[[c.value for c in KNOWN_CATEGORIES if c in DISINFORMATIVE]].sum(axis=1).to_numpy()
    assert np.allclose(composite[ok], parts[ok])


def test_duplicating_a_users_posts_is_bit_identical(rng):
    t, users = random_table(rng)
    f = t.frame
    dup = pd.concat([f, f[f["user"] == "u03"]], ignore_index=True)
    t2 = type(t)(frame=dup, span=t.span, tz_rule=t.tz_rule)
    assert np.array_equal(weighted_tally(t, users), weighted_tally(t2, users))


def test_worker_count_does_not_change_bits(rng):
    t, users = random_table(rng, n_users=40)
    a = weighted_tally(t, users, workers=1, chunk_size=3)
    b = weighted_tally(t, users, workers=4, chunk_size=3)
    assert np.array_equal(a, b)


def test_other_is_rejected_and_user_weight(rng):
    t, users = random_table(rng)
    with pytest.raises(ValueError):
        ratio_series(t, users, categories={"Other"})
    assert user_weight(t, "u00") == 1.0 / (t.frame["user"] == "u00").sum()


def test_day_total_ratio_small_example():
    rows = [("2020-02-01T10:00:00Z", "a", "FakeOrHoax"), ("2020-02-01T11:00:00Z", "a", "Science"),
            ("2020-02-01T12:00:00Z", "b", "Political"), ("2020-02-01T13:00:00Z", "b", "Other")]
    t = make_table(rows)
    # a: 0.5 disinfo of 1.0 known; b: 0.5 of 0.5 -> (0.5 + 0.5) / 1.5
    assert day_total_ratio(t, ["a", "b"]) == pytest.approx(2 / 3)
    r = ratio_series(t, ["a", "b"])
    assert r.values[40] == 1.0 and r.values[44] == 0.0 and r.mask[52]


def test_day_night_bins_example():
    day, night = day_night_bins((6.5, 18.75), 1.0)
    assert day.tolist() == list(range(30, 71))
    assert night.tolist() == list(range(0, 22)) + list(range(79, 96))
    d0, n0 = day_night_bins((6.5, 18.75), 0.0)
    assert sorted(np.concatenate([d0, n0]).tolist()) == list(range(96))
    with pytest.raises(ValueError):
        day_night_bins((6.0, 8.0), 1.0)


def test_day_night_split_drops_masked():
    v = np.arange(96, dtype=float)
    v[35] = np.nan
    d, n = day_night_split(v, (6.5, 18.75), 1.0)
    assert len(d) == 40 and len(n) == 39
    m = np.vstack([v, v])
    d2, _ = day_night_split(m, (6.5, 18.75))
    assert len(d2) == 80


def test_susceptibility_on_cosine():
    v = np.cos(2 * np.pi * (np.arange(96) + 0.5) / 96)
    s = RatioSeries(v, np.zeros(96, bool), ("Political",), kind="spectral")
    sus = susceptibility_windows(s)
    assert len(sus) == 24
    assert set(sus) == set(range(0, 12)) | set(range(84, 96))
    with pytest.raises(ValueError):
        susceptibility_windows(RatioSeries(v, np.zeros(96, bool), ("Political",)))


def test_fill_and_smooth():
    v = 0.3 + 0.1 * np.cos(2 * np.pi * np.arange(96) / 96)
    mask = np.zeros(96, bool)
    mask[[0, 50, 51]] = True
    filled = fill_masked(np.where(mask, np.nan, v), mask)
    assert np.all(np.isfinite(filled)) and np.allclose(filled[~mask], v[~mask])
    assert min(v[49], v[52]) <= filled[50] <= max(v[49], v[52])
    sm, m, _ = smooth_ratio(RatioSeries(np.where(mask, np.nan, v), mask, ("Political",)), m=1)
    assert sm.kind == "spectral" and m == 1 and not sm.mask.any()


def test_period_comparison_counts():
    rows = []
    for day in ("2020-03-10", "2020-03-11"):
        rows.append((f"{day}T10:00:00Z", "a", "Political"))
        rows.append((f"{day}T11:00:00Z", "a", "Science"))
    rows.append(("2020-06-01T10:00:00Z", "a", "Science"))
    span = (date(2020, 3, 1), date(2020, 6, 30))
    t = make_table(rows, span=span)
    pc = period_comparison(t, ["a"], (date(2020, 3, 9), date(2020, 5, 18)))
    assert pc.days_in == 71 and pc.days_out == 122 - 71
    assert pc.posts_per_day_user_in == pytest.approx(4 / 71)
    assert pc.disinfo_per_day_user_out == 0.0
    assert pc.ratio_in == pytest.approx(0.5) and pc.ratio_out == 0.0
    assert [r["metric"] for r in pc.rows()][0] == "posts_per_day_user"
    with pytest.raises(ValueError):
        period_comparison(t, ["a"], (date(2021, 1, 1), date(2021, 2, 1)))


def test_month_bin_and_user_ratios(rng):
    t, users = random_table(rng)
    mb = month_bin_ratios(t, users)
    assert mb.shape == (12, 96) and mb.index[0] == "2020-01"
    u = user_disinfo_ratios(t, users)
    assert u["total_posts"].sum() == len(t)
    assert ((u["ratio"] >= 0) & (u["ratio"] <= 1)).all()
