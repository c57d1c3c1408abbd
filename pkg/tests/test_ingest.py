from datetime import date

import numpy as np
import pandas as pd
import pytest

from diurnal.ingest import (ContentCategory, IngestError, PostTable, attach_coordinates, load_table,
                            localize, map_and_filter, parse_posts, write_posts)

HEADER = "ts\tuser\tkind\tdomain\tcategory\tlat\tlon\n"
FIVE = HEADER + (
    "2020-02-01T10:00:00Z\talice\ttweet\tnews.example\t\t\t\n"
    "2020-02-01T10:05:00Z\talice\tretweet\tfake.example\t\t\t\n"
    "not-a-time\tbob\ttweet\t\t\t\t\n"
    "2020-02-02T23:30:00Z\tbob\treply\t\tScience\t41.9\t12.5\n"
    "2020-02-03T12:00:00Z\tbot1\ttweet\tnews.example\t\t\t\n"
)


def test_five_row_fixture_with_one_bad_timestamp():
    with pytest.raises(IngestError):
        parse_posts(FIVE)  # 1/5 malformed exceeds the 5% default
    t = parse_posts(FIVE, reject_threshold=0.25)
    assert len(t) == 4
    assert t.counters["rejected"] == 1 and t.counters["rows_in"] == 5
    assert t.rejects[0].line == 4


def test_empty_stream_gives_empty_table():
    t = parse_posts(HEADER)
    assert len(t) == 0
    assert parse_posts("").counters["rows_in"] == 0


def test_missing_required_column():
    with pytest.raises(IngestError):
        parse_posts("ts\tkind\n2020-02-01T00:00:00Z\ttweet\n")


def test_duplicates_and_span():
    rows = HEADER + "".join([
        "2020-02-01T10:00:00Z\ta\ttweet\tx.example\tScience\t\t\n",
        "2020-02-01T10:00:00Z\ta\ttweet\tx.example\tScience\t\t\n",
        # same instant, different category: kept
        "2020-02-01T10:00:00Z\ta\ttweet\tx.example\tSatire\t\t\n",
        "2019-12-31T10:00:00Z\ta\ttweet\tx.example\tScience\t\t\n",
    ])
    t = parse_posts(rows)
    assert len(t) == 2
    assert t.counters["duplicates_dropped"] == 1
    assert t.counters["out_of_span"] == 1
    # row conservation
    c = t.counters
    assert c["rows_in"] == len(t) + c["rejected"] + c["duplicates_dropped"] + c["out_of_span"]


def test_naive_timestamp_rejected():
    t = parse_posts(HEADER + "2020-02-01T10:00:00\ta\ttweet\t\t\t\t\n", reject_threshold=1.0)
    assert len(t) == 0 and t.counters["rejected"] == 1


def test_category_parse_aliases():
    assert ContentCategory.parse("fake/hoax") is ContentCategory.FAKE_OR_HOAX
    assert ContentCategory.parse("Conspiracy & Junk Science") is ContentCategory.CONSPIRACY_JUNK_SCIENCE
    assert ContentCategory.POLITICAL.disinformative
    assert not ContentCategory.SCIENCE.disinformative
    with pytest.raises(ValueError):
        ContentCategory.parse("gossip")


def test_map_and_filter_bots_and_other():
    t = parse_posts(FIVE, reject_threshold=0.25)
    t = map_and_filter(t, {"news.example": "MainstreamMedia", "fake.example": "FakeOrHoax"}, {"bot1"})
    assert "bot1" not in t.users
    assert t.counters["bots_removed"] == 1
    cats = dict(zip(t.frame["kind"] + t.frame["user"], t.frame["category"]))
    assert cats == {"tweetalice": "MainstreamMedia", "retweetalice": "FakeOrHoax", "replybob": "Science"}
    unmapped = map_and_filter(parse_posts(FIVE, reject_threshold=0.25), {}, ())
    assert (unmapped.frame["category"] == "Other").sum() == 3


def test_localize_bins_and_dst_flag():
    t = PostTable.from_records([
        dict(ts="2020-01-15T23:50:00Z", user="a", kind="tweet", domain=None, category=None, lat=None, lon=None),
        dict(ts="2020-03-29T01:30:00Z", user="a", kind="tweet", domain=None, category=None, lat=None, lon=None),
        dict(ts="2020-07-01T09:07:00Z", user="a", kind="tweet", domain=None, category=None, lat=None, lon=None),
    ])
    loc = localize(t, "europe-central")
    f = loc.frame
    assert f["bin"].tolist() == [3, 14, 44]  # 00:50, 03:30, 11:07 local
    assert f["local_date"].astype(str).tolist() == ["2020-01-16", "2020-03-29", "2020-07-01"]
    assert f["dst_flag"].tolist() == [False, True, False]
    assert loc.counters["dst_flagged"] == 1
    assert np.allclose(f["local_hour"], [50 / 60, 3.5, 11 + 7 / 60])


def test_write_and_reload_is_idempotent(tmp_path):
    t = parse_posts(FIVE, reject_threshold=0.25)
    t = map_and_filter(t, {"news.example": "MainstreamMedia"}, {"bot1"})
    p1, p2 = tmp_path / "a.tsv", tmp_path / "b.tsv"
    write_posts(t, p1)
    t2 = map_and_filter(parse_posts(p1), {"news.example": "MainstreamMedia"}, {"bot1"})
    write_posts(t2, p2)
    assert p1.read_bytes() == p2.read_bytes()
    pd.testing.assert_frame_equal(t.frame, t2.frame)


def test_attach_coordinates_precedence():
    t = parse_posts(FIVE, reject_threshold=0.25)
    t = attach_coordinates(t, {"alice": (45.0, 9.0)}, centroid=(42.5, 12.5))
    f = t.frame.set_index(["user", "kind"])
    assert f.loc[("alice", "tweet"), "lat"] == 45.0
    assert f.loc[("bob", "reply"), "lat"] == 41.9
    assert f.loc[("bot1", "tweet"), "lon"] == 12.5


def test_load_table_chain(tmp_path):
    posts = tmp_path / "p.tsv"
    posts.write_text(FIVE.replace("not-a-time", "2020-02-01T11:00:00Z"))
    cmap = tmp_path / "c.tsv"
    cmap.write_text("# comment\nnews.example\tMainstreamMedia\n")
    bots = tmp_path / "b.txt"
    bots.write_text("bot1\n")
    t = load_table(posts, cmap, bots, span=(date(2020, 1, 1), date(2020, 12, 31)))
    assert len(t) == 4 and t.localized
    assert not t.frame[["lat", "lon"]].isna().any().any()
