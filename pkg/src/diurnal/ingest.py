"""Parsing, categorization, bot filtering and time localization of posts."""
from __future__ import annotations

import csv
import io
import logging
import re
from dataclasses import dataclass, field, replace
from datetime import date, datetime
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import pandas as pd

from .tz import TzRule, get_tz_rule

log = logging.getLogger(__name__)

N_BINS = 96
DEFAULT_SPAN = (date(2020, 1, 22), date(2022, 8, 1))
DEFAULT_CENTROID = (42.5, 12.5)
COLUMNS = ("ts", "user", "kind", "domain", "category", "lat", "lon")


class ContentCategory(str, Enum):
    SCIENCE = "Science"
    MAINSTREAM_MEDIA = "MainstreamMedia"
    SATIRE = "Satire"
    CLICKBAIT = "Clickbait"
    OTHER = "Other"
    POLITICAL = "Political"
    FAKE_OR_HOAX = "FakeOrHoax"
    CONSPIRACY_JUNK_SCIENCE = "ConspiracyJunkScience"

    @property
    def disinformative(self) -> bool:
        return self in DISINFORMATIVE

    @classmethod
    def parse(cls, value: "str | ContentCategory") -> "ContentCategory":
        if isinstance(value, ContentCategory):
            return value
        key = _norm_key(value)
        try:
            return _CATEGORY_LOOKUP[key]
        except KeyError:
            raise ValueError(f"unknown content category {value!r}") from None


def _norm_key(text: str) -> str:
    return re.sub(r"[^a-z]", "", str(text).lower())


_CATEGORY_LOOKUP = {_norm_key(c.value): c for c in ContentCategory}
_CATEGORY_LOOKUP.update({
    "mainstream": ContentCategory.MAINSTREAM_MEDIA,
    "media": ContentCategory.MAINSTREAM_MEDIA,
    "fake": ContentCategory.FAKE_OR_HOAX,
    "hoax": ContentCategory.FAKE_OR_HOAX,
    "fakehoax": ContentCategory.FAKE_OR_HOAX,
    "conspiracy": ContentCategory.CONSPIRACY_JUNK_SCIENCE,
    "conspiracyandjunkscience": ContentCategory.CONSPIRACY_JUNK_SCIENCE,
    "junkscience": ContentCategory.CONSPIRACY_JUNK_SCIENCE,
    "shadow": ContentCategory.OTHER,
    "politicallybiased": ContentCategory.POLITICAL,
})

ALL_CATEGORIES: tuple[ContentCategory, ...] = tuple(ContentCategory)
KNOWN_CATEGORIES: tuple[ContentCategory, ...] = tuple(
    c for c in ContentCategory if c is not ContentCategory.OTHER)
DISINFORMATIVE: frozenset[ContentCategory] = frozenset({
    ContentCategory.POLITICAL,
    ContentCategory.FAKE_OR_HOAX,
    ContentCategory.CONSPIRACY_JUNK_SCIENCE,
})
CATEGORY_CODES = {c: i for i, c in enumerate(ALL_CATEGORIES)}


class PostKind(str, Enum):
    TWEET = "tweet"
    RETWEET = "retweet"
    REPLY = "reply"


class IngestError(ValueError):
    """Fatal input problem (e.g. too many malformed rows)."""


@dataclass(frozen=True)
class Reject:
    line: int
    reason: str


@dataclass(frozen=True)
class PostTable:
    """Columnar post store backed by a pandas DataFrame.

    ``frame`` always has the columns of :data:`COLUMNS` and, once localized,
    ``local_hour``, ``bin``, ``local_date`` and ``dst_flag``.  Rows are sorted
    by ``(user, ts)``.  Counters record what ingestion removed.
    """

    frame: pd.DataFrame
    span: tuple[date, date] = DEFAULT_SPAN
    tz_rule: str = "UTC"
    counters: Mapping[str, int] = field(default_factory=dict)
    rejects: tuple[Reject, ...] = ()

    def __post_init__(self):
        missing = [c for c in COLUMNS if c not in self.frame.columns]
        if missing:
            raise ValueError(f"PostTable frame lacks columns {missing}")

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def localized(self) -> bool:
        return "bin" in self.frame.columns

    @property
    def users(self) -> list[str]:
        return sorted(self.frame["user"].unique().tolist())

    def posts_per_user(self) -> pd.Series:
        return self.frame.groupby("user", sort=True).size()

    def select_users(self, users: Iterable[str]) -> "PostTable":
        keep = self.frame["user"].isin(set(users))
        return replace(self, frame=self.frame.loc[keep].reset_index(drop=True))

    def counter(self, name: str) -> int:
        return int(self.counters.get(name, 0))

    @classmethod
    def from_records(cls, records: Iterable[Mapping], span=DEFAULT_SPAN, tz_rule="UTC") -> "PostTable":
        """Build a table directly from dicts (no dedup, no span filtering)."""
        frame = pd.DataFrame(list(records), columns=list(COLUMNS))
        frame["ts"] = pd.to_datetime(frame["ts"], utc=True)
        frame = _normalise_frame(frame)
        return cls(frame=frame, span=span, tz_rule=tz_rule)


def _normalise_frame(frame: pd.DataFrame) -> pd.DataFrame:
    frame = frame.copy()
    frame["user"] = frame["user"].astype(str)
    frame["kind"] = [PostKind(k).value for k in frame["kind"]]
    frame["domain"] = frame["domain"].where(frame["domain"].notna(), None)
    frame["category"] = [
        None if (c is None or (isinstance(c, float) and np.isnan(c)) or c == "")
        else ContentCategory.parse(c).value
        for c in frame["category"]
    ]
    for col in ("lat", "lon"):
        frame[col] = pd.to_numeric(frame[col], errors="coerce").astype(float)
    frame = frame.sort_values(["user", "ts"], kind="mergesort").reset_index(drop=True)
    return frame


def _open_text(source) -> io.TextIOBase:
    if isinstance(source, Path) or (isinstance(source, str) and source and "\n" not in source):
        return open(source, newline="", encoding="utf-8")
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def parse_posts(source, schema: Mapping[str, str] | None = None,
                span: tuple[date, date] | None = DEFAULT_SPAN,
                reject_threshold: float = 0.05,
                delimiter: str | None = None) -> PostTable:
    """Read a delimited post file into a :class:`PostTable`.

    Parameters
    ----------
    source : path, file object or literal text
        UTF-8 TSV/CSV with a header row.
    schema : mapping, optional
        Canonical column name (``ts``, ``user``, ``kind``, ``domain``,
        ``category``, ``lat``, ``lon``) to the column name used in the file.
    span : (date, date) or None
        Inclusive first and last calendar day (UTC) to keep.
    reject_threshold : float
        Abort with :class:`IngestError` when more than this fraction of rows
        is malformed.
    delimiter : str, optional
        Sniffed from the header when omitted (tab wins over comma).

    Returns
    -------
    PostTable
        Deduplicated, sorted by ``(user, ts)``.  ``counters`` holds
        ``rows_in``, ``rejected``, ``duplicates_dropped`` and ``out_of_span``.
    """
    schema = {c: c for c in COLUMNS} | dict(schema or {})
    fh = _open_text(source)
    try:
        text = fh.read()
    finally:
        if fh is not source and not isinstance(source, io.TextIOBase):
            fh.close()
    span = span or (date.min, date.max)
    empty = PostTable(frame=_empty_frame(), span=span,
                      counters=dict(rows_in=0, rejected=0, duplicates_dropped=0, out_of_span=0))
    if not text.strip():
        return empty
    if delimiter is None:
        header = text.split("\n", 1)[0]
        delimiter = "\t" if "\t" in header else ","
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    header = next(reader)
    index = {name: i for i, name in enumerate(header)}
    for required in ("ts", "user", "kind"):
        if schema[required] not in index:
            raise IngestError(f"required column {schema[required]!r} missing from header")

    def col(row, name):
        i = index.get(schema[name])
        if i is None or i >= len(row):
            return None
        value = row[i].strip()
        return value or None

    good, rejects = [], []
    n_rows = 0
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        n_rows += 1
        try:
            rec = _parse_row(row, col)
        except ValueError as exc:
            rejects.append(Reject(line_no, str(exc)))
            continue
        good.append(rec)
    if n_rows and len(rejects) / n_rows > reject_threshold:
        raise IngestError(f"{len(rejects)} of {n_rows} rows malformed "
                          f"(threshold {reject_threshold:.0%})")
    if not good:
        return replace(empty, counters=dict(rows_in=n_rows, rejected=len(rejects),
                                            duplicates_dropped=0, out_of_span=0),
                       rejects=tuple(rejects))
    frame = pd.DataFrame(good, columns=list(COLUMNS))
    frame["ts"] = pd.to_datetime(frame["ts"], utc=True)
    day = frame["ts"].dt.date
    in_span = (day >= span[0]) & (day <= span[1])
    out_of_span = int((~in_span).sum())
    frame = frame.loc[in_span]
    before = len(frame)
    frame = frame.drop_duplicates(subset=["user", "ts", "kind", "domain", "category"])
    dups = before - len(frame)
    frame = _normalise_frame(frame)
    counters = dict(rows_in=n_rows, rejected=len(rejects), duplicates_dropped=dups,
                    out_of_span=out_of_span)
    if rejects:
        log.warning("%d malformed rows rejected", len(rejects))
    return PostTable(frame=frame, span=span, counters=counters, rejects=tuple(rejects))


def _empty_frame() -> pd.DataFrame:
    frame = pd.DataFrame({c: pd.Series(dtype=object) for c in COLUMNS})
    frame["ts"] = pd.to_datetime(frame["ts"], utc=True)
    frame["lat"] = frame["lat"].astype(float)
    frame["lon"] = frame["lon"].astype(float)
    return frame


def _parse_row(row, col) -> tuple:
    raw_ts = col(row, "ts")
    if raw_ts is None:
        raise ValueError("missing timestamp")
    try:
        ts = datetime.fromisoformat(raw_ts.replace("Z", "+00:00"))
    except ValueError:
        raise ValueError(f"bad timestamp {raw_ts!r}") from None
    if ts.tzinfo is None:
        raise ValueError(f"timestamp without UTC designator {raw_ts!r}")
    user = col(row, "user")
    if user is None:
        raise ValueError("missing user")
    kind = col(row, "kind")
    try:
        kind = PostKind((kind or "").lower()).value
    except ValueError:
        raise ValueError(f"bad post kind {kind!r}") from None
    domain = col(row, "domain")
    category = col(row, "category")
    if category is not None:
        category = ContentCategory.parse(category).value
    coords = []
    for name, bound in (("lat", 90), ("lon", 180)):
        v = col(row, name)
        if v is None:
            coords.append(np.nan)
            continue
        v = float(v)
        if not abs(v) <= bound:
            raise ValueError(f"{name} out of range: {v}")
        coords.append(v)
    return (ts, user, kind, domain.lower() if domain else None, category, *coords)


def read_category_map(path) -> dict[str, ContentCategory]:
    """Read a ``domain<TAB>category`` file (no header; ``#`` comments allowed)."""
    mapping = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            domain, _, cat = line.partition("\t")
            if domain.lower() == "domain" and cat.lower() == "category":
                continue
            mapping[domain.strip().lower()] = ContentCategory.parse(cat.strip())
    return mapping


def read_bot_list(path) -> set[str]:
    with open(path, encoding="utf-8") as fh:
        return {ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")}


def read_user_coordinates(path) -> dict[str, tuple[float, float]]:
    """Per-user fallback coordinates, TSV ``user<TAB>lat<TAB>lon``."""
    frame = pd.read_csv(path, sep="\t", dtype={"user": str})
    return {u: (float(a), float(o)) for u, a, o in zip(frame["user"], frame["lat"], frame["lon"])}


def _lookup(domain, mapping):
    if domain is None:
        return None
    domain = domain.lower()
    hit = mapping.get(domain)
    if hit is None and domain.startswith("www."):
        hit = mapping.get(domain[4:])
    return hit


def map_and_filter(table: PostTable, category_map: Mapping[str, ContentCategory] | None = None,
                   bot_list: Iterable[str] = ()) -> PostTable:
    """Assign reliability categories and drop bot users.

    A domain found in ``category_map`` decides the category; otherwise a
    category given directly in the input is kept; everything else becomes
    ``Other``.
    """
    category_map = {k.lower(): ContentCategory.parse(v) for k, v in (category_map or {}).items()}
    frame = table.frame
    bots = set(bot_list)
    is_bot = frame["user"].isin(bots)
    frame = frame.loc[~is_bot].copy()
    cats = []
    for domain, given in zip(frame["domain"], frame["category"]):
        hit = _lookup(domain, category_map)
        if hit is not None:
            cats.append(hit.value)
        elif given is not None:
            cats.append(given)
        else:
            cats.append(ContentCategory.OTHER.value)
    frame["category"] = cats
    frame = frame.reset_index(drop=True)
    counters = dict(table.counters)
    counters["bots_removed"] = counters.get("bots_removed", 0) + int(is_bot.sum())
    return replace(table, frame=frame, counters=counters)


def localize(table: PostTable, tz_rule: str | TzRule = "europe-central") -> PostTable:
    """Annotate every post with local wall-clock time of day and its 15-minute bin.

    Adds ``local_hour`` (float hours in [0, 24)), ``bin`` (0..95),
    ``local_date`` and ``dst_flag``; the latter marks instants within the hour
    after an offset change (their local reading uses the post-transition
    offset).  ``counters['dst_flagged']`` counts them.
    """
    rule = get_tz_rule(tz_rule)
    frame = table.frame.copy()
    utc_ns = frame["ts"].dt.tz_convert("UTC").dt.tz_localize(None).to_numpy().astype("datetime64[ns]").astype(np.int64)
    local = rule.to_local(utc_ns)
    day = local.astype("datetime64[D]")
    secs = (local - day).astype("timedelta64[s]").astype(np.int64)
    frame["local_hour"] = secs / 3600.0
    frame["bin"] = (secs // 900).astype(np.int64)
    frame["local_date"] = day
    frame["dst_flag"] = rule.transition_flags(utc_ns)
    counters = dict(table.counters)
    counters["dst_flagged"] = int(frame["dst_flag"].sum())
    return replace(table, frame=frame, tz_rule=rule.rule_id, counters=counters)


def attach_coordinates(table: PostTable, user_coords: Mapping[str, tuple[float, float]] | None = None,
                       centroid: tuple[float, float] = DEFAULT_CENTROID) -> PostTable:
    """Fill missing per-row coordinates from a per-user map, then the country centroid."""
    frame = table.frame.copy()
    user_coords = user_coords or {}
    for j, name in enumerate(("lat", "lon")):
        missing = frame[name].isna()
        if user_coords and missing.any():
            fill = frame.loc[missing, "user"].map(lambda u: user_coords.get(u, (np.nan, np.nan))[j])
            frame.loc[missing, name] = fill.astype(float)
        frame[name] = frame[name].fillna(centroid[j])
    return replace(table, frame=frame)


def write_posts(table: PostTable, path, delimiter: str = "\t") -> None:
    """Write the canonical post columns; timestamps as ISO-8601 UTC with ``Z``."""
    frame = table.frame
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(COLUMNS)
        ts = frame["ts"].dt.strftime("%Y-%m-%dT%H:%M:%SZ")
        for row in zip(ts, frame["user"], frame["kind"], frame["domain"], frame["category"],
                       frame["lat"], frame["lon"]):
            w.writerow([
                row[0], row[1], row[2], row[3] or "", row[4] or "",
                "" if np.isnan(row[5]) else f"{row[5]:.5f}",
                "" if np.isnan(row[6]) else f"{row[6]:.5f}",
            ])


def load_table(posts_path, category_map_path=None, bot_list_path=None, coords_path=None,
               span=DEFAULT_SPAN, tz_rule="europe-central", centroid=DEFAULT_CENTROID,
               reject_threshold=0.05) -> PostTable:
    """Convenience chain: parse, categorize, drop bots, localize, attach coordinates."""
    table = parse_posts(posts_path, span=span, reject_threshold=reject_threshold)
    cmap = read_category_map(category_map_path) if category_map_path else {}
    bots = read_bot_list(bot_list_path) if bot_list_path else set()
    table = map_and_filter(table, cmap, bots)
    table = localize(table, tz_rule)
    coords = read_user_coordinates(coords_path) if coords_path else None
    return attach_coordinates(table, coords, centroid)
