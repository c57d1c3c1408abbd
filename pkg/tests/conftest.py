import numpy as np
import pytest

from diurnal.ingest import PostTable, localize


def make_table(rows, tz_rule="UTC", span=None):
    """Build a localized table from (ts, user, category) or full dict rows."""
    recs = []
    for r in rows:
        if isinstance(r, dict):
            recs.append({"kind": "tweet", "domain": None, "lat": None, "lon": None, **r})
        else:
            ts, user, cat = r
            recs.append(dict(ts=ts, user=user, kind="tweet", domain=None, category=cat, lat=None, lon=None))
    kw = {} if span is None else {"span": span}
    return localize(PostTable.from_records(recs, **kw), tz_rule)


def binned_rows(user, bins, category="MainstreamMedia", day="2020-02-03"):
    """Posts at the start of each given bin (UTC clock, so the bin is exact)."""
    out = []
    for i, b in enumerate(bins):
        h, q = divmod(int(b), 4)
        out.append((f"{day}T{h:02d}:{q * 15:02d}:{i % 60:02d}Z", user, category))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, passed: bool, detail: str = "") -> bool:
    status = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {title}" + (f" ({detail})" if detail else ""))
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
