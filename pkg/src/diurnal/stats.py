"""Nonparametric tests: Hartigan's dip, Mann-Whitney U, Spearman's rho and chi-square."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import lru_cache
from math import comb, sqrt

import numpy as np
from scipy import special
from scipy.stats import rankdata

from ._parallel import chunked, ordered_map

ALTERNATIVES = ("two-sided", "less", "greater")
EXACT_MAX = 8
_DIP_CHUNK = 250


class DegenerateError(ValueError):
    """Raised when a statistic is undefined for the given data."""


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keep pytest from collecting this class

    statistic: float
    p_value: float
    method: str
    n: tuple
    alternative: str = "two-sided"
    df: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.statistic):
            raise ValueError("statistic must be finite")
        p = min(max(float(self.p_value), 0.0), 1.0)
        object.__setattr__(self, "p_value", p)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["n"] = list(self.n)
        extra = out.pop("extra")
        out.update(extra)
        return out


# -- dip test ----------------------------------------------------------------

def dip_statistic(sample) -> float:
    """Hartigan's dip: sup distance between the empirical CDF and the closest unimodal CDF.

    Greatest-convex-minorant / least-concave-majorant iteration on the sorted
    sample.  The smallest possible value for distinct data is ``1 / (2n)``.
    """
    x = np.sort(np.asarray(sample, float))
    n = len(x)
    if n < 2 or x[0] == x[-1]:
        return 0.0
    x = np.concatenate([[np.nan], x]).tolist()  # 1-based indexing
    mn = [0] * (n + 1)
    mj = [0] * (n + 1)
    mn[1] = 1
    for j in range(2, n + 1):
        mn[j] = j - 1
        while True:
            a = mn[j]
            b = mn[a]
            if a == 1 or (x[j] - x[a]) * (a - b) < (x[a] - x[b]) * (j - a):
                break
            mn[j] = b
    mj[n] = n
    for k in range(n - 1, 0, -1):
        mj[k] = k + 1
        while True:
            a = mj[k]
            b = mj[a]
            if a == n or (x[k] - x[a]) * (a - b) < (x[a] - x[b]) * (k - a):
                break
            mj[k] = b

    dip = 1.0
    low, high = 1, n
    while True:
        gcm = [0, high]
        while gcm[-1] > low:
            gcm.append(mn[gcm[-1]])
        l_gcm = len(gcm) - 1
        lcm = [0, low]
        while lcm[-1] < high:
            lcm.append(mj[lcm[-1]])
        l_lcm = len(lcm) - 1
        ig, ih = l_gcm, l_lcm
        ix, iv = l_gcm - 1, 2

        d = 0.0
        if l_gcm != 2 or l_lcm != 2:
            while True:
                gx, lv = gcm[ix], lcm[iv]
                if gx > lv:
                    g1 = gcm[ix + 1]
                    dx = (lv - g1 + 1) - (x[lv] - x[g1]) * (gx - g1) / (x[gx] - x[g1])
                    iv += 1
                    if dx >= d:
                        d, ig, ih = dx, ix + 1, iv - 1
                else:
                    l1 = lcm[iv - 1]
                    dx = (x[gx] - x[l1]) * (lv - l1) / (x[lv] - x[l1]) - (gx - l1 - 1)
                    ix -= 1
                    if dx >= d:
                        d, ig, ih = dx, ix + 1, iv
                ix = max(ix, 1)
                iv = min(iv, l_lcm)
                if gcm[ix] == lcm[iv]:
                    break
        else:
            d = 1.0
        if d < dip:
            break

        dip_l = 0.0
        for j in range(ig, l_gcm):
            best = 1.0
            a, b = gcm[j], gcm[j + 1]
            if a - b > 1 and x[a] != x[b]:
                c = (a - b) / (x[a] - x[b])
                for jj in range(b, a + 1):
                    best = max(best, (jj - b + 1) - (x[jj] - x[b]) * c)
            dip_l = max(dip_l, best)
        dip_u = 0.0
        for k in range(ih, l_lcm):
            best = 1.0
            a, b = lcm[k], lcm[k + 1]
            if b - a > 1 and x[b] != x[a]:
                c = (b - a) / (x[b] - x[a])
                for kk in range(a, b + 1):
                    best = max(best, (x[kk] - x[a]) * c - (kk - a - 1))
            dip_u = max(dip_u, best)
        dip = max(dip, dip_l, dip_u)

        if low == gcm[ig] and high == lcm[ih]:
            break
        low, high = gcm[ig], lcm[ih]
    return dip / (2 * n)


@lru_cache(maxsize=32)
def _dip_null(n: int, bootstrap_n: int, seed: int) -> np.ndarray:
    """Dip statistics of ``bootstrap_n`` uniform samples of size ``n``.

    Draws come in fixed chunks, each with its own spawned seed, so the
    result does not depend on how chunks are scheduled.
    """
    spans = chunked(bootstrap_n, _DIP_CHUNK)
    seeds = np.random.SeedSequence(seed).spawn(len(spans))

    def run(args):
        (lo, hi), ss = args
        rng = np.random.default_rng(ss)
        draws = rng.random((hi - lo, n))
        return np.array([dip_statistic(row) for row in draws])

    out = np.concatenate(list(ordered_map(run, list(zip(spans, seeds)))))
    out.setflags(write=False)
    return out


def dip_test(sample, bootstrap_n: int = 2000, seed: int = 0) -> TestResult:
    """Dip test of unimodality with a seeded uniform bootstrap p-value."""
    x = np.asarray(sample, float)
    if x.size < 4:
        raise ValueError("dip test needs at least 4 observations")
    if bootstrap_n < 500:
        raise ValueError("bootstrap_n must be >= 500")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample must be finite")
    dip = dip_statistic(x)
    if dip == 0.0:
        return TestResult(0.0, 1.0, "dip", (int(x.size),), extra={"bootstrap_n": bootstrap_n, "seed": seed})
    null = _dip_null(int(x.size), int(bootstrap_n), int(seed))
    p = float(np.count_nonzero(null >= dip)) / bootstrap_n
    return TestResult(dip, p, "dip", (int(x.size),), extra={"bootstrap_n": bootstrap_n, "seed": seed})


# -- Mann-Whitney U ----------------------------------------------------------

@lru_cache(maxsize=None)
def _u_counts(m: int, n: int) -> tuple:
    """Number of rank arrangements giving each U in 0..m*n (``m`` from the first sample)."""
    if m == 0 or n == 0:
        return (1,)
    a = _u_counts(m - 1, n)  # largest element belongs to the first sample: adds n
    b = _u_counts(m, n - 1)  # ... to the second sample: adds nothing
    out = [0] * (m * n + 1)
    for u, c in enumerate(a):
        out[u + n] += c
    for u, c in enumerate(b):
        out[u] += c
    return tuple(out)


def _exact_mwu_p(u: int, m: int, n: int, alternative: str) -> float:
    counts = _u_counts(m, n)
    total = comb(m + n, m)
    lower = sum(counts[: u + 1]) / total
    upper = sum(counts[u:]) / total
    if alternative == "less":
        return lower
    if alternative == "greater":
        return upper
    return min(1.0, 2.0 * min(lower, upper))


def mann_whitney_u(x, y, alternative: str = "two-sided") -> TestResult:
    """Mann-Whitney U test of ``x`` against ``y``.

    ``alternative="less"`` asks whether ``x`` tends to be smaller than ``y``.
    The statistic is ``U_x``, the number of pairs with ``x > y`` (ties count
    one half).  The p-value is exact when both samples have at most 8 values
    and there are no ties, otherwise it uses the normal approximation with
    tie and continuity corrections.
    """
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}")
    x = np.asarray(x, float).ravel()
    y = np.asarray(y, float).ravel()
    nx, ny = x.size, y.size
    if nx == 0 or ny == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([x, y])
    ranks = rankdata(pooled)
    u_x = float(ranks[:nx].sum() - nx * (nx + 1) / 2)
    u_y = nx * ny - u_x
    _, tie_counts = np.unique(pooled, return_counts=True)
    ties = bool((tie_counts > 1).any())
    extra = {"u_x": u_x, "u_y": u_y}
    if nx <= EXACT_MAX and ny <= EXACT_MAX and not ties:
        p = _exact_mwu_p(int(round(u_x)), nx, ny, alternative)
        return TestResult(u_x, p, "mann-whitney-exact", (nx, ny), alternative, extra=extra)
    n = nx + ny
    mu = nx * ny / 2.0
    tie_term = float(np.sum(tie_counts.astype(float) ** 3 - tie_counts))
    var = nx * ny / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return TestResult(u_x, 1.0, "mann-whitney-normal", (nx, ny), alternative, extra=extra)
    sigma = sqrt(var)
    if alternative == "less":
        p = special.ndtr((u_x - mu + 0.5) / sigma)
    elif alternative == "greater":
        p = special.ndtr(-(u_x - mu - 0.5) / sigma)
    else:
        z = max(abs(u_x - mu) - 0.5, 0.0) / sigma
        p = min(1.0, 2.0 * special.ndtr(-z))
    return TestResult(u_x, float(p), "mann-whitney-normal", (nx, ny), alternative, extra=extra)


# -- Spearman ----------------------------------------------------------------

def spearman(x, y) -> TestResult:
    """Spearman's rho (Pearson correlation of midranks), two-sided t-approximation p."""
    x = np.asarray(x, float).ravel()
    y = np.asarray(y, float).ravel()
    if x.size != y.size:
        raise ValueError("samples must have equal length")
    n = x.size
    if n < 3:
        raise ValueError("spearman needs at least 3 pairs")
    rx, ry = rankdata(x), rankdata(y)
    dx, dy = rx - rx.mean(), ry - ry.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DegenerateError("degenerate: zero variance in ranks")
    rho = float(dx @ dy) / sqrt(sxx * syy)
    rho = min(1.0, max(-1.0, rho))
    df = n - 2
    if abs(rho) == 1.0:
        p = 0.0
    else:
        t = rho * sqrt(df / ((1.0 - rho) * (1.0 + rho)))
        p = 2.0 * special.stdtr(df, -abs(t))
    return TestResult(rho, float(p), "spearman", (n,), df=df)


# -- chi-square --------------------------------------------------------------

def chi_square(table) -> TestResult:
    """Pearson chi-square test of independence for an r x c table of counts."""
    obs = np.asarray(table, float)
    if obs.ndim != 2 or min(obs.shape) < 2:
        raise ValueError("need a 2-D table with at least 2 rows and 2 columns")
    if (obs < 0).any() or not np.all(np.isfinite(obs)):
        raise ValueError("counts must be finite and non-negative")
    total = obs.sum()
    expected = np.outer(obs.sum(axis=1), obs.sum(axis=0)) / total if total > 0 else np.zeros_like(obs)
    zero = np.argwhere(expected <= 0)
    if zero.size:
        r, c = (int(v) for v in zero[0])
        raise DegenerateError(f"expected count is zero at cell ({r}, {c})")
    stat = float(np.sum((obs - expected) ** 2 / expected))
    df = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    p = float(special.chdtrc(df, stat))
    return TestResult(stat, p, "chi-square", tuple(int(v) for v in obs.shape), df=df)
