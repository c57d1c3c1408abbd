import itertools

import diptest
import numpy as np
import pytest
from scipy import stats as sps

from diurnal._parallel import set_default_workers
from diurnal.stats import (DegenerateError, TestResult, chi_square, dip_statistic, dip_test,
                           mann_whitney_u, spearman, _dip_null)


def enumerate_mwu(x, y, alternative):
    """Permutation distribution of U_x by listing every rank assignment."""
    pooled = np.concatenate([x, y])
    ranks = sps.rankdata(pooled)
    m, n = len(x), len(y)
    u_obs = ranks[:m].sum() - m * (m + 1) / 2
    us = [ranks[list(c)].sum() - m * (m + 1) / 2 for c in itertools.combinations(range(m + n), m)]
    us = np.array(us)
    lower, upper = np.mean(us <= u_obs), np.mean(us >= u_obs)
    return {"less": lower, "greater": upper, "two-sided": min(1.0, 2 * min(lower, upper))}[alternative]


def test_mwu_textbook_example():
    r = mann_whitney_u([1, 2], [3, 4], "less")
    assert r.statistic == 0 and r.p_value == pytest.approx(1 / 6)
    assert r.method == "mann-whitney-exact"


@pytest.mark.parametrize("alternative", ["less", "greater", "two-sided"])
def test_mwu_exact_matches_enumeration(alternative, rng):
    for _ in range(15):
        m, n = rng.integers(1, 9, 2)
        x, y = rng.random(m), rng.random(n) + 0.2
        r = mann_whitney_u(x, y, alternative)
        assert r.p_value == pytest.approx(enumerate_mwu(x, y, alternative), abs=1e-12)
        ref = sps.mannwhitneyu(x, y, alternative=alternative, method="exact")
        assert r.statistic == ref.statistic
        assert r.p_value == pytest.approx(ref.pvalue, abs=1e-12)


@pytest.mark.parametrize("alternative", ["less", "greater", "two-sided"])
def test_mwu_normal_matches_scipy_with_ties(alternative, rng):
    x = rng.integers(0, 10, 40).astype(float)
    y = rng.integers(2, 12, 55).astype(float)
    r = mann_whitney_u(x, y, alternative)
    ref = sps.mannwhitneyu(x, y, alternative=alternative, method="asymptotic", use_continuity=True)
    assert r.method == "mann-whitney-normal"
    assert r.statistic == ref.statistic
    assert r.p_value == pytest.approx(ref.pvalue, rel=1e-9, abs=1e-15)
    assert r.extra["u_x"] + r.extra["u_y"] == 40 * 55


def test_mwu_all_tied_and_errors():
    r = mann_whitney_u([1.0] * 10, [1.0] * 10)
    assert r.p_value == 1.0
    with pytest.raises(ValueError):
        mann_whitney_u([], [1.0])
    with pytest.raises(ValueError):
        mann_whitney_u([1.0], [2.0], "bigger")


def test_spearman_is_pearson_on_ranks(rng):
    x = rng.integers(0, 20, 60).astype(float)
    y = x + rng.normal(0, 5, 60)
    r = spearman(x, y)
    rho = np.corrcoef(sps.rankdata(x), sps.rankdata(y))[0, 1]
    assert r.statistic == pytest.approx(rho, rel=1e-12)
    ref = sps.spearmanr(x, y)
    assert r.p_value == pytest.approx(ref.pvalue, rel=1e-9)
    assert r.df == 58


def test_spearman_edge_cases():
    assert spearman([1, 2, 3, 4], [2, 4, 6, 8]).p_value == 0.0
    assert spearman([1, 2, 3, 4], [4, 3, 2, 1]).statistic == -1.0
    with pytest.raises(DegenerateError):
        spearman([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        spearman([1, 2], [1, 2])


def test_chi_square_against_hand_formula_and_scipy():
    table = np.array([[10, 20, 30], [25, 15, 5]])
    exp = np.outer(table.sum(1), table.sum(0)) / table.sum()
    stat = sum((table[i, j] - exp[i, j]) ** 2 / exp[i, j] for i in range(2) for j in range(3))
    r = chi_square(table)
    assert r.statistic == pytest.approx(stat, rel=1e-12)
    assert r.df == 2
    assert r.p_value == pytest.approx(sps.chi2.sf(stat, 2), rel=1e-10)
    ref = sps.chi2_contingency(table, correction=False)
    assert r.p_value == pytest.approx(ref.pvalue, rel=1e-10)


def test_chi_square_matches_permutation_null(rng):
    # moderately sized table: asymptotic p should be close to a Monte-Carlo permutation p
    a = np.repeat([0, 1, 2], [40, 50, 60])
    b = (rng.random(150) < np.where(a == 2, 0.6, 0.45)).astype(int)
    table = np.array([[np.sum((a == i) & (b == j)) for j in range(2)] for i in range(3)])
    obs = chi_square(table).statistic
    hits = 0
    for _ in range(2000):
        bp = rng.permutation(b)
        t = np.array([[np.sum((a == i) & (bp == j)) for j in range(2)] for i in range(3)])
        hits += chi_square(t).statistic >= obs - 1e-12
    assert chi_square(table).p_value == pytest.approx(hits / 2000, abs=0.04)


def test_chi_square_degenerate():
    with pytest.raises(DegenerateError, match=r"\(1, "):
        chi_square([[1, 2], [0, 0]])
    with pytest.raises(ValueError):
        chi_square([1, 2, 3])


def test_dip_matches_diptest_package(rng):
    for _ in range(100):
        n = int(rng.integers(4, 150))
        x = rng.normal(size=n) if rng.random() < 0.5 else np.r_[rng.normal(0, 1, n // 2), rng.normal(5, 1, n - n // 2)]
        assert dip_statistic(x) == pytest.approx(diptest.dipstat(x), rel=1e-10, abs=1e-14)


def test_dip_known_values():
    assert dip_statistic([3.0] * 10) == 0.0
    # two far apart equal clumps: the dip approaches 1/4
    x = np.r_[np.linspace(0, 0.01, 50), np.linspace(10, 10.01, 50)]
    assert dip_statistic(x) == pytest.approx(diptest.dipstat(x))
    assert 0.2 < dip_statistic(x) <= 0.25


def test_dip_test_bimodal_vs_unimodal(rng):
    bi = np.r_[rng.normal(0, 1, 100), rng.normal(6, 1, 100)]
    uni = rng.normal(size=200)
    assert dip_test(bi, 500).p_value < 0.01
    assert dip_test(uni, 500).p_value > 0.05
    with pytest.raises(ValueError):
        dip_test([1, 2, 3])
    with pytest.raises(ValueError):
        dip_test(uni, 100)


def test_dip_null_is_thread_independent():
    _dip_null.cache_clear()
    set_default_workers(1)
    a = _dip_null(40, 750, 7).copy()
    _dip_null.cache_clear()
    set_default_workers(4)
    try:
        b = _dip_null(40, 750, 7)
    finally:
        set_default_workers(1)
    assert np.array_equal(a, b)


def test_result_clipping_and_dict():
    r = TestResult(1.0, 1.0000001, "x", (3,))
    assert r.p_value == 1.0
    assert r.to_dict()["n"] == [3]
    with pytest.raises(ValueError):
        TestResult(float("nan"), 0.5, "x", (1,))
