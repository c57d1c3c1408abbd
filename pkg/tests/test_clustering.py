import itertools

import numpy as np
import pytest
from scipy.cluster.hierarchy import fcluster, linkage as scipy_linkage
from sklearn import metrics as skm

from diurnal.clustering import (adjusted_rand_index, calinski_harabasz, choose_k, chronotype_name,
                                cut_tree, davies_bouldin, fit_clusters, knee, silhouette,
                                split_infrequent, vote, ward_dendrogram, _sq_dists)
from conftest import binned_rows, make_table


def naive_ward(x):
    """O(n^3) Ward: merge the pair with least increase in within-cluster SS."""
    clusters = {i: [i] for i in range(len(x))}
    heights, partitions = [], []
    nxt = len(x)
    while len(clusters) > 1:
        best = None
        for a, b in itertools.combinations(sorted(clusters), 2):
            A, B = x[clusters[a]], x[clusters[b]]
            na, nb = len(A), len(B)
            h = np.sqrt(2 * na * nb / (na + nb)) * np.linalg.norm(A.mean(0) - B.mean(0))
            if best is None or h < best[0]:
                best = (h, a, b)
        h, a, b = best
        clusters[nxt] = clusters.pop(a) + clusters.pop(b)
        nxt += 1
        heights.append(h)
        partitions.append(sorted(sorted(m) for m in clusters.values()))
    return np.array(heights), partitions


def _partition(labels):
    groups = {}
    for i, l in enumerate(labels):
        groups.setdefault(l, []).append(i)
    return sorted(groups.values())


def test_ward_matches_naive_oracle(rng):
    x = rng.random((30, 96))
    link = ward_dendrogram(x)
    heights, partitions = naive_ward(x)
    assert np.allclose(link[:, 2], heights, rtol=1e-12, atol=1e-12)
    for k in range(1, 30):
        assert _partition(cut_tree(link, k)) == partitions[30 - k - 1]


def test_ward_matches_scipy(rng):
    x = rng.random((120, 96))
    ours = ward_dendrogram(x)
    ref = scipy_linkage(x, method="ward")
    assert np.allclose(ours[:, 2], ref[:, 2], rtol=1e-10)
    assert np.array_equal(ours[:, 3], ref[:, 3])
    for k in (2, 3, 5, 9):
        assert adjusted_rand_index(cut_tree(ours, k), fcluster(ref, k, "maxclust")) == pytest.approx(1.0)


def test_cut_tree_label_order():
    x = np.array([[0.0], [10.0], [0.1], [10.1]])
    assert cut_tree(ward_dendrogram(x), 2).tolist() == [0, 1, 0, 1]
    assert cut_tree(ward_dendrogram(x), 4).tolist() == [0, 1, 2, 3]
    with pytest.raises(ValueError):
        cut_tree(ward_dendrogram(x), 5)


def test_indices_match_sklearn(rng):
    x = np.vstack([rng.normal(c, 0.3, (20, 5)) for c in (0, 2, 5)])
    labels = cut_tree(ward_dendrogram(x), 3)
    dist = np.sqrt(_sq_dists(x))
    assert calinski_harabasz(x, labels) == pytest.approx(skm.calinski_harabasz_score(x, labels), rel=1e-10)
    assert davies_bouldin(x, labels) == pytest.approx(skm.davies_bouldin_score(x, labels), rel=1e-10)
    assert silhouette(dist, labels) == pytest.approx(skm.silhouette_score(x, labels), rel=1e-10)
    k, table, votes = choose_k(ward_dendrogram(x), x, (2, 8))
    assert k == 3 and set(votes) == set(table.columns)


def test_ari_matches_sklearn(rng):
    for _ in range(20):
        a, b = rng.integers(0, 4, 50), rng.integers(0, 3, 50)
        assert adjusted_rand_index(a, b) == pytest.approx(skm.adjusted_rand_score(a, b), abs=1e-12)


def test_vote_and_knee_tie_breaks():
    assert vote([3, 3, 2, 2, 5, 4]) == 2
    assert vote([4, 4, 4, 2, 3, 3]) == 4
    # equal second differences at k=3 and k=4: first wins
    assert knee({2: 10, 3: 5, 4: 2, 5: 1, 6: 1}, [3, 4, 5]) == 3


def test_split_threshold_boundary():
    rows = binned_rows("a", [10] * 239) + binned_rows("b", [10] * 240)
    t = make_table(rows)
    freq, infreq = split_infrequent(t, 240)
    assert freq == {"b"} and infreq == {"a"}


@pytest.mark.parametrize("peak, name", [(30, "morning"), (43, "morning"), (44, "intermediate"),
                                        (67, "intermediate"), (68, "evening"), (2, "evening")])
def test_chronotype_name(peak, name):
    v = np.zeros(96)
    v[peak] = 1.0
    assert chronotype_name(v) == name


def test_fit_clusters_two_obvious_groups(rng):
    rows = []
    for u in range(12):
        centre = 36 if u < 6 else 84
        rows += binned_rows(f"u{u:02d}", (centre + rng.integers(-2, 3, 250)) % 96)
    rows += binned_rows("rare", [10] * 5)
    model = fit_clusters(make_table(rows), k_range=(2, 5))
    assert model.k == 2
    assert model.infrequent == {"rare"}
    groups = model.groups()
    assert groups["morning"] == [f"u{i:02d}" for i in range(6)]
    assert groups["evening"] == [f"u{i:02d}" for i in range(6, 12)]


def test_fit_clusters_degenerate():
    m = fit_clusters(make_table(binned_rows("a", [3] * 5)))
    assert m.k == 0 and m.warnings
