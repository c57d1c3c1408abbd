"""Chronotype clustering of users by their smoothed diurnal activity.

Users below a post-count threshold are set aside as *infrequent*; the rest
are clustered with agglomerative Ward linkage on their Gaussian-smoothed,
normalized 96-bin activity profiles.  The number of clusters is the mode of
six validity-index votes.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .activity import circular_convolve, gaussian_kernel, smoothed_profiles, user_count_matrix
from .ingest import N_BINS, PostTable

log = logging.getLogger(__name__)

INDEX_NAMES = ("elbow", "coi", "calinski_harabasz", "davies_bouldin", "dunn", "silhouette")


def split_infrequent(posts: PostTable, threshold: int = 240) -> tuple[frozenset, frozenset]:
    """Return ``(frequent, infrequent)`` user sets; infrequent means fewer than ``threshold`` posts."""
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    counts = posts.posts_per_user()
    frequent = frozenset(counts.index[counts >= threshold])
    infrequent = frozenset(counts.index[counts < threshold])
    if not frequent:
        log.warning("no user reaches %d posts; clustering skipped", threshold)
    return frequent, infrequent


def _sq_dists(x: np.ndarray) -> np.ndarray:
    g = x @ x.T
    norms = np.diag(g)
    d = norms[:, None] + norms[None, :] - 2.0 * g
    np.maximum(d, 0.0, out=d)
    np.fill_diagonal(d, 0.0)
    return d


def ward_dendrogram(profiles) -> np.ndarray:
    """Ward linkage via the Lance-Williams update on squared Euclidean distances.

    Returns an ``(n-1, 4)`` array in SciPy linkage layout: the two merged
    cluster ids (originals are ``0..n-1``, the i-th merge creates ``n+i``),
    the merge height and the new cluster size.  Heights are
    ``sqrt(2 |A||B| / (|A|+|B|)) * ||mean(A) - mean(B)||``.

    Ties are broken towards the pair whose smallest member index is lowest,
    then the lowest partner.
    """
    x = np.asarray([np.asarray(p, dtype=float) for p in profiles])
    n = len(x)
    if n < 2:
        raise ValueError("Ward clustering needs at least two profiles")
    d = _sq_dists(x)
    np.fill_diagonal(d, np.inf)
    size = np.ones(n)
    ident = np.arange(n)
    active = np.ones(n, dtype=bool)
    out = np.empty((n - 1, 4))
    for step in range(n - 1):
        flat = int(np.argmin(d))
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        dij = d[i, j]
        ni, nj = size[i], size[j]
        nk = size
        row = ((ni + nk) * d[i] + (nj + nk) * d[j] - nk * dij) / (ni + nj + nk)
        row[~active] = np.inf
        row[i] = np.inf
        row[j] = np.inf
        d[i, :] = row
        d[:, i] = row
        d[j, :] = np.inf
        d[:, j] = np.inf
        active[j] = False
        a, b = sorted((ident[i], ident[j]))
        out[step] = (a, b, np.sqrt(max(dij, 0.0)), ni + nj)
        size[i] = ni + nj
        ident[i] = n + step
    return out


def cut_tree(linkage: np.ndarray, k: int) -> np.ndarray:
    """Flat labels after undoing all but ``k`` groups; labels ordered by smallest member."""
    n = len(linkage) + 1
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    parent = list(range(2 * n - 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for step in range(n - k):
        a, b = int(linkage[step, 0]), int(linkage[step, 1])
        parent[find(a)] = n + step
        parent[find(b)] = n + step
    roots = [find(i) for i in range(n)]
    relabel: dict[int, int] = {}
    return np.array([relabel.setdefault(r, len(relabel)) for r in roots])


# -- validity indices -------------------------------------------------------

def _centroids(x, labels, k):
    return np.array([x[labels == c].mean(axis=0) for c in range(k)])


def within_ss(x, labels) -> float:
    k = labels.max() + 1
    cent = _centroids(x, labels, k)
    return float(((x - cent[labels]) ** 2).sum())


def calinski_harabasz(x, labels) -> float:
    n, k = len(x), labels.max() + 1
    w = within_ss(x, labels)
    b = float(((x - x.mean(axis=0)) ** 2).sum()) - w
    if w == 0:
        return np.inf
    return (b / (k - 1)) / (w / (n - k))


def davies_bouldin(x, labels) -> float:
    k = labels.max() + 1
    cent = _centroids(x, labels, k)
    scatter = np.array([np.linalg.norm(x[labels == c] - cent[c], axis=1).mean() for c in range(k)])
    sep = np.sqrt(_sq_dists(cent))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (scatter[:, None] + scatter[None, :]) / sep
    np.fill_diagonal(r, -np.inf)
    return float(np.mean(r.max(axis=1)))


def silhouette(dist, labels) -> float:
    n, k = len(labels), labels.max() + 1
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    sizes = onehot.sum(axis=0)
    sums = dist @ onehot
    own = sizes[labels]
    a = np.where(own > 1, sums[np.arange(n), labels] / np.maximum(own - 1, 1), 0.0)
    other = sums / sizes
    other[np.arange(n), labels] = np.inf
    b = other.min(axis=1)
    s = np.where(own > 1, (b - a) / np.maximum(np.maximum(a, b), 1e-300), 0.0)
    return float(s.mean())


def dunn(x, dist, labels) -> float:
    """Generalized Dunn index: mean inter-cluster distance over twice the mean distance to centroid."""
    k = labels.max() + 1
    cent = _centroids(x, labels, k)
    diam = max(2.0 * np.linalg.norm(x[labels == c] - cent[c], axis=1).mean() for c in range(k))
    sep = np.inf
    for c in range(k):
        for e in range(c + 1, k):
            sep = min(sep, dist[np.ix_(labels == c, labels == e)].mean())
    return float(sep / diam) if diam > 0 else np.inf


def cop_index(x, dist, labels) -> float:
    """Context-independent optimality (COP) index; smaller is better."""
    n, k = len(x), labels.max() + 1
    cent = _centroids(x, labels, k)
    total = 0.0
    for c in range(k):
        inside = labels == c
        intra = np.linalg.norm(x[inside] - cent[c], axis=1).mean()
        inter = dist[np.ix_(~inside, inside)].max(axis=1).min()
        total += inside.sum() * intra / inter
    return total / n


def _first_best(ks, scores, maximize=True):
    scores = np.asarray(scores, dtype=float)
    target = np.nanmax(scores) if maximize else np.nanmin(scores)
    return int(ks[int(np.flatnonzero(scores == target)[0])])


def knee(values_by_k: dict[int, float], ks) -> int:
    """k with the largest second difference ``f(k-1) - 2 f(k) + f(k+1)``."""
    second = [values_by_k[k - 1] - 2 * values_by_k[k] + values_by_k[k + 1] for k in ks]
    return _first_best(ks, second, maximize=True)


def vote(votes) -> int:
    """Mode of the votes; among equally common values the smallest wins."""
    counts = Counter(votes)
    top = max(counts.values())
    return min(v for v, c in counts.items() if c == top)


def choose_k(linkage: np.ndarray, profiles, k_range: tuple[int, int] = (2, 10),
             coi_rule: str = "min") -> tuple[int, pd.DataFrame, dict]:
    """Pick the number of clusters from six validity indices.

    Maximized: Calinski-Harabasz, generalized Dunn, silhouette.  Minimized:
    Davies-Bouldin.  The elbow vote is the knee (maximum second difference)
    of the within-cluster sum of squares.  COI votes for the COP minimum
    (``coi_rule="min"``) or the knee of the COP curve (``"knee"``).

    Returns
    -------
    k, index table (one row per k), votes per index
    """
    x = np.asarray([np.asarray(p, dtype=float) for p in profiles])
    n = len(x)
    k_min, k_max = k_range
    k_max = min(k_max, n - 1)
    if np.allclose(x, x[0], rtol=0, atol=1e-15) or k_max < k_min:
        log.warning("degenerate profiles (n=%d); using k=1", n)
        return 1, pd.DataFrame(columns=["k", *INDEX_NAMES]).set_index("k"), {}
    dist = np.sqrt(_sq_dists(x))
    ks = list(range(k_min, k_max + 1))
    wss, cop = {}, {}
    rows = []
    for k in range(max(1, k_min - 1), k_max + 2):
        labels = cut_tree(linkage, k)
        wss[k] = within_ss(x, labels)
        if k >= 2:
            cop[k] = cop_index(x, dist, labels)
        if k_min <= k <= k_max:
            rows.append(dict(
                k=k, elbow=wss[k], coi=cop[k],
                calinski_harabasz=calinski_harabasz(x, labels),
                davies_bouldin=davies_bouldin(x, labels),
                dunn=dunn(x, dist, labels),
                silhouette=silhouette(dist, labels),
            ))
    table = pd.DataFrame(rows).set_index("k")
    votes = {"elbow": knee(wss, ks)}
    if coi_rule == "knee":
        usable = [k for k in ks if k - 1 in cop and k + 1 in cop]
        votes["coi"] = knee(cop, usable) if usable else _first_best(ks, table["coi"], False)
    elif coi_rule == "min":
        votes["coi"] = _first_best(ks, table["coi"], maximize=False)
    else:
        raise ValueError(f"unknown coi_rule {coi_rule!r}")
    votes["calinski_harabasz"] = _first_best(ks, table["calinski_harabasz"], True)
    votes["davies_bouldin"] = _first_best(ks, table["davies_bouldin"], False)
    votes["dunn"] = _first_best(ks, table["dunn"], True)
    votes["silhouette"] = _first_best(ks, table["silhouette"], True)
    return vote(votes.values()), table, votes


def adjusted_rand_index(a, b) -> float:
    a = pd.factorize(pd.Series(list(a)))[0]
    b = pd.factorize(pd.Series(list(b)))[0]
    table = np.zeros((a.max() + 1, b.max() + 1))
    np.add.at(table, (a, b), 1)
    comb = lambda m: m * (m - 1) / 2.0
    index = comb(table).sum()
    ra, rb = comb(table.sum(axis=1)).sum(), comb(table.sum(axis=0)).sum()
    expected = ra * rb / comb(len(a))
    top = (ra + rb) / 2.0
    if top == expected:
        return 1.0
    return float((index - expected) / (top - expected))


def chronotype_name(curve) -> str:
    """Name a cluster after the clock time of its (Gaussian smoothed) activity maximum.

    Peaks in [05:00, 11:00) are morning, [11:00, 17:00) intermediate, the rest evening.
    """
    values = circular_convolve(np.asarray(curve, dtype=float), gaussian_kernel())
    hour = int(np.argmax(values)) / 4.0
    if 5 <= hour < 11:
        return "morning"
    if 11 <= hour < 17:
        return "intermediate"
    return "evening"


@dataclass
class ClusterModel:
    assignments: dict[str, int]
    linkage: np.ndarray | None
    k: int
    infrequent: frozenset
    frequent: list[str]
    index_scores: pd.DataFrame = field(default_factory=pd.DataFrame)
    votes: dict = field(default_factory=dict)
    names: dict[int, str] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def members(self, label: int) -> list[str]:
        return sorted(u for u, c in self.assignments.items() if c == label)

    def groups(self) -> dict[str, list[str]]:
        """Named member lists, infrequent users first."""
        out = {}
        if self.infrequent:
            out["infrequent"] = sorted(self.infrequent)
        for label in range(self.k):
            out[self.names.get(label, f"cluster{label}")] = self.members(label)
        return out


def _unique_names(names: list[str]) -> list[str]:
    seen: Counter = Counter()
    out = []
    for name in names:
        seen[name] += 1
        out.append(name if seen[name] == 1 else f"{name}-{seen[name]}")
    return out


def fit_clusters(posts: PostTable, threshold: int = 240, k_range=(2, 10), k: int | None = None,
                 window_minutes: float = 90.0, sigma_bins: float | None = None,
                 coi_rule: str = "min", workers: int | None = None) -> ClusterModel:
    """Split infrequent users, cluster the rest and name clusters by their peak time."""
    frequent, infrequent = split_infrequent(posts, threshold)
    warnings = []
    if len(frequent) < 2:
        if frequent:
            warnings.append("only one frequent user; single cluster")
            users = sorted(frequent)
            return ClusterModel({users[0]: 0}, None, 1, infrequent, users,
                                names={0: "cluster0"}, warnings=warnings)
        warnings.append("no frequent users; infrequent-only analysis")
        return ClusterModel({}, None, 0, infrequent, [], warnings=warnings)
    users, counts = user_count_matrix(posts, sorted(frequent), workers=workers)
    profiles = smoothed_profiles(counts, window_minutes, sigma_bins)
    linkage = ward_dendrogram(profiles)
    votes, table = {}, pd.DataFrame()
    if k is None:
        k, table, votes = choose_k(linkage, profiles, k_range, coi_rule)
        if k == 1:
            warnings.append("degenerate profiles; k=1")
    labels = cut_tree(linkage, k)
    assignments = dict(zip(users, labels.tolist()))
    pooled = [counts[labels == c].sum(axis=0) for c in range(k)]
    names = dict(enumerate(_unique_names([chronotype_name(p) for p in pooled])))
    return ClusterModel(assignments, linkage, k, infrequent, users, table, votes, names, warnings)
