"""User grouping on the 1-D channel-gain feature (dB).

Pipeline: k-means over k = 1..k_max, elbow selection of k on the WCSS
curve, one-way ANOVA F-test of the chosen partition (diagnostic only),
and proportional subcarrier allocation across clusters.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .channel import ChannelState, linear_to_db


@dataclass
class ClusterPlan:
    """Result of grouping one snapshot of UEs."""

    k: int
    assignment: np.ndarray            # per-UE cluster index in [0, k)
    centroids: np.ndarray             # dB
    wcss_curve: list                  # WCSS for k = 1..k_max
    f_statistic: float                # nan when k = 1
    f_pvalue: float
    subcarriers_per_cluster: np.ndarray


def _farthest_point_init(x, k):
    # first center nearest the median, then repeated farthest-point picks;
    # ties break toward the lowest index (argmin/argmax convention)
    centers = [x[int(np.argmin(np.abs(x - np.median(x))))]]
    while len(centers) < k:
        d = np.min(np.abs(x[:, None] - np.array(centers)[None, :]), axis=1)
        centers.append(x[int(np.argmax(d))])
    return np.array(centers)


def _repair_empty(x, assign, centers, k):
    counts = np.bincount(assign, minlength=k)
    for c in np.where(counts == 0)[0]:
        d = (x - centers[assign]) ** 2
        d[counts[assign] <= 1] = -1.0  # never empty another cluster
        i = int(np.argmax(d))
        counts[assign[i]] -= 1
        assign[i] = c
        counts[c] = 1
    return assign


def _polish(x, assign, k, tol=1e-12):
    # Hartigan-style single-point moves until no move reduces WCSS
    n = x.size
    while True:
        counts = np.bincount(assign, minlength=k).astype(float)
        means = np.bincount(assign, weights=x, minlength=k) / counts
        own = counts[assign]
        removal = np.where(own > 1,
                           own / np.maximum(own - 1.0, 1.0)
                           * (x - means[assign]) ** 2,
                           -np.inf)  # singletons must not be emptied
        insertion = (counts[None, :] / (counts[None, :] + 1.0)
                     * (x[:, None] - means[None, :]) ** 2)
        delta = insertion - removal[:, None]
        delta[np.arange(n), assign] = np.inf
        i, c = np.unravel_index(int(np.argmin(delta)), delta.shape)
        if not delta[i, c] < -tol:
            return assign
        assign[i] = c


def kmeans(features, k, seed=0, max_iters=100):
    """Lloyd's algorithm with deterministic farthest-point seeding.

    Initialization is fully deterministic given the features (seed kept
    for interface stability), so identical inputs always reproduce the
    same partition.  Returns (assignment, centroids, wcss); the
    assignment is locally optimal under single-point reassignment.
    """
    x = np.asarray(features, dtype=float).ravel()
    n = x.size
    if n == 0:
        raise ValueError("empty feature vector")
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")

    centers = _farthest_point_init(x, k)
    assign = None
    for _ in range(max_iters):
        d2 = (x[:, None] - centers[None, :]) ** 2
        new_assign = np.argmin(d2, axis=1)
        new_assign = _repair_empty(x, new_assign, centers, k)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        counts = np.bincount(assign, minlength=k).astype(float)
        centers = np.bincount(assign, weights=x, minlength=k) / counts

    assign = _polish(x, assign, k)
    counts = np.bincount(assign, minlength=k).astype(float)
    centers = np.bincount(assign, weights=x, minlength=k) / counts
    wcss = float(np.sum((x - centers[assign]) ** 2))
    return assign, centers, wcss


def elbow_select_k(wcss_curve, k_max=None):
    """Cluster count at the maximum second difference of the WCSS curve.

    Returns 1 when fewer than 3 candidates exist or the curve is flat;
    ties break toward the smaller k.
    """
    curve = np.asarray(wcss_curve, dtype=float)
    if k_max is not None:
        curve = curve[:k_max]
    if curve.size == 0:
        raise ValueError("empty WCSS curve")
    if curve.size < 3:
        return 1
    if np.max(np.abs(np.diff(curve))) <= 1e-12 * curve[0]:
        return 1
    second = curve[:-2] - 2.0 * curve[1:-1] + curve[2:]  # k = 2..k_max-1
    return int(np.argmax(second)) + 2


def anova_f_test(features, assignment):
    """One-way ANOVA of the grouped features.

    Returns (F, p); F = +inf with p = 0 when the within-cluster sum of
    squares is zero.  The p-value is the upper F-tail evaluated through
    the regularized incomplete beta function.
    """
    x = np.asarray(features, dtype=float).ravel()
    a = np.asarray(assignment, dtype=int).ravel()
    k = int(a.max()) + 1 if a.size else 0
    if k < 2:
        raise ValueError("F-test needs at least 2 clusters")
    counts = np.bincount(a, minlength=k)
    if np.any(counts == 0):
        raise ValueError("F-test requires non-empty clusters")
    if x.size < k + 1:
        raise ValueError("F-test needs at least k+1 points")

    grand = x.mean()
    means = np.bincount(a, weights=x, minlength=k) / counts
    ssb = float(np.sum(counts * (means - grand) ** 2))
    ssw = float(np.sum((x - means[a]) ** 2))
    if ssw <= 0.0:
        return math.inf, 0.0
    d1, d2 = k - 1, x.size - k
    f = (ssb / d1) / (ssw / d2)
    p = float(betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f)))
    return float(f), p


def allocate_subcarriers(cluster_sizes, n_subcarriers):
    """Largest-remainder proportional split; every cluster gets >= 1.

    Remainder ties break toward the larger cluster, then the lower index.
    """
    sizes = np.asarray(cluster_sizes, dtype=int)
    m = sizes.size
    if m == 0 or np.any(sizes < 1):
        raise ValueError("cluster sizes must all be >= 1")
    if n_subcarriers < m:
        raise ValueError("more clusters than subcarriers")

    quota = n_subcarriers * sizes / sizes.sum()
    alloc = np.floor(quota).astype(int)
    frac = quota - alloc
    order = sorted(range(m), key=lambda i: (-frac[i], -sizes[i], i))
    for i in order[: n_subcarriers - int(alloc.sum())]:
        alloc[i] += 1
    while np.any(alloc == 0):
        alloc[int(np.argmax(alloc))] -= 1
        alloc[int(np.argmax(alloc == 0))] += 1
    return alloc


def group_users(channel: ChannelState, n_subcarriers, k_max=10, seed=0):
    """Full grouping pipeline on the effective-gain feature in dB."""
    features = linear_to_db(channel.effective_gain)
    n = features.size
    k_hi = min(k_max, n)

    runs = [kmeans(features, k, seed=seed) for k in range(1, k_hi + 1)]
    wcss_curve = [r[2] for r in runs]
    k = elbow_select_k(wcss_curve)
    assign, centroids, _ = runs[k - 1]

    if k >= 2:
        f_stat, f_p = anova_f_test(features, assign)
    else:
        f_stat, f_p = math.nan, math.nan  # undefined for a single cluster

    sizes = np.bincount(assign, minlength=k)
    subcarriers = allocate_subcarriers(sizes, n_subcarriers)
    return ClusterPlan(k, assign, centroids, wcss_curve, f_stat, f_p,
                       subcarriers)
