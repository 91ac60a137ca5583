"""Partition cruise points among UAVs.

Three partitioners share the :class:`Assignment` output:

* :class:`BalancedClusterer` / :func:`ebtas_cluster` - variance-driven
  k-means variant over (position, offload volume, reference rate) with a
  per-cluster size cap, scored by the balance objective :func:`p1_objective`;
* :class:`CapacityKMeans` / :func:`baseline_shortest_distance` - position-only
  k-means with the same overflow repair;
* :class:`RegionPartitioner` / :func:`baseline_region` - geographic halves,
  quadrants or angular sectors.

The estimators follow the scikit-learn API and take a feature matrix with
columns ``x, y, q, r``; the functional wrappers build it from a scenario.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted

from .channel import best_rate
from .scenario import CruisePoint, Point2, Scenario, Weights

__all__ = [
    "FeatureVector",
    "NeighborSet",
    "Assignment",
    "CapacityError",
    "neighbor_sets",
    "neighbor_table",
    "feature_vectors",
    "feature_matrix",
    "p1_objective",
    "p1_terms",
    "BalancedClusterer",
    "CapacityKMeans",
    "RegionPartitioner",
    "ebtas_cluster",
    "baseline_region",
    "baseline_shortest_distance",
    "assign",
]


class CapacityError(ValueError):
    """The cluster size cap cannot hold every point."""


@dataclass(frozen=True)
class FeatureVector:
    d: Point2
    q: float
    r: float


@dataclass(frozen=True)
class NeighborSet:
    ids: tuple[int, ...]
    avg_dist: float


@dataclass(frozen=True)
class Assignment:
    """Point-to-UAV labels (1-based UAV index per point, in point order)."""

    labels: tuple[int, ...]
    n_uavs: int
    c_max: int | None = None

    def __post_init__(self):
        labels = tuple(int(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        if any(not 1 <= x <= self.n_uavs for x in labels):
            raise ValueError(f"labels must lie in 1..{self.n_uavs}")
        if self.c_max is not None and any(c > self.c_max for c in self.cluster_sizes):
            raise CapacityError(f"cluster sizes {self.cluster_sizes} exceed c_max={self.c_max}")

    @property
    def cluster_sizes(self) -> tuple[int, ...]:
        return tuple(int(c) for c in np.bincount(np.asarray(self.labels, dtype=int) - 1, minlength=self.n_uavs))

    def members(self, uav: int) -> list[int]:
        """0-based point indices assigned to ``uav`` (1-based)."""
        return [i for i, lab in enumerate(self.labels) if lab == uav]

    @classmethod
    def from_zero_based(cls, labels, n_uavs: int, c_max: int | None = None) -> "Assignment":
        return cls(tuple(int(x) + 1 for x in labels), n_uavs, c_max)


# ------------------------------------------------------------ neighbor sets

_DIRS = ((0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0))  # X+, X-, Y+, Y-


def neighbor_table(xy, d: float) -> np.ndarray:
    """Directional candidates: (K, 4, K) indices, nearest first, padded with -1.

    Row ``[i, k]`` lists every point lying strictly on the ``k``-th side of
    point ``i`` (X+, X-, Y+, Y-) inside the ``2d x 2d`` box around it, sorted
    by Euclidean distance then index.
    """
    if not d > 0:
        raise ValueError("d must be > 0")
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    K = xy.shape[0]
    diff = xy[None, :, :] - xy[:, None, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    inbox = (np.abs(diff[..., 0]) <= d) & (np.abs(diff[..., 1]) <= d)
    table = np.full((K, 4, K), -1, dtype=int)
    idx = np.arange(K)
    for k, (axis, sign) in enumerate(_DIRS):
        ok = inbox & (sign * diff[..., axis] > 0)
        for i in range(K):
            cand = idx[ok[i]]
            order = np.lexsort((cand, dist[i, cand]))
            table[i, k, : cand.size] = cand[order]
    return table


def neighbor_sets(points, d: float) -> list[NeighborSet]:
    """Nearest point along each axis direction within the ``2d x 2d`` box.

    ``points`` is a sequence of :class:`CruisePoint` or an array of
    coordinates. A point reached from two directions is counted once.
    """
    xy, ids = _points_xy(points)
    table = neighbor_table(xy, d)
    out = []
    for i in range(xy.shape[0]):
        first = [int(table[i, k, 0]) for k in range(4) if table[i, k, 0] >= 0]
        uniq = sorted(set(first))
        avg = float(np.mean([np.hypot(*(xy[j] - xy[i])) for j in uniq])) if uniq else 0.0
        out.append(NeighborSet(tuple(ids[j] for j in uniq), avg))
    return out


def _points_xy(points):
    if len(points) and isinstance(points[0], CruisePoint):
        return np.array([[p.position.x, p.position.y] for p in points], float), [p.id for p in points]
    xy = np.asarray(points, dtype=float).reshape(-1, 2)
    return xy, list(range(xy.shape[0]))


# ------------------------------------------------------------------ features


def feature_vectors(scenario: Scenario) -> list[FeatureVector]:
    """Position, offload volume and best-station rate of each cruise point."""
    r, _ = best_rate(scenario.point_xy(), scenario)
    return [FeatureVector(p.position, p.data_bits, float(ri)) for p, ri in zip(scenario.cruise_points, r)]


def feature_matrix(features) -> np.ndarray:
    """Stack features (or a scenario) into a (K, 4) array ``x, y, q, r``."""
    if isinstance(features, Scenario):
        features = feature_vectors(features)
    return np.array([[f.d.x, f.d.y, f.q, f.r] for f in features], dtype=float).reshape(-1, 4)


# --------------------------------------------------------------- objective


NEIGHBOR_MODE = "cluster_box"


class _Objective:
    """Vectorised balance objective for repeated evaluation on one point set."""

    def __init__(self, X: np.ndarray, neighbor_d: float, weights: Weights, avg_dist=None, neighbor_mode: str = NEIGHBOR_MODE):
        X = np.asarray(X, dtype=float)
        self.xy = X[:, :2]
        K = X.shape[0]
        self.table = neighbor_table(self.xy, neighbor_d)
        if neighbor_mode == "restrict":
            # only the global directional neighbours count, when they share the cluster
            self.cluster_table = self.table[:, :, :1].copy()
        elif neighbor_mode == "cluster_box":
            self.cluster_table = self.table
        elif neighbor_mode == "cluster":
            self.cluster_table = neighbor_table(self.xy, np.inf)
        else:
            raise ValueError(f"unknown neighbor_mode {neighbor_mode!r}")
        diff = self.xy[:, None, :] - self.xy[None, :, :]
        self.dist = np.hypot(diff[..., 0], diff[..., 1])
        if avg_dist is None:
            first = self.table[:, :, 0]
            avg_dist = np.zeros(K)
            for i in range(K):
                uniq = np.unique(first[i][first[i] >= 0])
                avg_dist[i] = self.dist[i, uniq].mean() if uniq.size else 0.0
        self.D = np.asarray(avg_dist, dtype=float)
        self.Q = X[:, 2]
        self.R = X[:, 3]
        self.w = weights
        self.norm_d = _unit_mean(self.D)
        self.norm_q = _unit_mean(self.Q)
        self.norm_r = _unit_mean(self.R)
        self._pad = np.where(self.cluster_table >= 0, self.cluster_table, 0)

    def neighbor_cost(self, labels: np.ndarray) -> float:
        """Sum over points of distances to their nearest same-cluster neighbours."""
        K = labels.shape[0]
        same = (self.cluster_table >= 0) & (labels[self._pad] == labels[:, None, None])
        has = same.any(axis=2)
        first = np.argmax(same, axis=2)
        nb = np.where(has, np.take_along_axis(self._pad, first[..., None], axis=2)[..., 0], -1)
        total = 0.0
        for i in range(K):
            uniq = np.unique(nb[i][nb[i] >= 0])
            total += self.dist[i, uniq].sum()
        return total / self.norm_d

    def imbalance(self, labels: np.ndarray, n: int) -> float:
        """Weighted pairwise differences of cluster sums of D, Q and R."""
        sums = np.zeros((n, 3))
        for j in range(n):
            m = labels == j
            sums[j] = self.D[m].sum() / self.norm_d, self.Q[m].sum() / self.norm_q, self.R[m].sum() / self.norm_r
        coef = np.array([self.w.psi, self.w.v, self.w.w])
        total = 0.0
        for a, b in itertools.combinations(range(n), 2):
            total += float(coef @ np.abs(sums[a] - sums[b]))
        return total

    def __call__(self, labels: np.ndarray, n: int) -> float:
        return self.w.u * self.neighbor_cost(labels) + self.imbalance(labels, n)


def _unit_mean(v: np.ndarray) -> float:
    m = float(np.mean(v)) if v.size else 0.0
    return m if m > 0 else 1.0


def p1_terms(assignment: Assignment, features, neighbor_sets_, weights: Weights) -> dict[str, float]:
    """Components of :func:`p1_objective` (after unit-mean normalisation)."""
    X = feature_matrix(features)
    avg = np.array([ns.avg_dist for ns in neighbor_sets_], dtype=float)
    obj = _Objective(X, weights.neighbor_d, weights, avg_dist=avg)
    lab = np.asarray(assignment.labels, dtype=int) - 1
    n = assignment.n_uavs
    sums = np.zeros((n, 3))
    for j in range(n):
        m = lab == j
        sums[j] = obj.D[m].sum(), obj.Q[m].sum(), obj.R[m].sum()
    dd = dq = dr = 0.0
    for a, b in itertools.combinations(range(n), 2):
        dd += abs(sums[a, 0] - sums[b, 0])
        dq += abs(sums[a, 1] - sums[b, 1])
        dr += abs(sums[a, 2] - sums[b, 2])
    return {
        "neighbor": obj.neighbor_cost(lab),
        "imbalance": obj.imbalance(lab, n),
        "delta_d": dd,
        "delta_q": dq,
        "delta_r": dr,
    }


def p1_objective(assignment: Assignment, features, neighbor_sets_, weights: Weights) -> float:
    """Balance objective of an assignment.

    ``u`` times the total distance from every point to its nearest
    same-cluster neighbours (searched per axis direction inside the
    ``neighbor_d`` box), plus ``psi``, ``v`` and ``w`` times the absolute
    between-cluster differences of summed neighbour distance, offload volume
    and reference rate, summed over cluster pairs. Each quantity is scaled by
    its mean over all points first.
    """
    if len(assignment.labels) != len(features):
        raise ValueError("assignment and features differ in length")
    t = p1_terms(assignment, features, neighbor_sets_, weights)
    return weights.u * t["neighbor"] + t["imbalance"]


# --------------------------------------------------------------- estimators


def _check_X(X) -> np.ndarray:
    X = check_array(X, dtype=float, ensure_min_samples=1)
    if X.shape[1] == 2:
        X = np.hstack([X, np.zeros((X.shape[0], 2))])
    if X.shape[1] != 4:
        raise ValueError(f"expected 2 or 4 feature columns (x, y[, q, r]), got {X.shape[1]}")
    if np.any(X[:, 2:] < 0):
        raise ValueError("offload volume and rate features must be >= 0")
    return X


def _inertia_scale(X: np.ndarray) -> np.ndarray:
    """Per-column scale making position, q and r variances comparable."""
    pos = X[:, :2] - X[:, :2].mean(axis=0)
    sp = math.sqrt(float(np.mean(np.sum(pos**2, axis=1))))
    sq, sr = float(np.std(X[:, 2])), float(np.std(X[:, 3]))
    return np.array([sp or 1.0, sp or 1.0, sq or 1.0, sr or 1.0])


def _farthest_point_seeds(Z: np.ndarray, n: int, rng) -> np.ndarray:
    """k-means++ style seeding on the rows of ``Z``."""
    K = Z.shape[0]
    first = int(rng.randint(K))
    seeds = [first]
    d2 = np.sum((Z - Z[first]) ** 2, axis=1)
    while len(seeds) < n:
        if d2.sum() <= 0:
            rest = [i for i in range(K) if i not in seeds]
            seeds.append(int(rest[rng.randint(len(rest))]))
        else:
            seeds.append(int(rng.choice(K, p=d2 / d2.sum())))
        d2 = np.minimum(d2, np.sum((Z - Z[seeds[-1]]) ** 2, axis=1))
    return np.array(seeds)


def _repair_overflow(labels: np.ndarray, Z: np.ndarray, centers: np.ndarray, c_max: int, metric_w: np.ndarray) -> np.ndarray:
    """Evict the farthest members of oversize clusters to the nearest cluster with room."""
    labels = labels.copy()
    n = centers.shape[0]
    d2 = ((Z[:, None, :] - centers[None, :, :]) ** 2 * metric_w).sum(axis=2)
    for j in range(n):
        members = np.flatnonzero(labels == j)
        excess = members.size - c_max
        if excess <= 0:
            continue
        far = members[np.lexsort((members, -d2[members, j]))][:excess]
        for i in far:
            sizes = np.bincount(labels, minlength=n)
            open_ = np.flatnonzero(sizes < c_max)
            labels[i] = open_[np.argmin(d2[i, open_])]
    return labels


def _centers(Z: np.ndarray, labels: np.ndarray, n: int, old: np.ndarray) -> np.ndarray:
    out = old.copy()
    for j in range(n):
        m = labels == j
        if m.any():
            out[j] = Z[m].mean(axis=0)
    return out


class _CapacityMixin:
    def _check_capacity(self, K):
        n = self.n_clusters
        if n < 1:
            raise ValueError("n_clusters must be >= 1")
        if self.c_max is not None and n * self.c_max < K:
            raise CapacityError(f"{n} clusters x c_max={self.c_max} cannot hold {K} points")


class BalancedClusterer(_CapacityMixin, ClusterMixin, BaseEstimator):
    """Balanced, size-capped clustering of cruise points.

    Each pass assigns every point to the cluster whose combined variance
    (position, plus ``m`` times offload volume, plus ``n`` times reference
    rate, each standardised) grows least when the point joins it, updates the
    centroids, and moves the farthest members of oversize clusters to the
    nearest cluster with room. Passes stop when the average pairwise
    imbalance falls below ``p_threshold`` times its first value, labels stop
    changing, or ``max_iter`` is reached; the pass with the lowest balance
    objective is kept. Optionally the result is polished by single-point
    moves and pairwise swaps that lower the objective.

    Parameters
    ----------
    n_clusters : int
        Number of UAVs.
    c_max : int or None
        Maximum points per cluster.
    m, n : float
        Weights of the offload-volume and rate variance terms.
    u, psi, v, w : float
        Weights of the balance objective (see :func:`p1_objective`).
    neighbor_d : float
        Half-width of the neighbour search box, metres.
    max_iter : int
    p_threshold : float
        Stop when the imbalance drops below this fraction of its first value.
    variance_mode : {"increase", "after"}
        Score a candidate cluster by the variance increase the point causes
        (equivalently, the average variance of all clusters afterwards) or by
        the candidate's own variance after adding it.
    refine : bool
        Run the move/swap polish on the kept pass.
    init : {"k-means++", "random"}
    random_state : int, RandomState or None

    Attributes
    ----------
    labels_ : ndarray of shape (K,)
        0-based cluster index per point.
    cluster_centers_ : ndarray of shape (n_clusters, 4)
        Centroids in feature units (x, y, q, r).
    objective_ : float
    n_iter_ : int
    history_ : list of float
        Objective of every pass.
    """

    def __init__(
        self,
        n_clusters=2,
        c_max=None,
        m=1.0,
        n=1.0,
        u=1.0,
        psi=1.0,
        v=1.0,
        w=1.0,
        neighbor_d=250.0,
        max_iter=100,
        p_threshold=0.05,
        variance_mode="after",
        refine=True,
        init="k-means++",
        random_state=None,
    ):
        self.n_clusters = n_clusters
        self.c_max = c_max
        self.m = m
        self.n = n
        self.u = u
        self.psi = psi
        self.v = v
        self.w = w
        self.neighbor_d = neighbor_d
        self.max_iter = max_iter
        self.p_threshold = p_threshold
        self.variance_mode = variance_mode
        self.refine = refine
        self.init = init
        self.random_state = random_state

    def _weights(self) -> Weights:
        return Weights(u=self.u, psi=self.psi, v=self.v, w=self.w, m=self.m, n=self.n, neighbor_d=self.neighbor_d)

    def _scores(self, Z, labels, first_pass):
        """Cost of putting each point in each cluster, shape (K, n)."""
        K, n = Z.shape[0], self.n_clusters
        wts = np.array([1.0, 1.0, self.m, self.n])
        out = np.zeros((K, n))
        for j in range(n):
            mem = labels == j
            cnt = mem.sum()
            s1 = Z[mem].sum(axis=0)
            s2 = (Z[mem] ** 2).sum(axis=0)
            # leave-one-out moments so a point is scored against the rest of its cluster
            own = mem & (not first_pass)
            c = cnt - own.astype(float)
            m1 = s1[None, :] - np.where(own[:, None], Z, 0.0)
            m2 = s2[None, :] - np.where(own[:, None], Z**2, 0.0)
            with np.errstate(invalid="ignore", divide="ignore"):
                mean = np.where(c[:, None] > 0, m1 / np.maximum(c, 1)[:, None], 0.0)
                var_before = np.where(c[:, None] > 0, m2 / np.maximum(c, 1)[:, None] - mean**2, 0.0)
            var_after = (m2 + Z**2) / (c + 1)[:, None] - ((m1 + Z) / (c + 1)[:, None]) ** 2
            var_before = np.maximum(var_before, 0.0)
            var_after = np.maximum(var_after, 0.0)
            comp_after = var_after[:, :2].sum(axis=1) * wts[0] + var_after[:, 2] * wts[2] + var_after[:, 3] * wts[3]
            comp_before = var_before[:, :2].sum(axis=1) * wts[0] + var_before[:, 2] * wts[2] + var_before[:, 3] * wts[3]
            out[:, j] = comp_after - comp_before if self.variance_mode == "increase" else comp_after
        return out

    def fit(self, X, y=None):
        X = _check_X(X)
        K = X.shape[0]
        self._check_capacity(K)
        if self.variance_mode not in ("increase", "after"):
            raise ValueError(f"unknown variance_mode {self.variance_mode!r}")
        rng = check_random_state(self.random_state)
        n = min(self.n_clusters, K)
        Z = X / _inertia_scale(X)
        metric_w = np.array([1.0, 1.0, self.m, self.n])
        objective = _Objective(X, self.neighbor_d, self._weights())
        c_max = self.c_max if self.c_max is not None else K

        if self.init == "random":
            seeds = rng.choice(K, size=n, replace=False)
        else:
            seeds = _farthest_point_seeds(Z[:, :2], n, rng)
        labels = np.full(K, -1)
        labels[seeds] = np.arange(n)
        centers = Z[seeds].copy()
        # first pass scores every point against the singleton seed clusters
        seed_labels = np.full(K, -1)
        seed_labels[seeds] = np.arange(n)

        best = (math.inf, None, None)
        history = []
        p_first = None
        it = 0
        prev = None
        while True:
            scores = self._scores(Z, seed_labels if it == 0 else labels, first_pass=(it == 0))
            if n < self.n_clusters:
                scores = np.hstack([scores, np.full((K, self.n_clusters - n), np.inf)])
            new = np.argmin(scores, axis=1)
            # keep every cluster populated: an emptied cluster takes the point that fits it best
            for j in range(n):
                if not np.any(new == j):
                    sizes = np.bincount(new, minlength=n)
                    donors = np.flatnonzero(sizes[new] > 1)
                    pick = donors[np.argmin(scores[donors, j] - scores[donors, new[donors]])]
                    new[pick] = j
            centers = _centers(Z, new, n, centers)
            new = _repair_overflow(new, Z, centers, c_max, metric_w)
            centers = _centers(Z, new, n, centers)
            val = objective(new, n)
            history.append(val)
            if val < best[0]:
                best = (val, new.copy(), centers.copy())
            p = objective.imbalance(new, n) / max(math.comb(n, 2), 1)
            if p_first is None:
                p_first = p
            converged = prev is not None and np.array_equal(prev, new)
            prev = new
            labels = new
            if p < self.p_threshold * p_first or it >= self.max_iter or converged:
                break
            it += 1

        val, labels, centers = best
        if self.refine:
            labels, val = _local_search(labels, objective, n, c_max)
            centers = _centers(Z, labels, n, centers)
        self.labels_ = labels
        self.cluster_centers_ = centers * _inertia_scale(X)
        self.objective_ = float(val)
        self.n_iter_ = it + 1
        self.history_ = history
        self._scale = _inertia_scale(X)
        return self

    def predict(self, X):
        """Nearest centroid under the fitted feature weighting."""
        check_is_fitted(self, "labels_")
        Z = _check_X(X) / self._scale
        C = self.cluster_centers_ / self._scale
        wts = np.array([1.0, 1.0, self.m, self.n])
        return np.argmin((((Z[:, None, :] - C[None, :, :]) ** 2) * wts).sum(axis=2), axis=1)


def _local_search(labels: np.ndarray, objective: _Objective, n: int, c_max: int, max_rounds: int = 200):
    """Best-improvement single moves and pairwise swaps under the size cap."""
    labels = labels.copy()
    cur = objective(labels, n)
    K = labels.size
    for _ in range(max_rounds):
        best_val, best_lab = cur, None
        sizes = np.bincount(labels, minlength=n)
        for i in range(K):
            for j in range(n):
                if j == labels[i] or sizes[j] >= c_max or sizes[labels[i]] <= 1:
                    continue
                trial = labels.copy()
                trial[i] = j
                v = objective(trial, n)
                if v < best_val - 1e-12:
                    best_val, best_lab = v, trial
        for i in range(K):
            for k in range(i + 1, K):
                if labels[i] == labels[k]:
                    continue
                trial = labels.copy()
                trial[i], trial[k] = labels[k], labels[i]
                v = objective(trial, n)
                if v < best_val - 1e-12:
                    best_val, best_lab = v, trial
        if best_lab is None:
            break
        labels, cur = best_lab, best_val
    return labels, cur


class CapacityKMeans(_CapacityMixin, ClusterMixin, BaseEstimator):
    """Position-only k-means with the size-cap overflow repair.

    Uses only the first two feature columns. ``objective_`` is the total
    within-cluster neighbour distance, a proxy for straight-line tour length.
    """

    def __init__(self, n_clusters=2, c_max=None, neighbor_d=250.0, max_iter=100, init="k-means++", random_state=None):
        self.n_clusters = n_clusters
        self.c_max = c_max
        self.neighbor_d = neighbor_d
        self.max_iter = max_iter
        self.init = init
        self.random_state = random_state

    def fit(self, X, y=None):
        X = _check_X(X)
        K = X.shape[0]
        self._check_capacity(K)
        rng = check_random_state(self.random_state)
        n = min(self.n_clusters, K)
        P = X[:, :2]
        c_max = self.c_max if self.c_max is not None else K
        scale = _inertia_scale(X)[:2]
        seeds = rng.choice(K, size=n, replace=False) if self.init == "random" else _farthest_point_seeds(P / scale, n, rng)
        centers = P[seeds].copy()
        labels = None
        it = 0
        for it in range(1, self.max_iter + 1):
            d2 = ((P[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new = np.argmin(d2, axis=1)
            centers = _centers(P, new, n, centers)
            new = _repair_overflow(new, P, centers, c_max, np.ones(2))
            centers = _centers(P, new, n, centers)
            if labels is not None and np.array_equal(labels, new):
                labels = new
                break
            labels = new
        self.labels_ = labels
        self.cluster_centers_ = centers
        self.n_iter_ = it
        obj = _Objective(X, self.neighbor_d, Weights(neighbor_d=self.neighbor_d))
        self.objective_ = float(obj.neighbor_cost(labels) * obj.norm_d)
        return self

    def predict(self, X):
        check_is_fitted(self, "labels_")
        P = _check_X(X)[:, :2]
        return np.argmin(((P[:, None, :] - self.cluster_centers_[None, :, :]) ** 2).sum(axis=2), axis=1)


class RegionPartitioner(ClusterMixin, BaseEstimator):
    """Geographic split ignoring load.

    Two clusters: lower and upper half by the median ``y`` (label 0 is the
    upper half). Four: quadrants about the bounding-box centre. Otherwise:
    equal-angle sectors about that centre.
    """

    def __init__(self, n_clusters=2):
        self.n_clusters = n_clusters

    def fit(self, X, y=None):
        X = _check_X(X)
        self.labels_ = self._partition(X)
        self.center_ = (X[:, :2].min(axis=0) + X[:, :2].max(axis=0)) / 2.0
        return self

    def _partition(self, X):
        n = self.n_clusters
        P = X[:, :2]
        K = P.shape[0]
        if n == 1:
            return np.zeros(K, dtype=int)
        c = (P.min(axis=0) + P.max(axis=0)) / 2.0
        if n == 2:
            order = np.lexsort((np.arange(K), P[:, 1]))
            labels = np.ones(K, dtype=int)
            labels[order[K - K // 2 :]] = 0
            return labels
        if n == 4:
            right = P[:, 0] >= c[0]
            lower = P[:, 1] < c[1]
            return (2 * lower + right).astype(int)
        ang = np.mod(np.arctan2(P[:, 1] - c[1], P[:, 0] - c[0]), 2 * np.pi)
        return np.minimum((ang // (2 * np.pi / n)).astype(int), n - 1)

    def predict(self, X):
        check_is_fitted(self, "labels_")
        return self._partition(_check_X(X))


# ------------------------------------------------------- scenario wrappers


def ebtas_cluster(scenario: Scenario, seed: int = 0, max_iter: int = 100, **params) -> Assignment:
    """Balanced clustering of a scenario's cruise points (see :class:`BalancedClusterer`)."""
    if scenario.n_uavs * scenario.c_max < scenario.k:
        raise CapacityError("n_uavs * c_max < K")
    w = scenario.weights
    est = BalancedClusterer(
        n_clusters=scenario.n_uavs,
        c_max=scenario.c_max,
        m=w.m,
        n=w.n,
        u=w.u,
        psi=w.psi,
        v=w.v,
        w=w.w,
        neighbor_d=w.neighbor_d,
        max_iter=max_iter,
        random_state=seed,
        **params,
    )
    labels = est.fit_predict(feature_matrix(scenario))
    return Assignment.from_zero_based(labels, scenario.n_uavs, scenario.c_max)


def baseline_region(scenario: Scenario) -> Assignment:
    labels = RegionPartitioner(scenario.n_uavs).fit_predict(feature_matrix(scenario))
    return Assignment.from_zero_based(labels, scenario.n_uavs, None)


def baseline_shortest_distance(scenario: Scenario, seed: int = 0, max_iter: int = 100) -> Assignment:
    est = CapacityKMeans(
        n_clusters=scenario.n_uavs,
        c_max=scenario.c_max,
        neighbor_d=scenario.weights.neighbor_d,
        max_iter=max_iter,
        random_state=seed,
    )
    labels = est.fit_predict(feature_matrix(scenario))
    return Assignment.from_zero_based(labels, scenario.n_uavs, scenario.c_max)


def assign(scenario: Scenario, strategy: str, seed: int = 0) -> Assignment:
    if strategy == "ebtas":
        return ebtas_cluster(scenario, seed)
    if strategy == "region":
        return baseline_region(scenario)
    if strategy == "shortest":
        return baseline_shortest_distance(scenario, seed)
    raise ValueError(f"unknown strategy {strategy!r}")
