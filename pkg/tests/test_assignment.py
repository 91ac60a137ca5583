
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from oracles import brute_force_labelings, global_avg_dist, p1_reference
from patrolplan.assignment import (
    Assignment,
    BalancedClusterer,
    CapacityError,
    CapacityKMeans,
    RegionPartitioner,
    assign,
    baseline_region,
    baseline_shortest_distance,
    ebtas_cluster,
    feature_matrix,
    feature_vectors,
    neighbor_sets,
    neighbor_table,
    p1_objective,
    p1_terms,
)
from patrolplan.scenario import generate_scenario


def _p1(sc, labels0):
    X = feature_matrix(sc)
    return p1_reference(list(labels0), [tuple(r) for r in X[:, :2]], list(X[:, 2]), list(X[:, 3]), sc.weights.neighbor_d)


def test_neighbor_sets_plus_shape():
    xy = np.array([[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1], [5, 5]], float)
    ns = neighbor_sets(xy, 2.0)
    assert ns[0].ids == (1, 2, 3, 4)
    assert ns[0].avg_dist == pytest.approx(1.0)
    assert ns[5].ids == ()  # nothing inside the box
    assert ns[5].avg_dist == 0.0


def test_neighbor_table_sorted_and_padded():
    xy = np.array([[0, 0], [1, 0], [2, 0], [3, 0]], float)
    t = neighbor_table(xy, 2.5)
    assert list(t[0, 0, :3]) == [1, 2, -1]  # X+ within the box, nearest first
    assert np.all(t[0, 1] == -1)
    with pytest.raises(ValueError):
        neighbor_table(xy, 0.0)


def test_neighbor_sets_match_oracle(scenario):
    d = scenario.weights.neighbor_d
    ns = neighbor_sets(scenario.cruise_points, d)
    ref = global_avg_dist([tuple(r) for r in scenario.point_xy()], d)
    assert np.allclose([n.avg_dist for n in ns], ref)
    assert all(i >= 1 for n in ns for i in n.ids)  # scenario ids, 1-based


def test_features(scenario):
    fv = feature_vectors(scenario)
    X = feature_matrix(scenario)
    assert X.shape == (20, 4)
    assert X[0, 2] == fv[0].q == scenario.cruise_points[0].data_bits
    assert np.all(X[:, 3] > 0)


@pytest.mark.parametrize("seed", range(8))
def test_p1_matches_reference(seed):
    sc = generate_scenario(seed, k=9, n_uavs=2 + seed % 2)
    rng = np.random.default_rng(seed)
    lab = rng.integers(0, sc.n_uavs, size=sc.k)
    a = Assignment.from_zero_based(lab, sc.n_uavs)
    ns = neighbor_sets(sc.cruise_points, sc.weights.neighbor_d)
    got = p1_objective(a, feature_vectors(sc), ns, sc.weights)
    assert got == pytest.approx(_p1(sc, lab), rel=1e-10)


def test_p1_terms_consistent(scenario):
    a = ebtas_cluster(scenario, 0)
    ns = neighbor_sets(scenario.cruise_points, scenario.weights.neighbor_d)
    t = p1_terms(a, feature_vectors(scenario), ns, scenario.weights)
    q = scenario.data_bits()
    lab = np.asarray(a.labels)
    assert t["delta_q"] == pytest.approx(abs(q[lab == 1].sum() - q[lab == 2].sum()))
    assert p1_objective(a, feature_vectors(scenario), ns, scenario.weights) == pytest.approx(t["neighbor"] + t["imbalance"])


def test_p1_length_mismatch(scenario):
    with pytest.raises(ValueError):
        p1_objective(Assignment((1, 2), 2), feature_vectors(scenario), [], scenario.weights)


def test_assignment_validation():
    with pytest.raises(ValueError):
        Assignment((0, 1), 2)
    with pytest.raises(CapacityError):
        Assignment((1, 1, 1), 2, c_max=2)
    a = Assignment((1, 2, 2), 2, c_max=2)
    assert a.cluster_sizes == (1, 2)
    assert a.members(2) == [1, 2]


@pytest.mark.parametrize("strategy", ["ebtas", "shortest"])
def test_capacity_respected(strategy):
    for seed in range(5):
        sc = generate_scenario(seed, k=23, n_uavs=3, c_max=8)
        a = assign(sc, strategy, seed)
        assert max(a.cluster_sizes) <= 8
        assert sum(a.cluster_sizes) == 23


def test_tight_capacity():
    sc = generate_scenario(2, k=10, n_uavs=2, c_max=5)
    assert ebtas_cluster(sc, 0).cluster_sizes == (5, 5)


def test_estimator_rejects_impossible_capacity():
    X = feature_matrix(generate_scenario(0, k=10))
    with pytest.raises(CapacityError):
        BalancedClusterer(n_clusters=2, c_max=4).fit(X)
    with pytest.raises(CapacityError):
        CapacityKMeans(n_clusters=2, c_max=4).fit(X)


def test_deterministic_given_seed(scenario):
    assert ebtas_cluster(scenario, 5) == ebtas_cluster(scenario, 5)


def test_estimator_api():
    X = feature_matrix(generate_scenario(1, k=12))
    est = BalancedClusterer(n_clusters=2, c_max=8, random_state=0)
    assert est.get_params()["c_max"] == 8
    lab = est.fit_predict(X)
    assert lab.shape == (12,)
    assert est.cluster_centers_.shape == (2, 4)
    assert len(est.history_) >= 1
    assert est.predict(X).shape == (12,)
    c = clone(est)
    assert c.get_params() == est.get_params()
    with pytest.raises(ValueError):
        BalancedClusterer(variance_mode="bogus").fit(X)
    with pytest.raises(ValueError):
        BalancedClusterer().fit(X[:, :3])


def test_refinement_is_a_local_optimum():
    sc = generate_scenario(9, k=10)
    a = ebtas_cluster(sc, 0)
    lab = np.asarray(a.labels) - 1
    base = _p1(sc, lab)
    for i in range(sc.k):
        t = lab.copy()
        t[i] = 1 - t[i]
        if max(np.bincount(t, minlength=2)) <= sc.c_max and min(np.bincount(t, minlength=2)) >= 1:
            assert _p1(sc, t) >= base - 1e-9


def test_refine_never_hurts():
    for seed in range(6):
        sc = generate_scenario(seed, k=10)
        on = ebtas_cluster(sc, seed)
        off = ebtas_cluster(sc, seed, refine=False)
        assert _p1(sc, np.asarray(on.labels) - 1) <= _p1(sc, np.asarray(off.labels) - 1) + 1e-9


def test_variance_modes_both_run(scenario):
    for mode in ("after", "increase"):
        a = ebtas_cluster(scenario, 0, variance_mode=mode)
        assert max(a.cluster_sizes) <= scenario.c_max


def test_brute_force_small_instance():
    sc = generate_scenario(21, k=6)
    best = min(_p1(sc, lab) for lab in brute_force_labelings(6, 2, sc.c_max))
    got = _p1(sc, np.asarray(ebtas_cluster(sc, 0).labels) - 1)
    assert got <= 1.10 * best


def test_region_halves():
    sc = generate_scenario(0, k=9)
    a = baseline_region(sc)
    y = sc.point_xy()[:, 1]
    upper = y[np.asarray(a.labels) == 1]
    lower = y[np.asarray(a.labels) == 2]
    assert upper.min() >= lower.max()
    assert a.cluster_sizes == (4, 5)
    assert a.c_max is None


def test_region_quadrants_and_sectors():
    X = np.array([[0, 0], [10, 0], [0, 10], [10, 10], [6, 6]], float)
    lab = RegionPartitioner(4).fit_predict(X)
    assert len(set(lab[:4])) == 4
    assert lab[4] == lab[3]
    lab3 = RegionPartitioner(3).fit_predict(np.random.default_rng(0).uniform(0, 1, (30, 2)))
    assert set(lab3) <= {0, 1, 2}


def test_shortest_distance_is_compact():
    sc = generate_scenario(4, k=20)
    a = baseline_shortest_distance(sc, 0)
    xy = sc.point_xy()
    lab = np.asarray(a.labels)
    c = np.array([xy[lab == j].mean(axis=0) for j in (1, 2)])
    d = np.hypot(*(xy[:, None, :] - c[None]).transpose(2, 0, 1))
    own = d[np.arange(20), lab - 1]
    # almost every point sits closer to its own centroid
    assert np.mean(own <= d.min(axis=1) + 1e-9) >= 0.9


def test_unknown_strategy(scenario):
    with pytest.raises(ValueError):
        assign(scenario, "random")


def test_more_clusters_than_points():
    sc = generate_scenario(0, k=2, n_uavs=3)
    a = ebtas_cluster(sc, 0)
    assert sum(a.cluster_sizes) == 2


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(3, 25), n=st.integers(1, 4))
def test_partition_properties(seed, k, n):
    sc = generate_scenario(seed, k=k, n_uavs=n)
    for strategy in ("ebtas", "shortest", "region"):
        a = assign(sc, strategy, seed)
        assert len(a.labels) == k
        assert set(a.labels) <= set(range(1, n + 1))
        if strategy != "region":
            assert max(a.cluster_sizes) <= sc.c_max
