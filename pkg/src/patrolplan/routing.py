"""Visit ordering for each UAV.

Every ordered pair of stops in a cluster gets a weight: the straight-line
flight energy at the max-range speed, scaled by how little of the departing
point's data could be offloaded along that line. The visit order is then the
cheapest open path from the start to the finish (Held-Karp for small
clusters, local search otherwise).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import best_rate
from .energy import flight_power_w, max_range_speed
from .scenario import Point2, Scenario

__all__ = [
    "EdgeEstimate",
    "Route",
    "EPS_Q_BITS",
    "estimate_edge",
    "edge_matrix",
    "path_cost",
    "held_karp",
    "brute_force_path",
    "heuristic_path",
    "two_opt_stable",
    "solve_route",
    "route_cluster",
    "plan_routes",
]

EPS_Q_BITS = 1.0
HELD_KARP_LIMIT = 14


@dataclass(frozen=True)
class EdgeEstimate:
    """Edge of one cluster graph; node 0 is the start and ``K_i + 1`` the finish."""

    frm: int
    to: int
    e_joules: float
    q_offloadable_bits: float
    weight: float


@dataclass(frozen=True)
class Route:
    """Visit order of one UAV as cruise-point ids (start and finish implicit)."""

    uav_id: int
    order: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(i) for i in self.order))
        if len(set(self.order)) != len(self.order):
            raise ValueError("route visits a point twice")


def _edge_raw(a: np.ndarray, b: np.ndarray, scenario: Scenario, dt: float) -> tuple[float, float]:
    """(energy J, offloadable bits) of the straight flight a -> b."""
    uav = scenario.uav
    v = max_range_speed(uav.rotor, uav.v_max)
    length = float(np.hypot(*(b - a)))
    if length == 0.0:
        return 0.0, 0.0
    T = length / v
    n = max(1, math.ceil(T / dt - 1e-9))
    h = T / n
    frac = (np.arange(n) + 0.5) / n
    pts = a[None, :] + frac[:, None] * (b - a)[None, :]
    rates, _ = best_rate(pts, scenario)
    q = float(np.sum(rates) * h)
    # transmitter stays on for the whole leg, keeping E symmetric in a, b
    e = (flight_power_w(v, uav.rotor) + uav.tx_power) * T
    return e, q


def _weight(q_from: float, e: float, q_edge: float) -> float:
    if q_from <= 0.0:
        return 0.0
    if q_edge > 0.0:
        return q_from * e / q_edge
    return e * (1.0 + q_from / EPS_Q_BITS)


def estimate_edge(frm: Point2, q_from: float, to: Point2, scenario: Scenario, dt: float = 0.5,
                  frm_id: int = 0, to_id: int = 1) -> EdgeEstimate:
    """Hybrid time-energy weight of flying ``frm -> to`` carrying ``q_from`` bits.

    The line is sampled at the midpoints of equal sub-steps no longer than
    ``dt`` seconds; the offloadable volume is the best-station rate
    integrated along it.
    """
    if q_from < 0:
        raise ValueError("q_from must be >= 0")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    e, q = _edge_raw(frm.as_array(), to.as_array(), scenario, dt)
    return EdgeEstimate(frm_id, to_id, e, q, _weight(q_from, e, q))


def edge_matrix(point_ids, scenario: Scenario, dt: float = 0.5) -> tuple[np.ndarray, list[EdgeEstimate]]:
    """Weight matrix of a cluster graph, shape (K_i + 2, K_i + 2).

    Row/column 0 is the start, ``1..K_i`` the points in ``point_ids`` order
    and ``K_i + 1`` the finish. Edges into the start, out of the finish and
    self-loops are ``inf``; start -> finish is only allowed for an empty
    cluster.
    """
    pts = {p.id: p for p in scenario.cruise_points}
    ids = list(point_ids)
    K = len(ids)
    xy = [scenario.start.as_array()] + [pts[i].position.as_array() for i in ids] + [scenario.finish.as_array()]
    q = [0.0] + [pts[i].data_bits for i in ids] + [0.0]
    W = np.full((K + 2, K + 2), np.inf)
    edges = []
    cache: dict[tuple[int, int], tuple[float, float]] = {}
    for i in range(K + 1):
        for j in range(1, K + 2):
            if i == j or (i == 0 and j == K + 1 and K > 0):
                continue
            key = (min(i, j), max(i, j))
            if key not in cache:
                cache[key] = _edge_raw(xy[key[0]], xy[key[1]], scenario, dt)
            e, qe = cache[key]
            w = _weight(q[i], e, qe)
            W[i, j] = w
            edges.append(EdgeEstimate(i, j, e, qe, w))
    return W, edges


def path_cost(W: np.ndarray, order) -> float:
    """Cost of start -> order... -> finish, ``order`` listing inner node indices."""
    n = W.shape[0] - 2
    path = np.concatenate([[0], np.asarray(order, dtype=int), [n + 1]])
    return float(W[path[:-1], path[1:]].sum())


def held_karp(W: np.ndarray) -> tuple[list[int], float]:
    """Exact open-path TSP from node 0 to node ``n + 1`` through nodes 1..n."""
    W = np.asarray(W, dtype=float)
    n = W.shape[0] - 2
    if n <= 0:
        return [], float(W[0, 1]) if n == 0 else 0.0
    inner = W[1 : n + 1, 1 : n + 1]  # inner[k, j] = cost k -> j
    full = (1 << n) - 1
    dp = np.full((1 << n, n), np.inf)
    parent = np.full((1 << n, n), -1, dtype=np.int64)
    for j in range(n):
        dp[1 << j, j] = W[0, j + 1]
    bits = 1 << np.arange(n)
    for mask in range(1, full + 1):
        members = np.flatnonzero(mask & bits)
        if members.size < 2:
            continue
        prev = dp[mask ^ bits[members]]  # row per candidate last node j
        cand = prev + inner[:, members].T  # [j_idx, k] = dp[mask - j, k] + W[k, j]
        k = np.argmin(cand, axis=1)
        dp[mask, members] = cand[np.arange(members.size), k]
        parent[mask, members] = k
    total = dp[full] + W[1 : n + 1, n + 1]
    last = int(np.argmin(total))
    cost = float(total[last])
    order = []
    mask = full
    while last >= 0:
        order.append(last + 1)
        nxt = int(parent[mask, last])
        mask ^= 1 << last
        last = nxt
    return order[::-1], cost


def brute_force_path(W: np.ndarray) -> tuple[list[int], float]:
    """Exhaustive minimum over all orderings (small ``n`` only)."""
    import itertools

    n = W.shape[0] - 2
    best = (None, math.inf)
    for perm in itertools.permutations(range(1, n + 1)):
        c = path_cost(W, perm)
        if c < best[1]:
            best = (list(perm), c)
    return best[0] if best[0] is not None else [], best[1]


def _nearest_neighbor(W: np.ndarray) -> list[int]:
    n = W.shape[0] - 2
    left = set(range(1, n + 1))
    cur, order = 0, []
    while left:
        nxt = min(left, key=lambda j: (W[cur, j], j))
        order.append(nxt)
        left.remove(nxt)
        cur = nxt
    return order


def _nearest_neighbor_back(W: np.ndarray) -> list[int]:
    """Nearest-neighbour chain grown backwards from the finish."""
    n = W.shape[0] - 2
    left = set(range(1, n + 1))
    cur, rev = n + 1, []
    while left:
        prv = min(left, key=lambda j: (W[j, cur], j))
        rev.append(prv)
        left.remove(prv)
        cur = prv
    return rev[::-1]


def _cheapest_insertion(W: np.ndarray) -> list[int]:
    n = W.shape[0] - 2
    order: list[int] = []
    for node in range(1, n + 1):
        path = [0] + order + [n + 1]
        gains = [W[path[k], node] + W[node, path[k + 1]] - W[path[k], path[k + 1]] for k in range(len(path) - 1)]
        k = int(np.argmin(gains))
        order.insert(k, node)
    return order


def _two_opt_pass(W, order, cost):
    n = len(order)
    for i in range(n - 1):
        for j in range(i + 1, n):
            trial = order[:i] + order[i : j + 1][::-1] + order[j + 1 :]
            c = path_cost(W, trial)
            if c < cost - 1e-12 * max(1.0, abs(cost)):
                return trial, c, True
    return order, cost, False


def _or_opt_pass(W, order, cost):
    n = len(order)
    for seg in (1, 2, 3):
        for i in range(n - seg + 1):
            block = order[i : i + seg]
            rest = order[:i] + order[i + seg :]
            for k in range(len(rest) + 1):
                if k == i:
                    continue
                for blk in (block, block[::-1]) if seg > 1 else (block,):
                    trial = rest[:k] + blk + rest[k:]
                    c = path_cost(W, trial)
                    if c < cost - 1e-12 * max(1.0, abs(cost)):
                        return trial, c, True
    return order, cost, False


def _local_search(W, order, max_rounds):
    cost = path_cost(W, order)
    for _ in range(max_rounds):
        order, cost, moved = _two_opt_pass(W, order, cost)
        if moved:
            continue
        order, cost, moved = _or_opt_pass(W, order, cost)
        if not moved:
            break
    return order, cost


def heuristic_path(W: np.ndarray, max_rounds: int = 10_000) -> tuple[list[int], float]:
    """Local search from several constructions; keeps the cheapest result.

    Starts from forward and backward nearest-neighbour chains and cheapest
    insertion, then applies 2-opt and Or-opt moves until neither improves.
    """
    W = np.asarray(W, dtype=float)
    best_order, best_cost = [], math.inf
    for build in (_nearest_neighbor, _nearest_neighbor_back, _cheapest_insertion):
        order, cost = _local_search(W, build(W), max_rounds)
        if cost < best_cost:
            best_order, best_cost = order, cost
    return best_order, best_cost


def two_opt_stable(W: np.ndarray, order) -> bool:
    """True when no single segment reversal lowers the path cost."""
    order = list(order)
    cost = path_cost(W, order)
    _, c, moved = _two_opt_pass(W, order, cost)
    return not moved


def solve_route(point_ids, W: np.ndarray, uav_id: int = 1, method: str = "auto") -> Route:
    """Cheapest start-to-finish visiting order for one cluster.

    ``W`` is the matrix from :func:`edge_matrix` for ``point_ids``.
    ``method`` is ``"auto"`` (exact up to 14 points), ``"exact"`` or
    ``"heuristic"``.
    """
    ids = list(point_ids)
    if W.shape != (len(ids) + 2, len(ids) + 2):
        raise ValueError("weight matrix does not match the cluster size")
    if not ids:
        return Route(uav_id, ())
    if method == "auto":
        method = "exact" if len(ids) <= HELD_KARP_LIMIT else "heuristic"
    if method == "exact":
        order, _ = held_karp(W)
    elif method == "heuristic":
        order, _ = heuristic_path(W)
    else:
        raise ValueError(f"unknown method {method!r}")
    return Route(uav_id, tuple(ids[k - 1] for k in order))


def route_cluster(point_ids, scenario: Scenario, uav_id: int = 1, dt: float = 0.5, method: str = "auto") -> Route:
    W, _ = edge_matrix(point_ids, scenario, dt)
    return solve_route(point_ids, W, uav_id, method)


def plan_routes(scenario: Scenario, assignment, dt: float = 0.5, method: str = "auto") -> list[Route]:
    """One route per UAV for a point assignment (labels 1..N in point order)."""
    ids = [p.id for p in scenario.cruise_points]
    routes = []
    for uav in range(1, assignment.n_uavs + 1):
        members = [ids[i] for i in assignment.members(uav)]
        routes.append(route_cluster(members, scenario, uav, dt, method))
    return routes
