import dataclasses

import numpy as np
import pytest

from patrolplan import _sca
from patrolplan.channel import rate_matrix
from patrolplan.energy import flight_power_w, max_range_speed, segment_energy
from patrolplan.routing import Route
from patrolplan.scenario import Point2
from patrolplan.trajectory import (
    NeedsLongerDuration,
    SegmentInfeasible,
    SolverConfig,
    init_segment,
    optimize_frequencies,
    optimize_schedule,
    optimize_segment,
    optimize_trajectory_sca,
    plan_mission,
    plan_residuals,
    slot_rates,
    waterfill_processing,
)
from patrolplan.trajectory import _surrogate_values

A, B = Point2(100.0, 450.0), Point2(900.0, 600.0)


def test_waterfill_respects_capacity_and_causality():
    off = np.array([[0.0], [10.0], [0.0], [0.0]])
    proc = waterfill_processing(off, np.ones(4), np.array([4000.0]), cycles_per_bit=1000.0)
    assert np.allclose(proc[:, 0], [0.0, 4.0, 4.0, 2.0])
    assert np.all(np.cumsum(proc) <= np.cumsum(off) + 1e-12)


def test_waterfill_budget():
    off = np.array([[5.0, 5.0], [5.0, 5.0]])
    proc = waterfill_processing(off, np.ones(2), np.array([1e9, 1e9]), 1.0, budget=12.0)
    assert proc.sum() == pytest.approx(12.0)


def test_init_is_straight_at_max_range_speed(scenario):
    plan = init_segment(A, B, 50e6, 10, scenario)
    v = max_range_speed(scenario.uav.rotor, scenario.uav.v_max)
    assert np.allclose(plan.speeds(), v)
    assert np.allclose(plan.waypoints[[0, -1]], [[100, 450], [900, 600]])
    d = np.diff(plan.waypoints, axis=0)
    assert np.allclose(d[0, 0] * d[:, 1] - d[0, 1] * d[:, 0], 0.0, atol=1e-6)


def test_init_stretches_for_heavy_demand(scenario):
    short = init_segment(A, B, 1e6, 10, scenario)
    heavy = init_segment(A, B, 2e9, 10, scenario)
    assert heavy.duration > short.duration
    assert plan_residuals(heavy, scenario)["data"] <= 1e-9


def test_init_argument_check(scenario):
    with pytest.raises(ValueError):
        init_segment(A, B, 1e6, 1, scenario)


def test_short_heavy_leg_is_feasible(scenario):
    # slowing down always works: inflation starts from a capacity bound, not the flight time
    a, b = Point2(396.6, 873.5), Point2(387.7, 880.3)
    plan = init_segment(a, b, 4.7e8, 20, scenario)
    assert plan.duration > 100.0
    assert plan_residuals(plan, scenario)["data"] <= 1e-9


def test_infeasible_demand_raises(scenario):
    with pytest.raises(SegmentInfeasible, match="unprocessable"):
        init_segment(A, Point2(110.0, 450.0), 1e13, 8, scenario, SolverConfig(n_slots=8, inflate_retries=0))


def test_hover_leg(scenario):
    plan = optimize_segment(A, A, 3e8, scenario, SolverConfig(n_slots=8))
    assert plan.duration > 0
    assert plan_residuals(plan, scenario)["data"] <= 1e-6


def test_frequencies_constant_and_capped(scenario):
    plan = init_segment(A, B, 3e8, 12, scenario)
    f = plan.f_uav
    assert np.allclose(f, f[0])
    assert f[0] <= scenario.uav.max_cpu_hz * (1 + 1e-12)
    tight = dataclasses.replace(plan, slot_s=plan.slot_s * 0.2, tau=np.zeros_like(plan.tau))
    with pytest.raises(NeedsLongerDuration):
        optimize_frequencies(tight, scenario)


def test_schedule_never_increases_energy(scenario):
    plan = init_segment(A, B, 3e8, 12, scenario)
    e0 = segment_energy(plan, scenario).total_j
    again = optimize_schedule(plan, scenario)
    assert segment_energy(again, scenario).total_j <= e0 + 1e-9
    assert np.all(again.tau.sum(axis=1) <= 1 + 1e-12)
    assert np.all((again.tau > 0).sum(axis=1) <= 1)  # one station per slot


def test_surrogate_rate_is_tight_and_first_order(scenario):
    plan = init_segment(A, B, 3e8, 12, scenario)
    vals, served = _surrogate_values(plan, scenario, 10.0)
    ell = _sca.LENGTH_UNIT

    def lb(mid_m):
        m = mid_m / ell
        return (vals["ra"] - vals["rb"] * np.sum(m**2, axis=1) + np.sum(vals["rg"] * m, axis=1)
                + vals["kh"] * np.linalg.norm(m - vals["sxy"], axis=1))

    def true(mid_m):
        R = rate_matrix(mid_m, scenario.station_xy(), scenario.station_dh(), scenario.uav.tx_power, scenario.channel)
        return R[np.arange(len(mid_m)), served] / 1e6

    mid = plan.midpoints()
    assert np.allclose(lb(mid), true(mid), rtol=1e-9)
    h = 1e-3
    for axis in (0, 1):
        e = np.zeros(2)
        e[axis] = h
        g_lb = (lb(mid + e) - lb(mid - e)) / (2 * h)
        g_true = (true(mid + e) - true(mid - e)) / (2 * h)
        assert np.allclose(g_lb, g_true, rtol=1e-4, atol=1e-9)


def test_sca_step_never_increases_energy(scenario):
    plan = init_segment(A, B, 3e8, 12, scenario)
    e0 = segment_energy(plan, scenario).total_j
    new = optimize_trajectory_sca(plan, scenario, 50.0)
    assert segment_energy(new, scenario).total_j <= e0


def test_optimize_segment_contract(scenario, fast_solver):
    plan = optimize_segment(A, B, 3e8, scenario, fast_solver)
    tr = np.array(plan.trace)
    assert np.all(np.diff(tr) <= 1e-9 * tr[0])
    assert tr[-1] < tr[0]
    res = plan_residuals(plan, scenario)
    assert max(res.values()) <= 1e-6
    assert plan.trace[-1] == pytest.approx(segment_energy(plan, scenario).total_j)


def test_zero_demand_is_analytic(scenario, fast_solver):
    plan = optimize_segment(A, B, 0.0, scenario, fast_solver)
    v = max_range_speed(scenario.uav.rotor, scenario.uav.v_max)
    length = np.hypot(800.0, 150.0)
    assert segment_energy(plan, scenario).total_j == pytest.approx(flight_power_w(v, scenario.uav.rotor) * length / v, rel=1e-9)


def test_offload_makes_uav_slow_near_station(one_station):
    plan = optimize_segment(Point2(0.0, 540.0), Point2(1000.0, 540.0), 4e8, one_station, SolverConfig(n_slots=20))
    r = slot_rates(plan.waypoints, one_station)[:, 0]
    assert plan.speeds()[np.argmax(r)] < plan.speeds().mean()


def test_plan_mission_and_cache(scenario, fast_solver):
    route = Route(1, (3, 8))
    cache = {}
    mp = plan_mission(route, scenario, fast_solver, cache=cache)
    assert len(mp.segments) == 3
    assert mp.segments[0].q_target == 0.0
    assert mp.segments[1].q_target == scenario.cruise_points[2].data_bits
    assert mp.energy.total_j == pytest.approx(sum(segment_energy(s, scenario).total_j for s in mp.segments))
    assert mp.t_complete == pytest.approx(sum(s.duration for s in mp.segments))
    assert len(cache) == 3
    again = plan_mission(route, scenario, fast_solver, cache=cache)
    assert again.segments[1] is mp.segments[1]


def test_empty_route_flies_start_to_finish(scenario, fast_solver):
    mp = plan_mission(Route(2, ()), scenario, fast_solver)
    assert len(mp.segments) == 1 and mp.uav_id == 2
