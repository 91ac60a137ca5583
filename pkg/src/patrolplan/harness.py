"""End-to-end runs, strategy comparison and file outputs.

A run chains assignment, routing and per-UAV mission planning. Reports hold
per-UAV completion time and energy, plus the weighted mission objective in
two forms: with the literal balance term ``lambda * (T_i - T_avg)``, which
always sums to zero across UAVs, and with its absolute-value reading.
"""
from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .assignment import Assignment, assign
from .channel import best_rate
from .energy import EnergyBreakdown, flight_power_w
from .routing import Route, plan_routes
from .scenario import Scenario, generate_scenario
from .trajectory import MissionPlan, SolverConfig, plan_mission

__all__ = [
    "STRATEGIES",
    "COMPARISON_COLUMNS",
    "TRAJECTORY_COLUMNS",
    "REPORT_COLUMNS",
    "UavReport",
    "EnergyReport",
    "RunConfig",
    "RunResult",
    "build_report",
    "run_strategy",
    "compare_strategies",
    "sweep",
    "aggregate",
    "comparison_rows",
    "write_comparison_csv",
    "emit_outputs",
    "write_trajectories_csv",
    "write_report_csv",
    "read_report_csv",
    "read_trajectories_csv",
    "energy_from_trajectories",
    "render_svgs",
    "chord_deviation",
]

log = logging.getLogger(__name__)

STRATEGIES = ("ebtas", "shortest", "region")
COMPARISON_COLUMNS = ("strategy", "seed", "uav_id", "T_i", "E_i", "T_avg", "E_total", "minmax_gap")
TRAJECTORY_COLUMNS = (
    "uav", "slot", "t_s", "x_m", "y_m", "speed_mps", "best_rate_bps", "tau_station", "f_uav_hz",
    "segment", "slot_s", "tau_sum", "deviation_m",
)
REPORT_COLUMNS = (
    "strategy", "seed", "uav_id", "t_complete_s", "e_flight_j", "e_compute_j", "e_transmit_j", "e_total_j",
    "t_avg_s", "e_total_all_j", "minmax_gap_s", "phi", "lambda", "p0_literal", "p0_balance_literal", "p0_abs",
)


@dataclass(frozen=True)
class UavReport:
    uav_id: int
    t_complete_s: float
    e_flight_j: float
    e_compute_j: float
    e_transmit_j: float

    @property
    def e_total_j(self) -> float:
        return self.e_flight_j + self.e_compute_j + self.e_transmit_j


@dataclass(frozen=True)
class EnergyReport:
    uavs: tuple[UavReport, ...]
    strategy: str = ""
    seed: int = 0
    phi: float = 0.0
    lam: float = 0.0

    @property
    def t_avg_s(self) -> float:
        return math.fsum(u.t_complete_s for u in self.uavs) / len(self.uavs) if self.uavs else 0.0

    @property
    def e_total_all_j(self) -> float:
        return math.fsum(u.e_total_j for u in self.uavs)

    @property
    def minmax_gap_s(self) -> float:
        if not self.uavs:
            return 0.0
        t = [u.t_complete_s for u in self.uavs]
        return max(t) - min(t)

    @property
    def p0_balance_literal(self) -> float:
        """``sum_i lambda * (T_i - T_avg)``: zero up to rounding for any plan."""
        ta = self.t_avg_s
        return self.lam * math.fsum(u.t_complete_s - ta for u in self.uavs)

    @property
    def p0_literal(self) -> float:
        ta = self.t_avg_s
        return math.fsum(u.e_total_j + self.phi * u.t_complete_s + self.lam * (u.t_complete_s - ta) for u in self.uavs)

    @property
    def p0_abs(self) -> float:
        ta = self.t_avg_s
        return math.fsum(u.e_total_j + self.phi * u.t_complete_s + self.lam * abs(u.t_complete_s - ta) for u in self.uavs)

    def comparison_rows(self) -> list[dict]:
        return [
            {
                "strategy": self.strategy,
                "seed": self.seed,
                "uav_id": u.uav_id,
                "T_i": u.t_complete_s,
                "E_i": u.e_total_j,
                "T_avg": self.t_avg_s,
                "E_total": self.e_total_all_j,
                "minmax_gap": self.minmax_gap_s,
            }
            for u in self.uavs
        ]


@dataclass(frozen=True)
class RunConfig:
    strategy: str = "ebtas"
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    out_dir: str | None = None
    phi: float | None = None
    lam: float | None = None
    edge_dt: float = 0.5

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")


@dataclass
class RunResult:
    report: EnergyReport
    plans: list[MissionPlan]
    assignment: Assignment
    routes: list[Route]


def build_report(plans: Sequence[MissionPlan], strategy: str = "", seed: int = 0, phi: float = 0.0, lam: float = 0.0) -> EnergyReport:
    uavs = tuple(
        UavReport(p.uav_id, p.t_complete, p.energy.flight_j, p.energy.compute_j, p.energy.transmit_j) for p in plans
    )
    return EnergyReport(uavs, strategy, int(seed), float(phi), float(lam))


def run_strategy(scenario: Scenario, cfg: RunConfig, cache: dict | None = None) -> RunResult:
    """Assignment, routing and mission planning for one strategy.

    Deterministic for a given scenario and config. Infeasible legs raise
    :class:`~patrolplan.trajectory.SegmentInfeasible` naming the UAV.
    """
    a = assign(scenario, cfg.strategy, cfg.seed)
    routes = plan_routes(scenario, a, dt=cfg.edge_dt)
    plans = []
    for r in routes:
        plans.append(plan_mission(r, scenario, cfg.solver, cache=cache))
        log.info("%s seed %d uav %d: %d points, T=%.1f s, E=%.1f J", cfg.strategy, cfg.seed, r.uav_id,
                 len(r.order), plans[-1].t_complete, plans[-1].energy.total_j)
    phi = scenario.weights.phi if cfg.phi is None else cfg.phi
    lam = scenario.weights.lam if cfg.lam is None else cfg.lam
    report = build_report(plans, cfg.strategy, cfg.seed, phi, lam)
    if cfg.out_dir is not None:
        emit_outputs(plans, report, scenario, cfg.out_dir)
    return RunResult(report, plans, a, routes)


def _run_reports(scenario, seed, strategies, solver, phi, lam):
    cache: dict = {}
    out = []
    for st in strategies:
        res = run_strategy(scenario, RunConfig(st, seed, solver, None, phi, lam), cache=cache)
        out.append(res.report)
    return out


def _map(fn, jobs, arg_list):
    if jobs and jobs > 1 and len(arg_list) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, *zip(*arg_list)))
    return [fn(*args) for args in arg_list]


def compare_strategies(scenario: Scenario, seeds: Iterable[int], strategies: Sequence[str] = STRATEGIES,
                       solver: SolverConfig | None = None, phi=None, lam=None, jobs: int = 1) -> list[EnergyReport]:
    """Reports for every strategy and assignment seed on one scenario."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    solver = solver or SolverConfig()
    args = [(scenario, s, tuple(strategies), solver, phi, lam) for s in seeds]
    return [r for group in _map(_run_reports, jobs, args) for r in group]


def _sweep_one(seed, k, n_uavs, strategies, solver):
    sc = generate_scenario(seed, k=k, n_uavs=n_uavs)
    return _run_reports(sc, seed, strategies, solver, None, None)


def sweep(seeds: Iterable[int], k: int = 20, n_uavs: int = 2, strategies: Sequence[str] = STRATEGIES,
          solver: SolverConfig | None = None, jobs: int = 1) -> list[EnergyReport]:
    """Like :func:`compare_strategies`, with a freshly generated scenario per seed."""
    solver = solver or SolverConfig()
    args = [(s, k, n_uavs, tuple(strategies), solver) for s in seeds]
    return [r for group in _map(_sweep_one, jobs, args) for r in group]


def comparison_rows(reports: Iterable[EnergyReport]) -> list[dict]:
    return [row for r in reports for row in r.comparison_rows()]


def aggregate(reports: Iterable[EnergyReport]) -> dict[str, dict[str, float]]:
    """Per-strategy means of total energy, average time and completion-time gap."""
    by: dict[str, list[EnergyReport]] = {}
    for r in reports:
        by.setdefault(r.strategy, []).append(r)
    out = {}
    for st, rs in sorted(by.items()):
        out[st] = {
            "runs": len(rs),
            "E_total": math.fsum(r.e_total_all_j for r in rs) / len(rs),
            "T_avg": math.fsum(r.t_avg_s for r in rs) / len(rs),
            "minmax_gap": math.fsum(r.minmax_gap_s for r in rs) / len(rs),
        }
    return out


# ------------------------------------------------------------------ outputs


def _open_for_write(path: Path):
    try:
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def chord_deviation(waypoints) -> np.ndarray:
    """Distance of every waypoint from the straight line joining the segment ends."""
    w = np.asarray(waypoints, dtype=float)
    a, b = w[0], w[-1]
    ab = b - a
    n = float(np.hypot(*ab))
    if n == 0.0:
        return np.hypot(*(w - a).T)
    return np.abs(ab[0] * (w[:, 1] - a[1]) - ab[1] * (w[:, 0] - a[0])) / n


def write_trajectories_csv(plans: Sequence[MissionPlan], scenario: Scenario, path) -> Path:
    path = Path(path)
    station_ids = [g.id for g in scenario.stations]
    with _open_for_write(path) as fh:
        wr = csv.writer(fh)
        wr.writerow(TRAJECTORY_COLUMNS)
        for plan in plans:
            t = 0.0
            slot = 0
            for si, seg in enumerate(plan.segments):
                if seg.n_slots == 0:
                    continue
                rates, _ = best_rate(seg.midpoints(), scenario)
                speeds = seg.speeds()
                tau_sum = seg.tau.sum(axis=1)
                dev = chord_deviation(seg.waypoints)
                for l in range(seg.n_slots):
                    st = station_ids[int(np.argmax(seg.tau[l]))] if tau_sum[l] > 0 else -1
                    wr.writerow([
                        plan.uav_id, slot, repr(t), repr(float(seg.waypoints[l, 0])), repr(float(seg.waypoints[l, 1])),
                        repr(float(speeds[l])), repr(float(rates[l])), st, repr(float(seg.f_uav[l])),
                        si, repr(float(seg.slot_s[l])), repr(float(tau_sum[l])), repr(float(dev[l])),
                    ])
                    t += float(seg.slot_s[l])
                    slot += 1
    return path


def write_report_csv(report: EnergyReport, path) -> Path:
    path = Path(path)
    with _open_for_write(path) as fh:
        wr = csv.writer(fh)
        wr.writerow(REPORT_COLUMNS)
        for u in report.uavs:
            wr.writerow([
                report.strategy, report.seed, u.uav_id, repr(u.t_complete_s), repr(u.e_flight_j), repr(u.e_compute_j),
                repr(u.e_transmit_j), repr(u.e_total_j), repr(report.t_avg_s), repr(report.e_total_all_j),
                repr(report.minmax_gap_s), repr(report.phi), repr(report.lam), repr(report.p0_literal),
                repr(report.p0_balance_literal), repr(report.p0_abs),
            ])
    return path


def write_comparison_csv(reports: Iterable[EnergyReport], path) -> Path:
    path = Path(path)
    with _open_for_write(path) as fh:
        wr = csv.DictWriter(fh, fieldnames=COMPARISON_COLUMNS)
        wr.writeheader()
        for row in comparison_rows(reports):
            wr.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return path


def read_report_csv(path) -> EnergyReport:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return EnergyReport(())
    uavs = tuple(
        UavReport(int(r["uav_id"]), float(r["t_complete_s"]), float(r["e_flight_j"]), float(r["e_compute_j"]),
                  float(r["e_transmit_j"]))
        for r in rows
    )
    r0 = rows[0]
    return EnergyReport(uavs, r0["strategy"], int(r0["seed"]), float(r0["phi"]), float(r0["lambda"]))


def read_trajectories_csv(path) -> dict[int, dict[str, np.ndarray]]:
    """Columns of the trajectory CSV grouped per UAV."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out: dict[int, dict[str, list]] = {}
    for r in rows:
        d = out.setdefault(int(r["uav"]), {c: [] for c in TRAJECTORY_COLUMNS})
        for c in TRAJECTORY_COLUMNS:
            d[c].append(float(r[c]))
    return {k: {c: np.array(v) for c, v in d.items()} for k, d in out.items()}


def energy_from_trajectories(path, scenario: Scenario) -> dict[int, EnergyBreakdown]:
    """Per-UAV energy recomputed from a trajectory CSV (independent of the report)."""
    uav = scenario.uav
    out = {}
    for uid, d in read_trajectories_csv(path).items():
        flight = compute = transmit = 0.0
        for s in np.unique(d["segment"]):
            m = d["segment"] == s
            dt = d["slot_s"][m]
            flight += float(np.sum(flight_power_w(d["speed_mps"][m], uav.rotor) * dt))
            compute += float(np.sum(uav.cap_coeff * d["f_uav_hz"][m] ** 3 * dt))
            transmit += float(np.sum(d["tau_sum"][m] * uav.tx_power * dt))
        out[uid] = EnergyBreakdown(flight, compute, transmit)
    return out


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _trajectory_svg(paths: dict[int, np.ndarray], scenario: Scenario, size: int = 640) -> str:
    pts = [scenario.point_xy(), scenario.station_xy(), scenario.start.as_array()[None, :]]
    pts += [p for p in paths.values() if p.size]
    allp = np.vstack(pts)
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1.0))
    pad = 0.06 * span
    scale = size / (span + 2 * pad)

    def tx(p):
        return (p[0] - lo[0] + pad) * scale, size - (p[1] - lo[1] + pad) * scale

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>']
    for uid, p in sorted(paths.items()):
        if p.shape[0] < 2:
            continue
        c = _COLORS[(uid - 1) % len(_COLORS)]
        d = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in map(tx, p))
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.6" points="{d}"><title>UAV {uid}</title></polyline>')
    for g in scenario.stations:
        x, y = tx(g.position.as_array())
        out.append(f'<rect x="{_fmt(x - 5)}" y="{_fmt(y - 5)}" width="10" height="10" fill="#444"><title>station {g.id}</title></rect>')
    for cp in scenario.cruise_points:
        x, y = tx(cp.position.as_array())
        out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="4" fill="#fff" stroke="#000"><title>point {cp.id}</title></circle>')
    x, y = tx(scenario.start.as_array())
    out.append(f'<path d="M {_fmt(x)} {_fmt(y - 7)} L {_fmt(x - 6)} {_fmt(y + 5)} L {_fmt(x + 6)} {_fmt(y + 5)} Z" fill="#f0c000" stroke="#000"><title>start</title></path>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _speed_rate_svg(t: np.ndarray, speed: np.ndarray, rate: np.ndarray, uid: int, w: int = 720, h: int = 320) -> str:
    m = 40
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
           f'<rect width="{w}" height="{h}" fill="white"/>',
           f'<line x1="{m}" y1="{h - m}" x2="{w - m}" y2="{h - m}" stroke="#000"/>',
           f'<line x1="{m}" y1="{m}" x2="{m}" y2="{h - m}" stroke="#000"/>',
           f'<text x="{m}" y="{m - 12}" font-size="12">UAV {uid}: speed (m/s, blue, max {_fmt(float(np.max(speed, initial=0)))}) '
           f'and best rate (Mbit/s, red, max {_fmt(float(np.max(rate, initial=0)) / 1e6)}) vs time</text>']
    if t.size:
        tmax = float(t[-1]) or 1.0
        for series, color in ((speed, "#1f77b4"), (rate, "#d62728")):
            top = float(np.max(series)) or 1.0
            xs = m + (t / tmax) * (w - 2 * m)
            ys = h - m - (series / top) * (h - 2 * m)
            d = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs, ys))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.3" points="{d}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svgs(traj_csv, scenario: Scenario, out_dir) -> list[Path]:
    """Trajectory map and per-UAV speed/rate plots from a trajectory CSV."""
    out_dir = Path(out_dir)
    data = read_trajectories_csv(traj_csv)
    finish = scenario.finish.as_array()[None, :]
    paths = {uid: np.vstack([np.column_stack([d["x_m"], d["y_m"]]), finish]) for uid, d in data.items()}
    written = [out_dir / "trajectories.svg"]
    _write_text(written[0], _trajectory_svg(paths, scenario))
    for uid, d in sorted(data.items()):
        p = out_dir / f"speed_rate_uav{uid}.svg"
        _write_text(p, _speed_rate_svg(d["t_s"], d["speed_mps"], d["best_rate_bps"], uid))
        written.append(p)
    return written


def _write_text(path: Path, text: str):
    with _open_for_write(path) as fh:
        fh.write(text)


def emit_outputs(plans: Sequence[MissionPlan], report: EnergyReport, scenario: Scenario, out_dir) -> list[Path]:
    """Write trajectories.csv, report.csv, trajectories.svg and speed_rate_uav<i>.svg."""
    out_dir = Path(out_dir)
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out_dir}: {exc.strerror or exc}") from exc
    traj = write_trajectories_csv(plans, scenario, out_dir / "trajectories.csv")
    rep = write_report_csv(report, out_dir / "report.csv")
    return [traj, rep] + render_svgs(traj, scenario, out_dir)
