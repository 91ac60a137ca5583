"""Command-line interface: ``patrolplan <command> [options]``.

Exit status is 0 on success, 2 when a plan is infeasible (capacity or data
demand) and 1 on any other error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .assignment import CapacityError, assign
from .harness import (
    STRATEGIES,
    RunConfig,
    aggregate,
    compare_strategies,
    emit_outputs,
    render_svgs,
    run_strategy,
    sweep,
    write_comparison_csv,
    write_report_csv,
    write_trajectories_csv,
)
from .routing import plan_routes
from .scenario import ScenarioError, generate_scenario, load_scenario, save_scenario
from .trajectory import SegmentInfeasible, SolverConfig


EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


def _add_common(p, scenario=True, strategy=False, out=False):
    if scenario:
        p.add_argument("--scenario", required=True, help="scenario JSON file")
    if strategy:
        p.add_argument("--strategy", choices=STRATEGIES, default="ebtas")
    p.add_argument("--seed", type=int, default=0, help="assignment / generator seed")
    if out:
        p.add_argument("--out", required=True, help="output directory")


def _add_solver(p):
    p.add_argument("--slots", type=int, default=40, help="slots per segment (L)")
    p.add_argument("--phi", type=float, default=None, help="time weight in the mission objective")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="balance weight in the mission objective")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="patrolplan", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random scenario file")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--points", type=int, default=20, help="number of cruise points K")
    g.add_argument("--uavs", type=int, default=2, help="number of UAVs N")
    g.add_argument("--extent", type=float, default=1000.0, help="side of the square area, metres")
    g.add_argument("--q-min", type=float, default=50e6, help="minimum data per point, bits")
    g.add_argument("--q-max", type=float, default=500e6, help="maximum data per point, bits")
    g.add_argument("--out", required=True, help="path of the scenario file to write")

    a = sub.add_parser("assign", help="partition cruise points among UAVs")
    _add_common(a, strategy=True)
    a.add_argument("--out", help="CSV file (point_id,uav); stdout if omitted")

    r = sub.add_parser("route", help="assign, then order each UAV's visits")
    _add_common(r, strategy=True)
    r.add_argument("--out", help="CSV file (uav,rank,point_id); stdout if omitted")

    pl = sub.add_parser("plan", help="full pipeline for one strategy; writes CSVs only")
    _add_common(pl, strategy=True, out=True)
    _add_solver(pl)

    ru = sub.add_parser("run", help="full pipeline for one strategy; writes CSVs and SVGs")
    _add_common(ru, strategy=True, out=True)
    _add_solver(ru)

    c = sub.add_parser("compare", help="all strategies over several seeds")
    c.add_argument("--scenario", help="fixed scenario; if omitted one is generated per seed")
    c.add_argument("--seed", type=int, default=0, help="first seed")
    c.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    c.add_argument("--points", type=int, default=20)
    c.add_argument("--uavs", type=int, default=2)
    c.add_argument("--strategy", choices=STRATEGIES, action="append", help="restrict to these strategies (repeatable)")
    c.add_argument("--jobs", type=int, default=1, help="worker processes")
    c.add_argument("--out", required=True, help="output directory")
    _add_solver(c)

    rd = sub.add_parser("render", help="re-draw SVGs from a run directory")
    rd.add_argument("--scenario", required=True)
    rd.add_argument("--out", required=True, help="run directory holding trajectories.csv")
    return ap


def _write_rows(path, header, rows):
    fh = open(path, "w", newline="", encoding="utf-8") if path else sys.stdout
    try:
        wr = csv.writer(fh)
        wr.writerow(header)
        wr.writerows(rows)
    finally:
        if path:
            fh.close()


def _solver(args) -> SolverConfig:
    if args.slots < 2:
        raise ValueError("--slots must be >= 2")
    return SolverConfig(n_slots=args.slots)


def _summary(report) -> dict:
    return {
        "strategy": report.strategy,
        "seed": report.seed,
        "E_total": report.e_total_all_j,
        "T_avg": report.t_avg_s,
        "minmax_gap": report.minmax_gap_s,
        "p0_literal": report.p0_literal,
        "p0_abs": report.p0_abs,
        "uavs": [{"uav_id": u.uav_id, "T_i": u.t_complete_s, "E_i": u.e_total_j} for u in report.uavs],
    }


def _cmd_gen(args):
    sc = generate_scenario(args.seed, k=args.points, n_uavs=args.uavs, extent=args.extent, q_range=(args.q_min, args.q_max))
    save_scenario(sc, args.out)
    print(args.out)


def _cmd_assign(args):
    sc = load_scenario(args.scenario)
    a = assign(sc, args.strategy, args.seed)
    _write_rows(args.out, ("point_id", "uav"), [(p.id, lab) for p, lab in zip(sc.cruise_points, a.labels)])


def _cmd_route(args):
    sc = load_scenario(args.scenario)
    routes = plan_routes(sc, assign(sc, args.strategy, args.seed))
    _write_rows(args.out, ("uav", "rank", "point_id"), [(r.uav_id, i, pid) for r in routes for i, pid in enumerate(r.order)])


def _cmd_plan(args, render: bool):
    sc = load_scenario(args.scenario)
    cfg = RunConfig(args.strategy, args.seed, _solver(args), None, args.phi, args.lam)
    res = run_strategy(sc, cfg)
    out = Path(args.out)
    if render:
        emit_outputs(res.plans, res.report, sc, out)
    else:
        out.mkdir(parents=True, exist_ok=True)
        write_trajectories_csv(res.plans, sc, out / "trajectories.csv")
        write_report_csv(res.report, out / "report.csv")
    print(json.dumps(_summary(res.report), indent=2))


def _cmd_compare(args):
    if args.seeds < 1:
        raise ValueError("--seeds must be >= 1")
    seeds = range(args.seed, args.seed + args.seeds)
    strategies = tuple(args.strategy) if args.strategy else STRATEGIES
    solver = _solver(args)
    if args.scenario:
        reports = compare_strategies(load_scenario(args.scenario), seeds, strategies, solver, args.phi, args.lam, args.jobs)
    else:
        reports = sweep(seeds, args.points, args.uavs, strategies, solver, args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_comparison_csv(reports, out / "comparison.csv")
    agg = aggregate(reports)
    _write_rows(out / "summary.csv", ("strategy", "runs", "E_total", "T_avg", "minmax_gap"),
                [(st, v["runs"], repr(v["E_total"]), repr(v["T_avg"]), repr(v["minmax_gap"])) for st, v in agg.items()])
    print(json.dumps(agg, indent=2))


def _cmd_render(args):
    sc = load_scenario(args.scenario)
    out = Path(args.out)
    for p in render_svgs(out / "trajectories.csv", sc, out):
        print(p)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "gen":
            _cmd_gen(args)
        elif args.command == "assign":
            _cmd_assign(args)
        elif args.command == "route":
            _cmd_route(args)
        elif args.command in ("plan", "run"):
            _cmd_plan(args, render=args.command == "run")
        elif args.command == "compare":
            _cmd_compare(args)
        elif args.command == "render":
            _cmd_render(args)
    except (SegmentInfeasible, CapacityError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
