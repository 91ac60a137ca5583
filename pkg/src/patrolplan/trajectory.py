"""Per-segment trajectory, offload schedule and CPU frequency optimisation.

A segment joins two consecutive cruise points. The plan discretises it into
``L`` slots of variable duration; within a slot the UAV flies in a straight
line at constant speed, time-shares its uplink among stations (``tau`` rows
sum to at most one) and runs its CPU at ``f_uav``. Stations process what
they receive, never ahead of it.

:func:`optimize_segment` runs block coordinate descent over three blocks:
schedule, frequencies and a successive-convex trajectory step. Every block
is accepted only if the true segment energy does not increase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _sca
from .channel import rate_matrix, sigmoid_factor
from .energy import EnergyBreakdown, max_range_speed, segment_energy, slot_speeds
from .scenario import Point2, Scenario

__all__ = [
    "SegmentPlan",
    "MissionPlan",
    "SolverConfig",
    "SegmentInfeasible",
    "NeedsLongerDuration",
    "slot_rates",
    "waterfill_processing",
    "plan_residuals",
    "init_segment",
    "optimize_schedule",
    "optimize_frequencies",
    "optimize_trajectory_sca",
    "optimize_segment",
    "plan_mission",
]


class SegmentInfeasible(RuntimeError):
    """The data demand of a segment cannot be met even after stretching its duration."""


class NeedsLongerDuration(RuntimeError):
    """Local CPU would need more than its maximum frequency at the current duration."""

    def __init__(self, shortfall_bits: float):
        super().__init__(f"residual {shortfall_bits:.6g} bits exceed local capacity")
        self.shortfall_bits = shortfall_bits


@dataclass(frozen=True)
class SolverConfig:
    n_slots: int = 40
    bcd_tol: float = 1e-3
    bcd_max_iter: int = 50
    trust_radius_init: float | None = None
    min_trust_radius: float = 0.1
    inflate_factor: float = 1.5
    inflate_retries: int = 12


@dataclass(frozen=True)
class SegmentPlan:
    waypoints: np.ndarray  # (L+1, 2)
    slot_s: np.ndarray  # (L,)
    tau: np.ndarray  # (L, M)
    f_uav: np.ndarray  # (L,)
    f_gbs: np.ndarray  # (L, M)
    q_target: float
    trace: tuple[float, ...] = field(default=(), compare=False)

    @property
    def n_slots(self) -> int:
        return int(self.slot_s.shape[0])

    @property
    def duration(self) -> float:
        return float(np.sum(self.slot_s))

    def midpoints(self) -> np.ndarray:
        w = self.waypoints
        return 0.5 * (w[1:] + w[:-1])

    def speeds(self) -> np.ndarray:
        return slot_speeds(self.waypoints, self.slot_s)


@dataclass(frozen=True)
class MissionPlan:
    uav_id: int
    segments: tuple[SegmentPlan, ...]
    energy: EnergyBreakdown

    @property
    def t_complete(self) -> float:
        return float(sum(seg.duration for seg in self.segments))


# ------------------------------------------------------------------ helpers


def slot_rates(waypoints, scenario: Scenario) -> np.ndarray:
    """True rates (L, M) at slot midpoints."""
    w = np.asarray(waypoints, dtype=float)
    mid = 0.5 * (w[1:] + w[:-1])
    return rate_matrix(mid, scenario.station_xy(), scenario.station_dh(), scenario.uav.tx_power, scenario.channel)


def waterfill_processing(offloaded, slot_s, f_max, cycles_per_bit: float, budget: float = math.inf) -> np.ndarray:
    """Bits each station processes per slot, working forward through its backlog.

    Processing is capped by station CPU and by ``budget`` bits overall.
    """
    off = np.asarray(offloaded, dtype=float)
    delta = np.asarray(slot_s, dtype=float)
    cap = delta[:, None] * np.asarray(f_max, dtype=float)[None, :] / cycles_per_bit
    proc = np.zeros_like(off)
    backlog = np.zeros(off.shape[1])
    left = budget
    for l in range(off.shape[0]):
        avail = backlog + off[l]
        take = np.minimum(avail, cap[l])
        tot = take.sum()
        if tot > left:
            take *= left / tot if tot > 0 else 0.0
            tot = left
        proc[l] = take
        backlog = avail - take
        left -= tot
    return proc


def plan_residuals(plan: SegmentPlan, scenario: Scenario) -> dict[str, float]:
    """Constraint residuals (positive = violation), each relative where meaningful."""
    ch = scenario.channel
    delta = plan.slot_s
    speed_excess = float(np.max(plan.speeds() - scenario.uav.v_max, initial=0.0)) / scenario.uav.v_max
    processed = float(np.sum((plan.f_uav + plan.f_gbs.sum(axis=1)) * delta)) / ch.cycles_per_bit
    data_short = (plan.q_target - processed) / max(plan.q_target, 1.0)
    off = np.cumsum(plan.tau * slot_rates(plan.waypoints, scenario) * delta[:, None], axis=0)
    proc = np.cumsum(plan.f_gbs * delta[:, None], axis=0) / ch.cycles_per_bit
    scale = np.maximum(np.max(np.abs(off), initial=0.0), 1.0)
    causality = float(np.max(proc - off, initial=0.0)) / scale
    tau_rows = float(np.max(plan.tau.sum(axis=1) - 1.0, initial=0.0))
    f_excess = float(np.max(plan.f_uav - scenario.uav.max_cpu_hz, initial=0.0)) / scenario.uav.max_cpu_hz
    g_excess = float(np.max(plan.f_gbs - scenario.station_fmax()[None, :], initial=0.0)) / scenario.station_fmax().max()
    return {
        "speed": speed_excess,
        "data": data_short,
        "causality": causality,
        "tau_rows": tau_rows,
        "tau_bounds": float(max(-plan.tau.min(initial=0.0), 0.0)),
        "f_uav": f_excess,
        "f_gbs": g_excess,
        "slots": float(max(-plan.slot_s.min(initial=1.0), 0.0)),
    }


def _energy(plan, scenario) -> float:
    return segment_energy(plan, scenario).total_j


# ------------------------------------------------------------------- blocks


def optimize_frequencies(plan: SegmentPlan, scenario: Scenario) -> SegmentPlan:
    """Station and UAV CPU frequencies for a frozen trajectory and schedule.

    Stations water-fill their received data forward in time; the UAV covers
    the rest at one constant frequency, the cheapest profile by convexity of
    the cubic power law. Raises :class:`NeedsLongerDuration` when that
    frequency would exceed the UAV cap.
    """
    ch = scenario.channel
    delta = plan.slot_s
    off = plan.tau * slot_rates(plan.waypoints, scenario) * delta[:, None]
    proc = waterfill_processing(off, delta, scenario.station_fmax(), ch.cycles_per_bit, budget=plan.q_target)
    with np.errstate(divide="ignore", invalid="ignore"):
        f_gbs = np.where(delta[:, None] > 0, proc * ch.cycles_per_bit / delta[:, None], 0.0)
    residual = max(plan.q_target - float(proc.sum()), 0.0)
    total = float(delta.sum())
    if residual <= 1e-9 * max(plan.q_target, 1.0):
        f_uav = np.zeros_like(delta)
    else:
        if total <= 0:
            raise NeedsLongerDuration(residual)
        f = ch.cycles_per_bit * residual / total
        fmax = scenario.uav.max_cpu_hz
        if f > fmax * (1.0 + 1e-12):
            raise NeedsLongerDuration(residual - fmax * total / ch.cycles_per_bit)
        f_uav = np.full_like(delta, min(f, fmax))
    return replace(plan, f_uav=f_uav, f_gbs=f_gbs)


def _greedy_schedule(plan: SegmentPlan, scenario: Scenario) -> np.ndarray:
    ch = scenario.channel
    uav = scenario.uav
    delta = plan.slot_s
    rates = slot_rates(plan.waypoints, scenario)
    L, M = rates.shape
    best = np.argmax(rates, axis=1)
    rbest = rates[np.arange(L), best]
    fmax_g = scenario.station_fmax()[best]
    cap = delta * np.minimum(rbest, fmax_g / ch.cycles_per_bit)
    total = float(delta.sum())
    tau = np.zeros((L, M))
    residual = plan.q_target
    for l in np.argsort(-rbest, kind="stable"):
        if residual <= 0 or rbest[l] <= 0:
            break
        # local CPU level below which it is cheaper than transmitting in this slot
        f_star = min(math.sqrt(uav.tx_power / (3.0 * uav.cap_coeff * ch.cycles_per_bit * rbest[l])), uav.max_cpu_hz)
        keep_local = f_star * total / ch.cycles_per_bit
        x = min(cap[l], residual - keep_local)
        if x <= 0:
            continue
        tau[l, best[l]] = x / (rbest[l] * delta[l])
        residual -= x
    return np.clip(tau, 0.0, 1.0)


def optimize_schedule(plan: SegmentPlan, scenario: Scenario) -> SegmentPlan:
    """Time-sharing schedule for a frozen trajectory.

    Each slot serves only its strongest station. Slots are filled greedily
    from the highest rate while transmitting a bit (``P / R``) is cheaper
    than the marginal local cost ``3 * cap_coeff * f**2 * C_U`` at the
    residual-implied frequency. The result replaces the incumbent only if
    the segment energy does not increase.
    """
    tau = _greedy_schedule(plan, scenario)
    try:
        cand = optimize_frequencies(replace(plan, tau=tau), scenario)
    except NeedsLongerDuration:
        return plan
    try:
        inc = optimize_frequencies(plan, scenario)
        e_inc = _energy(inc, scenario)
    except NeedsLongerDuration:
        return cand
    return cand if _energy(cand, scenario) <= e_inc else inc


def _straight_plan(a: np.ndarray, b: np.ndarray, q_target: float, L: int, scenario: Scenario, slot: float) -> SegmentPlan:
    frac = np.linspace(0.0, 1.0, L + 1)[:, None]
    wp = a[None, :] + frac * (b - a)[None, :]
    M = len(scenario.stations)
    return SegmentPlan(
        waypoints=wp,
        slot_s=np.full(L, slot),
        tau=np.zeros((L, M)),
        f_uav=np.zeros(L),
        f_gbs=np.zeros((L, M)),
        q_target=float(q_target),
    )


def _schedule_and_frequencies(plan: SegmentPlan, scenario: Scenario) -> SegmentPlan:
    if plan.q_target <= 0:
        return optimize_frequencies(replace(plan, tau=np.zeros_like(plan.tau)), scenario)
    return optimize_frequencies(replace(plan, tau=_greedy_schedule(plan, scenario)), scenario)


def _duration_lower_bound(a: np.ndarray, b: np.ndarray, q_target: float, n_slots: int, scenario: Scenario) -> float:
    """Time below which no plan on the straight line can process ``q_target`` bits.

    Uses the local CPU cap plus the best offload capacity (rate, limited by
    the receiving station's CPU) anywhere on the line.
    """
    ch = scenario.channel
    plan = _straight_plan(a, b, q_target, max(n_slots, 64), scenario, 1.0)
    rates = slot_rates(plan.waypoints, scenario)
    cap = np.minimum(rates, scenario.station_fmax()[None, :] / ch.cycles_per_bit).max()
    return float(q_target / (scenario.uav.max_cpu_hz / ch.cycles_per_bit + cap))


def init_segment(frm: Point2, to: Point2, q_target: float, n_slots: int, scenario: Scenario, cfg: SolverConfig | None = None) -> SegmentPlan:
    """Straight-line initial plan at max-range speed, stretched until the data demand fits.

    If the demand does not fit at max-range speed the slot durations are
    inflated geometrically, starting from a capacity lower bound on the
    duration, and then tightened by bisection to the shortest feasible
    uniform duration.
    """
    if n_slots < 2:
        raise ValueError("n_slots must be >= 2")
    cfg = cfg or SolverConfig(n_slots=n_slots)
    a, b = np.array([frm.x, frm.y], float), np.array([to.x, to.y], float)
    dist = float(np.hypot(*(b - a)))
    v_mr = max_range_speed(scenario.uav.rotor, scenario.uav.v_max)
    base = dist / (n_slots * v_mr) if dist > 0 else 1.0

    def attempt(slot):
        return _schedule_and_frequencies(_straight_plan(a, b, q_target, n_slots, scenario, slot), scenario)

    try:
        return attempt(base)
    except NeedsLongerDuration:
        pass
    if dist == 0:
        # hovering always becomes feasible eventually; no inflation cap
        lo = hi = base
        for _ in range(200):
            hi *= 2.0
            try:
                attempt(hi)
                break
            except NeedsLongerDuration:
                lo = hi
    else:
        lo, hi = base, None
        # inflate from the shortest duration the processing capacity could possibly allow,
        # not from the flight time, which for a short leg carries no information
        slot = max(base, _duration_lower_bound(a, b, q_target, n_slots, scenario) / n_slots)
        if slot > base:
            slot /= cfg.inflate_factor
        for _ in range(cfg.inflate_retries):
            slot *= cfg.inflate_factor
            try:
                attempt(slot)
                hi = slot
                break
            except NeedsLongerDuration:
                lo = slot
        if hi is None:
            raise SegmentInfeasible(
                f"segment {frm} -> {to}: {q_target:.6g} bits unprocessable after "
                f"x{cfg.inflate_factor ** cfg.inflate_retries:.4g} duration inflation"
            )
    for _ in range(60):
        if hi - lo <= 1e-9 * hi:
            break
        midv = 0.5 * (lo + hi)
        try:
            attempt(midv)
            hi = midv
        except NeedsLongerDuration:
            lo = midv
    return attempt(hi)


# ---------------------------------------------------------- trajectory block


def _surrogate_values(plan: SegmentPlan, scenario: Scenario, radius: float) -> dict:
    uav, ch, rotor = scenario.uav, scenario.channel, scenario.uav.rotor
    ell = _sca.LENGTH_UNIT
    L = plan.n_slots
    X0 = plan.waypoints / ell
    delta0 = plan.slot_s
    D0 = np.diff(X0, axis=0)
    v = plan.speeds()
    x = v * v / (2.0 * rotor.v0**2)
    ytil0 = delta0 / np.sqrt(np.sqrt(1.0 + x * x) + x)
    kv = ell**2 / rotor.v0**2

    # station served in each slot: the scheduled one, or the strongest if idle
    rates = slot_rates(plan.waypoints, scenario)
    served = np.where(plan.tau.sum(axis=1) > 0, np.argmax(plan.tau, axis=1), np.argmax(rates, axis=1))
    sxy = scenario.station_xy()[served] / ell
    dh = scenario.station_dh()[served]
    mid = plan.midpoints()
    horiz2 = np.sum((mid - scenario.station_xy()[served]) ** 2, axis=1)
    z0 = dh**2 + horiz2
    horiz = np.sqrt(horiz2)
    theta = np.where(horiz > 0, np.degrees(np.arctan(dh / np.where(horiz > 0, horiz, 1.0))), 90.0)
    sig = sigmoid_factor(theta, ch)
    k = ch.alpha / 2.0
    c = ch.gamma_hat * uav.tx_power
    g0 = np.log2(1.0 + c * z0**-k)
    g1 = -k * c / (np.log(2.0) * (z0 ** (k + 1) + c * z0))
    scale = sig * ch.bandwidth_hz / 1e6
    rb = -scale * g1 * ell**2
    # d(sigmoid)/d(horizontal distance), per length unit
    u_arg = ch.chi1 + ch.chi2 * theta
    dsig_dtheta = ch.chi4 * ch.chi2 * np.exp(-u_arg) / (1.0 + np.exp(-u_arg)) ** 2
    dtheta_dh = -np.degrees(1.0) * dh / (dh**2 + horiz2)
    kh = np.minimum(dsig_dtheta * dtheta_dh * ell * g0 * ch.bandwidth_hz / 1e6, 0.0)
    const = scale * (g0 + g1 * (dh**2 - z0)) - kh * horiz / ell
    ra = const - rb * np.sum(sxy**2, axis=1)
    rg = 2.0 * rb[:, None] * sxy

    s0 = plan.tau[np.arange(L), served] * delta0
    beta0 = np.sqrt(np.maximum(s0 * rates[np.arange(L), served] / 1e6, 0.0))
    gcap = scenario.station_fmax()[served] / ch.cycles_per_bit / 1e6
    return {
        "start": X0[0],
        "end": X0[-1],
        "X0": X0,
        "radius": radius / ell,
        "k_p0": rotor.p0 / 1e3,
        "k_blade": 3.0 * rotor.p0 * ell**2 / rotor.u_tip**2 / 1e3,
        "k_pi": rotor.pi / 1e3,
        "k_par": 0.5 * rotor.d0 * rotor.rho * rotor.s * rotor.disc_area * ell**3 / 1e3,
        "k_cmp": uav.cap_coeff * 1e27 / 1e3,
        "k_tx": uav.tx_power / 1e3,
        "vmax": uav.v_max / ell,
        "fmax": uav.max_cpu_hz / 1e9,
        "k_local": 1e3 / ch.cycles_per_bit,
        "gcap": gcap,
        "ra": ra,
        "rb": rb,
        "rg": rg,
        "kh": kh,
        "sxy": sxy,
        "y2": 2.0 * ytil0,
        "dc": 2.0 * kv * D0,
        "hc": -(ytil0**2) - kv * np.sum(D0**2, axis=1),
        "b2": 2.0 * beta0,
        "qeff": plan.q_target / 1e6 + float(np.sum(beta0**2)),
    }, served


def _sca_candidate(plan: SegmentPlan, scenario: Scenario, radius: float) -> SegmentPlan | None:
    prob = _sca.get_problem(plan.n_slots)
    values, served = _surrogate_values(plan, scenario, radius)
    sol = prob.solve(**values)
    if sol is None:
        return None
    wp = sol["X"] * _sca.LENGTH_UNIT
    wp[0], wp[-1] = plan.waypoints[0], plan.waypoints[-1]
    delta = np.maximum(sol["delta"], _sca.MIN_SLOT_S)
    # the solver's speed constraint holds only to its tolerance
    step = np.hypot(*np.diff(wp, axis=0).T)
    delta = np.maximum(delta, step / scenario.uav.v_max)
    L = plan.n_slots
    tau = np.zeros_like(plan.tau)
    tau[np.arange(L), served] = np.clip(sol["s"] / delta, 0.0, 1.0)
    cand = replace(plan, waypoints=wp, slot_s=delta, tau=tau)
    # the surrogate often ends with the local CPU exactly at its cap; solver
    # tolerance then leaves a sliver of data unprocessed, which a marginally
    # longer duration absorbs
    fmax = scenario.uav.max_cpu_hz
    for _ in range(8):
        try:
            return optimize_frequencies(cand, scenario)
        except NeedsLongerDuration as exc:
            extra = exc.shortfall_bits * scenario.channel.cycles_per_bit / fmax
            if extra > 1e-3 * cand.duration:
                return None
            cand = replace(cand, slot_s=cand.slot_s * (1.0 + 1.01 * extra / cand.duration))
    return None


def optimize_trajectory_sca(plan: SegmentPlan, scenario: Scenario, trust_radius: float, min_radius: float = 0.1) -> SegmentPlan:
    """One guarded successive-convex step on waypoints, slot durations, uplink time and local cycles.

    The surrogate keeps the propulsion model exact except for the induced
    term (slack with a linearised lower bound). The rate is replaced by a
    lower bound in squared distance at the incumbent elevation factor, plus
    a concave first-order correction for how that factor falls off with
    horizontal distance.
    A step is kept only if the true energy drops; otherwise the trust radius
    is halved down to ``min_radius`` and the incumbent is returned.
    """
    new, _ = _sca_step(plan, scenario, trust_radius, min_radius)
    return new


def _sca_step(plan, scenario, radius, min_radius):
    e_inc = _energy(plan, scenario)
    while radius >= min_radius:
        cand = _sca_candidate(plan, scenario, radius)
        if cand is not None and _energy(cand, scenario) < e_inc * (1.0 - 1e-12):
            return cand, radius
        radius *= 0.5
    return plan, radius


# ------------------------------------------------------------------- drivers


def optimize_segment(frm: Point2, to: Point2, q_target: float, scenario: Scenario, cfg: SolverConfig | None = None) -> SegmentPlan:
    """Minimise the energy of one leg under its data demand.

    Cycles schedule, frequency and trajectory blocks until the relative
    energy decrease of a full sweep drops below ``cfg.bcd_tol``. The energy
    after every block is recorded in ``plan.trace``.
    """
    cfg = cfg or SolverConfig()
    plan = init_segment(frm, to, q_target, cfg.n_slots, scenario, cfg)
    trace = [_energy(plan, scenario)]
    if q_target <= 0:
        # straight flight at max-range speed is already optimal without data
        return replace(plan, trace=tuple(trace))
    length = float(np.hypot(to.x - frm.x, to.y - frm.y))
    r_init = cfg.trust_radius_init or max(length / 10.0, 10.0)
    radius = r_init
    for _ in range(cfg.bcd_max_iter):
        e_start = trace[-1]
        plan = optimize_schedule(plan, scenario)
        trace.append(_energy(plan, scenario))
        plan = optimize_frequencies(plan, scenario)
        trace.append(_energy(plan, scenario))
        new, used = _sca_step(plan, scenario, radius, cfg.min_trust_radius)
        moved = new is not plan
        plan = new
        trace.append(_energy(plan, scenario))
        radius = min(used * 1.5, r_init) if moved else max(used, cfg.min_trust_radius)
        if not moved or (e_start - trace[-1]) < cfg.bcd_tol * e_start:
            break
    return replace(plan, trace=tuple(trace))


def plan_mission(route, scenario: Scenario, cfg: SolverConfig | None = None, uav_id: int | None = None,
                 cache: dict | None = None) -> MissionPlan:
    """Plan every leg of a route: start, the visited points in order, finish.

    A leg leaving a cruise point carries that point's data demand; the leg
    leaving the start carries none. ``cache`` (a dict owned by the caller and
    tied to one scenario and config) memoises legs by endpoints and demand.
    """
    cfg = cfg or SolverConfig()
    pts = {p.id: p for p in scenario.cruise_points}
    stops = [(scenario.start, 0.0)] + [(pts[i].position, pts[i].data_bits) for i in route.order] + [(scenario.finish, None)]
    segments = []
    for (a, qa), (b, _) in zip(stops[:-1], stops[1:]):
        key = (a.x, a.y, b.x, b.y, float(qa))
        if cache is not None and key in cache:
            segments.append(cache[key])
            continue
        try:
            seg = optimize_segment(a, b, qa, scenario, cfg)
        except SegmentInfeasible as exc:
            raise SegmentInfeasible(f"uav {route.uav_id}: {exc}") from exc
        if cache is not None:
            cache[key] = seg
        segments.append(seg)
    energy = EnergyBreakdown.zero()
    for seg in segments:
        energy = energy + segment_energy(seg, scenario)
    return MissionPlan(route.uav_id if uav_id is None else uav_id, tuple(segments), energy)
