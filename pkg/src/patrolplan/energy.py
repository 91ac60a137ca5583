"""Propulsion, computation and transmission energy of a single UAV."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .scenario import RotorParams

__all__ = [
    "EnergyBreakdown",
    "flight_power_w",
    "parasite_coeff",
    "max_range_speed",
    "min_power_speed",
    "slot_speeds",
    "segment_energy",
]


@dataclass(frozen=True)
class EnergyBreakdown:
    flight_j: float
    compute_j: float
    transmit_j: float

    @property
    def total_j(self) -> float:
        return self.flight_j + self.compute_j + self.transmit_j

    def __add__(self, other: "EnergyBreakdown") -> "EnergyBreakdown":
        return EnergyBreakdown(
            self.flight_j + other.flight_j,
            self.compute_j + other.compute_j,
            self.transmit_j + other.transmit_j,
        )

    @classmethod
    def zero(cls) -> "EnergyBreakdown":
        return cls(0.0, 0.0, 0.0)


def parasite_coeff(rotor: RotorParams) -> float:
    return 0.5 * rotor.d0 * rotor.rho * rotor.s * rotor.disc_area


def flight_power_w(speed, rotor: RotorParams):
    """Rotary-wing propulsion power at horizontal ``speed`` (m/s).

    Sum of blade-profile, induced and parasite power. Accepts scalars or arrays.
    """
    v = np.asarray(speed, dtype=float)
    v2 = v * v
    blade = rotor.p0 * (1.0 + 3.0 * v2 / rotor.u_tip**2)
    # written as 1/sqrt(sqrt(1+x^2)+x) to stay accurate at high speed
    x = v2 / (2.0 * rotor.v0**2)
    induced = rotor.pi / np.sqrt(np.sqrt(1.0 + x * x) + x)
    parasite = parasite_coeff(rotor) * v2 * v
    p = blade + induced + parasite
    return float(p) if np.ndim(p) == 0 else p


@lru_cache(maxsize=64)
def _argmin_speed(rotor: RotorParams, v_max: float, per_meter: bool) -> float:
    def cost(v):
        return flight_power_w(v, rotor) / v if per_meter else flight_power_w(v, rotor)

    lo = 0.01 if per_meter else 0.0
    res = minimize_scalar(cost, bounds=(lo, v_max), method="bounded", options={"xatol": 1e-7})
    v = float(res.x)
    # bounded Brent can stall on a flat edge; fall back to a coarse scan
    grid = np.linspace(max(lo, 1e-3), v_max, 2001)
    g = grid[np.argmin(cost(grid))]
    if cost(g) < cost(v) - 1e-12:
        res = minimize_scalar(
            cost, bounds=(max(lo, g - (grid[1] - grid[0])), min(v_max, g + (grid[1] - grid[0]))), method="bounded"
        )
        v = float(res.x)
    return v


def max_range_speed(rotor: RotorParams, v_max: float = 30.0) -> float:
    """Speed in ``(0, v_max]`` minimising propulsion energy per metre."""
    return _argmin_speed(rotor, float(v_max), True)


def min_power_speed(rotor: RotorParams, v_max: float = 30.0) -> float:
    """Speed minimising propulsion power (endurance speed)."""
    return _argmin_speed(rotor, float(v_max), False)


def slot_speeds(waypoints, slot_s) -> np.ndarray:
    """Piecewise-constant speed per slot from consecutive waypoints."""
    w = np.asarray(waypoints, dtype=float)
    step = np.hypot(*np.diff(w, axis=0).T)
    return step / np.asarray(slot_s, dtype=float)


def segment_energy(plan, scenario) -> EnergyBreakdown:
    """Energy of one discretised segment plan.

    ``plan`` needs ``waypoints`` (L+1, 2), ``slot_s`` (L,), ``tau`` (L, M)
    and ``f_uav`` (L,).
    """
    uav = scenario.uav
    delta = np.asarray(plan.slot_s, dtype=float)
    if delta.size == 0:
        return EnergyBreakdown.zero()
    v = slot_speeds(plan.waypoints, delta)
    flight = float(np.sum(flight_power_w(v, uav.rotor) * delta))
    f = np.asarray(plan.f_uav, dtype=float)
    compute = float(np.sum(uav.cap_coeff * f**3 * delta))
    tau = np.asarray(plan.tau, dtype=float)
    transmit = float(np.sum(tau.sum(axis=1) * uav.tx_power * delta))
    return EnergyBreakdown(flight, compute, transmit)
