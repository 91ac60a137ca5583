"""World model for multi-UAV patrol planning.

A :class:`Scenario` bundles cruise points, ground base stations, the UAV
model, link parameters and planner weights. Scenarios are immutable and are
stored on disk as a canonical JSON document (see :func:`save_scenario`).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

__all__ = [
    "Point2",
    "CruisePoint",
    "GroundStation",
    "RotorParams",
    "UavModel",
    "ChannelParams",
    "Weights",
    "Scenario",
    "ScenarioError",
    "db_to_linear",
    "dbm_to_watts",
    "default_uav",
    "default_channel",
    "default_weights",
    "load_scenario",
    "save_scenario",
    "scenario_to_dict",
    "scenario_from_dict",
    "generate_scenario",
    "hex_lattice",
]


class ScenarioError(ValueError):
    """Raised when a scenario file cannot be parsed or violates an invariant."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ScenarioError(f"non-finite coordinate ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class CruisePoint:
    id: int
    position: Point2
    data_bits: float


@dataclass(frozen=True)
class GroundStation:
    id: int
    position: Point2
    height: float
    max_cpu_hz: float


@dataclass(frozen=True)
class RotorParams:
    """Rotary-wing propulsion constants (blade profile, induced, parasite)."""

    p0: float = 79.8
    pi: float = 88.6
    v0: float = 4.0
    d0: float = 0.6
    rho: float = 1.2
    s: float = 0.05
    disc_area: float = 0.5
    u_tip: float = 120.0


@dataclass(frozen=True)
class UavModel:
    altitude: float = 25.0
    v_max: float = 30.0
    tx_power: float = 0.1
    max_cpu_hz: float = 0.8e9
    cap_coeff: float = 1e-27
    rotor: RotorParams = field(default_factory=RotorParams)


@dataclass(frozen=True)
class ChannelParams:
    bandwidth_hz: float = 1e6
    beta0: float = 1e-5
    noise_w: float = 1e-13
    snr_gap: float = 1.26
    alpha: float = 2.7
    chi1: float = -1.5
    chi2: float = 0.15
    chi3: float = 0.2
    chi4: float = 0.8
    cycles_per_bit: float = 1000.0

    @property
    def gamma_hat(self) -> float:
        """Reference SNR at 1 m for unit transmit power."""
        return self.beta0 / (self.noise_w * self.snr_gap)


@dataclass(frozen=True)
class Weights:
    u: float = 1.0
    psi: float = 1.0
    v: float = 1.0
    w: float = 1.0
    m: float = 1.0
    n: float = 1.0
    phi: float = 0.0
    lam: float = 0.0
    neighbor_d: float = 250.0


@dataclass(frozen=True)
class Scenario:
    cruise_points: tuple[CruisePoint, ...]
    stations: tuple[GroundStation, ...]
    uav: UavModel
    channel: ChannelParams
    n_uavs: int
    start: Point2
    finish: Point2
    c_max: int
    weights: Weights

    def __post_init__(self):
        object.__setattr__(self, "cruise_points", tuple(self.cruise_points))
        object.__setattr__(self, "stations", tuple(self.stations))
        validate_scenario(self)

    @property
    def k(self) -> int:
        return len(self.cruise_points)

    def point_xy(self) -> np.ndarray:
        """(K, 2) array of cruise point coordinates."""
        return np.array([[p.position.x, p.position.y] for p in self.cruise_points], dtype=float).reshape(-1, 2)

    def station_xy(self) -> np.ndarray:
        return np.array([[g.position.x, g.position.y] for g in self.stations], dtype=float).reshape(-1, 2)

    def data_bits(self) -> np.ndarray:
        return np.array([p.data_bits for p in self.cruise_points], dtype=float)

    def station_dh(self) -> np.ndarray:
        """Vertical UAV-station separation per station, as a magnitude."""
        return np.array([abs(self.uav.altitude - g.height) for g in self.stations], dtype=float)

    def station_fmax(self) -> np.ndarray:
        return np.array([g.max_cpu_hz for g in self.stations], dtype=float)

    def with_weights(self, **kw) -> "Scenario":
        return replace(self, weights=replace(self.weights, **kw))


def _require(cond: bool, msg: str):
    if not cond:
        raise ScenarioError(msg)


def validate_scenario(s: Scenario) -> None:
    """Check every scenario invariant, raising :class:`ScenarioError` naming the first failure."""
    _require(len(s.cruise_points) >= 1, "K >= 1 violated: no cruise points")
    _require(len(s.stations) >= 1, "M >= 1 violated: no ground stations")
    ids = [p.id for p in s.cruise_points]
    _require(sorted(ids) == list(range(1, len(ids) + 1)), "cruise point ids must be dense 1..K")
    for p in s.cruise_points:
        _require(math.isfinite(p.data_bits) and p.data_bits >= 0, f"cruise point {p.id}: data_bits must be finite and >= 0")
    seen = set()
    for g in s.stations:
        _require(g.height > 0, f"station {g.id}: height > 0 violated")
        _require(g.max_cpu_hz > 0, f"station {g.id}: max_cpu_hz > 0 violated")
        key = (g.position.x, g.position.y)
        _require(key not in seen, f"station {g.id}: station positions must be distinct")
        seen.add(key)
    u = s.uav
    for name in ("altitude", "v_max", "tx_power", "max_cpu_hz", "cap_coeff"):
        _require(getattr(u, name) > 0, f"uav.{name} > 0 violated")
    for f in fields(RotorParams):
        _require(getattr(u.rotor, f.name) > 0, f"uav.rotor.{f.name} > 0 violated")
    ch = s.channel
    _require(ch.chi1 < 0, "chi1 < 0 violated")
    _require(ch.chi2 > 0, "chi2 > 0 violated")
    _require(ch.chi4 > 0, "chi4 > 0 violated")
    _require(ch.chi3 + ch.chi4 == 1.0, "chi3+chi4 != 1")
    _require(ch.snr_gap >= 1, "snr_gap >= 1 violated")
    _require(ch.alpha >= 2, "alpha >= 2 violated")
    for name in ("bandwidth_hz", "beta0", "noise_w", "cycles_per_bit"):
        _require(getattr(ch, name) > 0, f"channel.{name} > 0 violated")
    for f in fields(Weights):
        _require(getattr(s.weights, f.name) >= 0, f"weights.{f.name} >= 0 violated")
    _require(isinstance(s.n_uavs, int) and s.n_uavs >= 1, "n_uavs >= 1 violated")
    _require(isinstance(s.c_max, int) and s.c_max >= 1, "c_max >= 1 violated")
    _require(s.n_uavs * s.c_max >= len(s.cruise_points), "n_uavs * c_max >= K violated (infeasible capacity)")


def default_uav() -> UavModel:
    return UavModel()


def default_channel() -> ChannelParams:
    # -50 dB reference gain, -100 dBm noise
    return ChannelParams(beta0=db_to_linear(-50.0), noise_w=dbm_to_watts(-100.0))


def default_weights(**kw) -> Weights:
    return Weights(**kw)


# ---------------------------------------------------------------- file format

_TOP_KEYS = {"cruise_points", "stations", "uav", "channel", "weights", "mission"}
_POINT_KEYS = {"id", "x_m", "y_m", "q_bits"}
_STATION_KEYS = {"id", "x_m", "y_m", "h_m", "f_max_hz"}
_UAV_KEYS = {"altitude_m", "v_max_mps", "tx_power_w", "f_max_hz", "cap_coeff", "rotor"}
_ROTOR_KEYS = {"p0_w", "pi_w", "v0_mps", "d0", "rho_kgm3", "s", "disc_area_m2", "u_tip_mps"}
_CHANNEL_KEYS = {"bandwidth_hz", "beta0", "noise_w", "snr_gap", "alpha", "chi1", "chi2", "chi3", "chi4", "cycles_per_bit"}
_WEIGHT_KEYS = {"u", "psi", "v", "w", "m", "n", "phi", "lambda", "neighbor_d_m"}
_MISSION_KEYS = {"n_uavs", "start_xy", "finish_xy", "c_max"}


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    r = s.uav.rotor
    ch = s.channel
    w = s.weights
    return {
        "cruise_points": [
            {"id": p.id, "x_m": p.position.x, "y_m": p.position.y, "q_bits": p.data_bits} for p in s.cruise_points
        ],
        "stations": [
            {"id": g.id, "x_m": g.position.x, "y_m": g.position.y, "h_m": g.height, "f_max_hz": g.max_cpu_hz}
            for g in s.stations
        ],
        "uav": {
            "altitude_m": s.uav.altitude,
            "v_max_mps": s.uav.v_max,
            "tx_power_w": s.uav.tx_power,
            "f_max_hz": s.uav.max_cpu_hz,
            "cap_coeff": s.uav.cap_coeff,
            "rotor": {
                "p0_w": r.p0,
                "pi_w": r.pi,
                "v0_mps": r.v0,
                "d0": r.d0,
                "rho_kgm3": r.rho,
                "s": r.s,
                "disc_area_m2": r.disc_area,
                "u_tip_mps": r.u_tip,
            },
        },
        "channel": {
            "bandwidth_hz": ch.bandwidth_hz,
            "beta0": ch.beta0,
            "noise_w": ch.noise_w,
            "snr_gap": ch.snr_gap,
            "alpha": ch.alpha,
            "chi1": ch.chi1,
            "chi2": ch.chi2,
            "chi3": ch.chi3,
            "chi4": ch.chi4,
            "cycles_per_bit": ch.cycles_per_bit,
        },
        "weights": {
            "u": w.u,
            "psi": w.psi,
            "v": w.v,
            "w": w.w,
            "m": w.m,
            "n": w.n,
            "phi": w.phi,
            "lambda": w.lam,
            "neighbor_d_m": w.neighbor_d,
        },
        "mission": {
            "n_uavs": s.n_uavs,
            "start_xy": [s.start.x, s.start.y],
            "finish_xy": [s.finish.x, s.finish.y],
            "c_max": s.c_max,
        },
    }


def _check_keys(obj: Any, expected: set[str], where: str) -> dict:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    unknown = set(obj) - expected
    if unknown:
        raise ScenarioError(f"{where}: unknown key(s) {sorted(unknown)}")
    missing = expected - set(obj)
    if missing:
        raise ScenarioError(f"{where}: missing key(s) {sorted(missing)}")
    return obj


def _num(obj: dict, key: str, where: str) -> float:
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ScenarioError(f"{where}.{key}: expected a number, got {val!r}")
    return float(val)


def _int(obj: dict, key: str, where: str) -> int:
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise ScenarioError(f"{where}.{key}: expected an integer, got {val!r}")
    return val


def _xy(obj: dict, key: str, where: str) -> Point2:
    val = obj[key]
    if not (isinstance(val, list) and len(val) == 2):
        raise ScenarioError(f"{where}.{key}: expected [x, y]")
    return Point2(*(float(_num({"v": v}, "v", f"{where}.{key}")) for v in val))


def scenario_from_dict(doc: Any) -> Scenario:
    _check_keys(doc, _TOP_KEYS, "scenario")
    if not isinstance(doc["cruise_points"], list) or not isinstance(doc["stations"], list):
        raise ScenarioError("cruise_points/stations: expected arrays")
    points = []
    for i, p in enumerate(doc["cruise_points"]):
        where = f"cruise_points[{i}]"
        _check_keys(p, _POINT_KEYS, where)
        points.append(CruisePoint(_int(p, "id", where), Point2(_num(p, "x_m", where), _num(p, "y_m", where)), _num(p, "q_bits", where)))
    stations = []
    for i, g in enumerate(doc["stations"]):
        where = f"stations[{i}]"
        _check_keys(g, _STATION_KEYS, where)
        stations.append(
            GroundStation(
                _int(g, "id", where),
                Point2(_num(g, "x_m", where), _num(g, "y_m", where)),
                _num(g, "h_m", where),
                _num(g, "f_max_hz", where),
            )
        )
    u = _check_keys(doc["uav"], _UAV_KEYS, "uav")
    r = _check_keys(u["rotor"], _ROTOR_KEYS, "uav.rotor")
    rotor = RotorParams(
        p0=_num(r, "p0_w", "uav.rotor"),
        pi=_num(r, "pi_w", "uav.rotor"),
        v0=_num(r, "v0_mps", "uav.rotor"),
        d0=_num(r, "d0", "uav.rotor"),
        rho=_num(r, "rho_kgm3", "uav.rotor"),
        s=_num(r, "s", "uav.rotor"),
        disc_area=_num(r, "disc_area_m2", "uav.rotor"),
        u_tip=_num(r, "u_tip_mps", "uav.rotor"),
    )
    uav = UavModel(
        altitude=_num(u, "altitude_m", "uav"),
        v_max=_num(u, "v_max_mps", "uav"),
        tx_power=_num(u, "tx_power_w", "uav"),
        max_cpu_hz=_num(u, "f_max_hz", "uav"),
        cap_coeff=_num(u, "cap_coeff", "uav"),
        rotor=rotor,
    )
    c = _check_keys(doc["channel"], _CHANNEL_KEYS, "channel")
    channel = ChannelParams(**{k: _num(c, k, "channel") for k in sorted(_CHANNEL_KEYS)})
    w = _check_keys(doc["weights"], _WEIGHT_KEYS, "weights")
    weights = Weights(
        u=_num(w, "u", "weights"),
        psi=_num(w, "psi", "weights"),
        v=_num(w, "v", "weights"),
        w=_num(w, "w", "weights"),
        m=_num(w, "m", "weights"),
        n=_num(w, "n", "weights"),
        phi=_num(w, "phi", "weights"),
        lam=_num(w, "lambda", "weights"),
        neighbor_d=_num(w, "neighbor_d_m", "weights"),
    )
    m = _check_keys(doc["mission"], _MISSION_KEYS, "mission")
    return Scenario(
        cruise_points=tuple(points),
        stations=tuple(stations),
        uav=uav,
        channel=channel,
        n_uavs=_int(m, "n_uavs", "mission"),
        start=_xy(m, "start_xy", "mission"),
        finish=_xy(m, "finish_xy", "mission"),
        c_max=_int(m, "c_max", "mission"),
        weights=weights,
    )


def dumps_scenario(s: Scenario) -> str:
    """Canonical serialization: sorted keys, two-space indent, trailing newline."""
    return json.dumps(scenario_to_dict(s), indent=2, sort_keys=True) + "\n"


def save_scenario(s: Scenario, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(dumps_scenario(s), encoding="utf-8")
    return path


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario file.

    Raises :class:`ScenarioError` with the line/column of a syntax error, the
    offending field for schema errors, or the name of a violated invariant.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(doc)


# ------------------------------------------------------------------ generator


def hex_lattice(extent: float, pitch: float) -> np.ndarray:
    """Honeycomb (triangular-lattice) station sites inside ``[0, extent]^2``.

    The lattice is anchored at the centre of the square so coverage is symmetric.
    """
    row_h = pitch * math.sqrt(3.0) / 2.0
    c = extent / 2.0
    n_r = int(math.ceil(c / row_h)) + 1
    n_c = int(math.ceil(c / pitch)) + 1
    eps = 1e-9 * extent
    sites = []
    for r in range(-n_r, n_r + 1):
        off = 0.5 * pitch if r % 2 else 0.0
        for q in range(-n_c, n_c + 1):
            x, y = c + q * pitch + off, c + r * row_h
            if -eps <= x <= extent + eps and -eps <= y <= extent + eps:
                sites.append((x, y))
    sites.sort(key=lambda t: (t[1], t[0]))
    return np.array(sites, dtype=float)


def generate_scenario(
    seed: int,
    k: int = 20,
    n_uavs: int = 2,
    extent: float = 1000.0,
    q_range: tuple[float, float] = (50e6, 500e6),
    *,
    pitch: float | None = None,
    c_max: int | None = None,
    station_height: float = 100.0,
    station_cpu_hz: float = 8e9,
    uav: UavModel | None = None,
    channel: ChannelParams | None = None,
    weights: Weights | None = None,
) -> Scenario:
    """Random patrol layout: uniform cruise points over a square, stations on a honeycomb.

    Start and finish coincide, a quarter pitch beside the station closest to
    the middle of the southern edge.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if n_uavs < 1:
        raise ValueError("n_uavs must be >= 1")
    if not extent > 0:
        raise ValueError("extent must be > 0")
    q_lo, q_hi = float(q_range[0]), float(q_range[1])
    if q_lo > q_hi or q_lo < 0:
        raise ValueError("q_range must satisfy 0 <= min <= max")
    pitch = extent / 2.0 if pitch is None else float(pitch)
    rng = np.random.default_rng(seed)
    xy = rng.uniform(0.0, extent, size=(k, 2))
    q = rng.uniform(q_lo, q_hi, size=k) if q_hi > q_lo else np.full(k, q_lo)
    sites = hex_lattice(extent, pitch)
    stations = tuple(
        GroundStation(m + 1, Point2(float(x), float(y)), station_height, station_cpu_hz) for m, (x, y) in enumerate(sites)
    )
    anchor = sites[np.argmin(np.hypot(sites[:, 0] - extent / 2.0, sites[:, 1]))]
    depot = Point2(float(anchor[0] + pitch / 4.0), float(anchor[1]))
    if c_max is None:
        c_max = int(math.ceil(1.2 * k / n_uavs))
    return Scenario(
        cruise_points=tuple(
            CruisePoint(i + 1, Point2(float(xy[i, 0]), float(xy[i, 1])), float(q[i])) for i in range(k)
        ),
        stations=stations,
        uav=uav or default_uav(),
        channel=channel or default_channel(),
        n_uavs=n_uavs,
        start=depot,
        finish=depot,
        c_max=int(c_max),
        weights=weights or default_weights(neighbor_d=extent / 4.0),
    )
