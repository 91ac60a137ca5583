"""UAV to ground-station link geometry and achievable rate.

The scalar functions mirror the vectorised ``*_array`` helpers that the
planners use on whole trajectories. Vertical separation is always taken as
``|H_U - H_G|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .scenario import ChannelParams, GroundStation, Point2, UavModel

__all__ = [
    "LinkSample",
    "vertical_gap",
    "link_distance",
    "elevation_deg",
    "sigmoid_factor",
    "rate_bps",
    "rate_matrix",
    "best_rate",
    "link_sample",
    "causality_ok",
]


@dataclass(frozen=True)
class LinkSample:
    station_id: int
    distance: float
    elevation_deg: float
    rate_bps: float


def vertical_gap(gbs: GroundStation, uav: UavModel) -> float:
    return abs(uav.altitude - gbs.height)


def link_distance(uav_pos: Point2, gbs: GroundStation, uav: UavModel) -> float:
    dh = vertical_gap(gbs, uav)
    return math.sqrt(dh * dh + (uav_pos.x - gbs.position.x) ** 2 + (uav_pos.y - gbs.position.y) ** 2)


def elevation_deg(uav_pos: Point2, gbs: GroundStation, uav: UavModel) -> float:
    horiz = math.hypot(uav_pos.x - gbs.position.x, uav_pos.y - gbs.position.y)
    if horiz == 0.0:
        return 90.0
    return math.degrees(math.atan(vertical_gap(gbs, uav) / horiz))


def sigmoid_factor(theta_deg, ch: ChannelParams):
    """Elevation-dependent line-of-sight weighting in ``[chi3, 1)``."""
    return ch.chi3 + ch.chi4 * expit(ch.chi1 + ch.chi2 * np.asarray(theta_deg, dtype=float))


def _rate(d, theta, tx_power, ch: ChannelParams):
    snr = ch.gamma_hat * tx_power / np.power(d, ch.alpha)
    return sigmoid_factor(theta, ch) * ch.bandwidth_hz * np.log2(1.0 + snr)


def rate_bps(uav_pos: Point2, gbs: GroundStation, uav: UavModel, ch: ChannelParams) -> float:
    d = link_distance(uav_pos, gbs, uav)
    theta = elevation_deg(uav_pos, gbs, uav)
    return float(_rate(d, theta, uav.tx_power, ch))


def link_sample(uav_pos: Point2, gbs: GroundStation, uav: UavModel, ch: ChannelParams) -> LinkSample:
    return LinkSample(
        gbs.id,
        link_distance(uav_pos, gbs, uav),
        elevation_deg(uav_pos, gbs, uav),
        rate_bps(uav_pos, gbs, uav, ch),
    )


def rate_matrix(xy, station_xy, dh, tx_power: float, ch: ChannelParams) -> np.ndarray:
    """Rates (bits/s) for every position in ``xy`` (n, 2) against every station.

    ``dh`` holds the vertical separation per station. Returns shape (n, M).
    """
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    diff = xy[:, None, :] - np.asarray(station_xy, dtype=float)[None, :, :]
    horiz = np.hypot(diff[..., 0], diff[..., 1])
    dh = np.broadcast_to(np.asarray(dh, dtype=float), horiz.shape)
    d = np.sqrt(dh * dh + horiz * horiz)
    with np.errstate(divide="ignore"):
        theta = np.where(horiz > 0.0, np.degrees(np.arctan(dh / np.where(horiz > 0.0, horiz, 1.0))), 90.0)
    return _rate(d, theta, tx_power, ch)


def best_rate(xy, scenario) -> tuple[np.ndarray, np.ndarray]:
    """Best-station rate and the index of that station for each position."""
    r = rate_matrix(xy, scenario.station_xy(), scenario.station_dh(), scenario.uav.tx_power, scenario.channel)
    idx = np.argmax(r, axis=1)
    return r[np.arange(r.shape[0]), idx], idx


def causality_ok(offloaded_prefix, processed_prefix, rtol: float = 1e-6) -> bool:
    """Data causality: a station never processes more than it has received.

    Both arguments are cumulative sums with shape (slots, M) over the same grid.
    """
    off = np.asarray(offloaded_prefix, dtype=float)
    proc = np.asarray(processed_prefix, dtype=float)
    if off.shape != proc.shape:
        raise ValueError(f"mismatched grids: offloaded {off.shape} vs processed {proc.shape}")
    if off.size == 0:
        return True
    scale = np.maximum(np.abs(off), np.max(np.abs(off), axis=0, keepdims=True))
    return bool(np.all(proc <= off + rtol * scale + 1e-12))
