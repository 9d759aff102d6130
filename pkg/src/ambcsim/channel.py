"""Air-to-ground channel model with passive backscatter assistance.

Mean path loss follows the probabilistic LoS/NLoS urban model

    PL(d, theta) = FSPL(d, f) + P_LoS(theta) * eta_los
                   + (1 - P_LoS(theta)) * eta_nlos

with FSPL(d, f) = 20 log10(4 pi d f / c) and the logistic LoS probability
P_LoS(theta) = 1 / (1 + a exp(-b (theta_deg - a))).  The model is
deterministic: it evaluates the mean path loss, no fading is drawn.

A backscatter tag contributes the cascaded two-hop gain
beta * g(ue -> tag) * g(tag -> uav).  Only the best tag per UE is kept
and its gain is power-summed with the direct path (non-coherent
combining).
"""

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class Position:
    """Point in cell coordinates; z is height above ground in meters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError("position coordinates must be finite")
        if self.z < 0:
            raise ValueError("height z must be >= 0")


@dataclass(frozen=True)
class ChannelParams:
    """Propagation constants (urban defaults, all overridable)."""

    carrier_freq: float = 2e9      # Hz
    plos_a: float = 9.61           # LoS-probability logistic constants
    plos_b: float = 0.16
    eta_los: float = 1.0           # excess loss under LoS, dB
    eta_nlos: float = 20.0         # excess loss under NLoS, dB
    noise_psd: float = -174.0      # dBm/Hz
    reflection_coeff: float = 0.5  # tag power reflection fraction beta

    def __post_init__(self):
        if self.carrier_freq <= 0:
            raise ValueError("carrier_freq must be > 0")
        if not 0.0 <= self.reflection_coeff <= 1.0:
            raise ValueError("reflection_coeff must be in [0, 1]")
        if not self.eta_nlos >= self.eta_los >= 0.0:
            raise ValueError("require eta_nlos >= eta_los >= 0")


@dataclass
class ChannelState:
    """Per-UE linear power gains to the UAV for one deployment."""

    direct_gain: np.ndarray
    backscatter_gain: np.ndarray
    effective_gain: np.ndarray
    best_tag_index: List[Optional[int]]


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(lin):
    return 10.0 * np.log10(np.asarray(lin, dtype=float))


def elevation_angle(ue: Position, uav: Position) -> float:
    """Elevation of the UAV as seen from the UE, in radians.

    Returns arctan(height difference / horizontal distance), pi/2 when
    the UAV is directly overhead.
    """
    dx, dy = uav.x - ue.x, uav.y - ue.y
    dz = uav.z - ue.z
    horizontal = math.hypot(dx, dy)
    if horizontal == 0.0 and dz == 0.0:
        raise ValueError("UE and UAV positions coincide")
    if dz <= 0.0:
        raise ValueError("UAV must be above the UE")
    return math.atan2(dz, horizontal)


def a2g_path_loss(distance, angle, params: ChannelParams):
    """Mean air-to-ground path loss in dB; accepts scalars or arrays."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0.0):
        raise ValueError("distance must be > 0")
    theta_deg = np.degrees(np.asarray(angle, dtype=float))
    a, b = params.plos_a, params.plos_b
    p_los = 1.0 / (1.0 + a * np.exp(-b * (theta_deg - a)))
    fspl = 20.0 * np.log10(4.0 * np.pi * d * params.carrier_freq / SPEED_OF_LIGHT)
    loss = fspl + p_los * params.eta_los + (1.0 - p_los) * params.eta_nlos
    return float(loss) if np.isscalar(distance) else loss


def _hop_geometry(p: Position, q: Position):
    """(distance, elevation-style angle) of the p -> q hop."""
    horizontal = math.hypot(q.x - p.x, q.y - p.y)
    dz = abs(q.z - p.z)
    return math.hypot(horizontal, dz), math.atan2(dz, horizontal)


def cascaded_backscatter_gain(ue: Position, tag: Position, uav: Position,
                              params: ChannelParams) -> float:
    """Linear power gain of the UE -> tag -> UAV reflection path."""
    d1, a1 = _hop_geometry(ue, tag)
    d2, a2 = _hop_geometry(tag, uav)
    if d1 == 0.0 or d2 == 0.0:
        raise ValueError("tag must be distinct from UE and UAV")
    g1 = 10.0 ** (-a2g_path_loss(d1, a1, params) / 10.0)
    g2 = 10.0 ** (-a2g_path_loss(d2, a2, params) / 10.0)
    return params.reflection_coeff * g1 * g2


def noise_power(bandwidth: float, noise_psd: float) -> float:
    """Thermal noise floor in watts over the given bandwidth (Hz)."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be > 0")
    return 10.0 ** ((noise_psd + 10.0 * math.log10(bandwidth) - 30.0) / 10.0)


def effective_gains(deployment, params: ChannelParams,
                    ambc_enabled: bool = True) -> ChannelState:
    """Per-UE direct, backscatter, and combined gains for one deployment.

    The backscatter term is the best-tag cascaded gain; tag-index ties
    break toward the lowest index.  With backscatter disabled (or no
    tags, or beta = 0) the effective gain reduces to the direct gain.
    """
    ues = np.array([[p.x, p.y, p.z] for p in deployment.ue_positions])
    if ues.size == 0:
        raise ValueError("deployment must contain at least one UE")
    uav = deployment.uav_position
    uav_xyz = np.array([uav.x, uav.y, uav.z])

    delta = uav_xyz[None, :] - ues
    horiz = np.hypot(delta[:, 0], delta[:, 1])
    dz = delta[:, 2]
    dist = np.hypot(horiz, dz)
    angle = np.arctan2(dz, horiz)
    direct = 10.0 ** (-a2g_path_loss(dist, angle, params) / 10.0)

    n = ues.shape[0]
    backscatter = np.zeros(n)
    best: List[Optional[int]] = [None] * n

    tags = deployment.tag_positions
    if ambc_enabled and tags and params.reflection_coeff > 0.0:
        txyz = np.array([[p.x, p.y, p.z] for p in tags])
        # hop 1: UE -> tag, (n_ue, n_tag)
        d1h = np.hypot(ues[:, None, 0] - txyz[None, :, 0],
                       ues[:, None, 1] - txyz[None, :, 1])
        d1z = np.abs(ues[:, None, 2] - txyz[None, :, 2])
        d1 = np.hypot(d1h, d1z)
        g1 = 10.0 ** (-a2g_path_loss(d1, np.arctan2(d1z, d1h), params) / 10.0)
        # hop 2: tag -> UAV, (n_tag,)
        d2h = np.hypot(uav.x - txyz[:, 0], uav.y - txyz[:, 1])
        d2z = np.abs(uav.z - txyz[:, 2])
        d2 = np.hypot(d2h, d2z)
        g2 = 10.0 ** (-a2g_path_loss(d2, np.arctan2(d2z, d2h), params) / 10.0)

        cascaded = params.reflection_coeff * g1 * g2[None, :]
        best_idx = np.argmax(cascaded, axis=1)  # ties -> lowest index
        backscatter = cascaded[np.arange(n), best_idx]
        best = [int(i) for i in best_idx]

    effective = direct + backscatter
    return ChannelState(direct, backscatter, effective, best)
