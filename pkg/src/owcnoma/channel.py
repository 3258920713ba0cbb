"""Line-of-sight optical channel gains and location-driven CSI error.

All transmitters are ceiling mounted and point straight down; receivers point
straight up, so the irradiance and incidence angles coincide and are fixed by
the geometry (cos angle = height_gap / distance). Gains are dimensionless
optical DC gains; distances in meters, angles in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AccessPoint:
    """Ceiling-mounted optical transmitter."""

    id: int
    position: tuple[float, float, float]
    half_power_semi_angle: float  # rad
    transmit_power: float  # W, total optical power
    bandwidth: float  # Hz, dedicated to this AP's group

    def __post_init__(self):
        if not 0.0 < self.half_power_semi_angle < math.pi / 2:
            raise ValueError(
                f"AP {self.id}: half_power_semi_angle must be in (0, pi/2), "
                f"got {self.half_power_semi_angle}")
        if self.transmit_power <= 0:
            raise ValueError(f"AP {self.id}: transmit_power must be > 0")
        if self.bandwidth <= 0:
            raise ValueError(f"AP {self.id}: bandwidth must be > 0")

    @property
    def lambertian_order(self) -> float:
        return lambertian_order(self.half_power_semi_angle)


@dataclass(frozen=True)
class ReceiverProfile:
    """Photodetector front end, shared by all users."""

    pd_area: float  # m^2
    fov: float  # rad, half-angle
    filter_gain: float = 1.0
    concentrator_gain: float = 1.0
    responsivity: float = 0.53  # A/W

    def __post_init__(self):
        if self.pd_area <= 0:
            raise ValueError("pd_area must be > 0")
        if not 0.0 < self.fov <= math.pi / 2:
            raise ValueError(f"fov must be in (0, pi/2], got {self.fov}")
        if self.filter_gain <= 0 or self.concentrator_gain <= 0:
            raise ValueError("optical gains must be > 0")
        if self.responsivity <= 0:
            raise ValueError("responsivity must be > 0")


@dataclass(frozen=True)
class UserState:
    """One user's geometry relative to its serving AP."""

    id: int
    position: tuple[float, float, float]
    height_gap: float  # m, receiver plane to ceiling
    access_distance: float  # m, LOS distance to serving AP
    location_error: float  # m, CRLB-style position error bound
    group_id: int
    order_index: int  # 1 = highest location order (least power)

    def __post_init__(self):
        if not self.height_gap > 0:
            raise ValueError(f"user {self.id}: height_gap must be > 0")
        if self.access_distance < self.height_gap:
            raise ValueError(
                f"user {self.id}: access_distance {self.access_distance} "
                f"< height_gap {self.height_gap}")
        if self.location_error < 0:
            raise ValueError(f"user {self.id}: location_error must be >= 0")
        if self.order_index < 1:
            raise ValueError(f"user {self.id}: order_index must be >= 1")


@dataclass(frozen=True)
class ChannelEstimate:
    """True/estimated/effective gain triple for one user."""

    true_gain: float
    estimated_gain: float
    estimate_error: float
    effective_gain: float  # max(estimated + error, 0)


def lambertian_order(half_power_semi_angle: float) -> float:
    """m = -ln2 / ln cos(half-power semi-angle); m = 1 at 60 degrees."""
    c = math.cos(half_power_semi_angle)
    if c <= 0.0:
        raise ValueError(
            f"half-power semi-angle {half_power_semi_angle} rad has "
            f"non-positive cosine; Lambertian order undefined")
    return -math.log(2.0) / math.log(c)


def los_channel_gain(ap: AccessPoint, rx: ReceiverProfile,
                     irradiance_angle: float, incidence_angle: float,
                     distance: float) -> float:
    """DC gain of the LOS path; exactly 0 outside the receiver FOV cone."""
    if distance <= 0:
        raise ValueError(f"distance must be > 0, got {distance}")
    if incidence_angle > rx.fov:
        return 0.0
    m = ap.lambertian_order
    geom = (m + 1.0) * rx.pd_area / (2.0 * math.pi * distance ** 2)
    return (geom * math.cos(irradiance_angle) ** m * math.cos(incidence_angle)
            * rx.filter_gain * rx.concentrator_gain)


def csi_error(user: UserState, ap: AccessPoint, rx: ReceiverProfile) -> float:
    """Gain estimation error induced by a position error of magnitude
    location_error; always <= 0, and 0 iff the location error is 0.

    Equals the vertical-path gain evaluated at the error-inflated distance
    sqrt(distance^2 + err^2) minus the gain at the measured distance.
    """
    if user.access_distance <= 0:
        raise ValueError("access_distance must be > 0")
    m = ap.lambertian_order
    delta_c = ((m + 1.0) * rx.pd_area / (2.0 * math.pi)
               * rx.filter_gain * rx.concentrator_gain)
    eta_pow = user.height_gap ** (m + 1.0)
    p = (m + 3.0) / 2.0
    d2 = user.access_distance ** 2
    b2 = user.location_error ** 2
    return delta_c * (eta_pow / (d2 + b2) ** p - eta_pow / d2 ** p)


def effective_channel(estimated_gain: float, error: float) -> float:
    """h' = max(h* + dh*, 0); a negative gain is unphysical, so clamp."""
    if estimated_gain < 0:
        raise ValueError("estimated_gain must be >= 0")
    return max(estimated_gain + error, 0.0)


def link_geometry(ap_position, user_position) -> tuple[float, float, float]:
    """(distance, height_gap, angle) for a down-pointing AP and an
    up-pointing receiver; irradiance and incidence angles are equal."""
    ap_pos = np.asarray(ap_position, dtype=float)
    u_pos = np.asarray(user_position, dtype=float)
    delta = ap_pos - u_pos
    height_gap = float(delta[2])
    distance = float(np.linalg.norm(delta))
    if height_gap <= 0:
        raise ValueError("receiver must be below the AP")
    angle = math.acos(min(1.0, height_gap / distance))
    return distance, height_gap, angle


def estimate_channel(user: UserState, ap: AccessPoint,
                     rx: ReceiverProfile) -> ChannelEstimate:
    """Full gain triple for a user and its serving AP.

    The estimated gain is taken equal to the true geometric gain; the
    location error enters only through the additive error term.
    """
    _, _, angle = link_geometry(ap.position, user.position)
    true_gain = los_channel_gain(ap, rx, angle, angle, user.access_distance)
    err = csi_error(user, ap, rx)
    return ChannelEstimate(
        true_gain=true_gain,
        estimated_gain=true_gain,
        estimate_error=err,
        effective_gain=effective_channel(true_gain, err),
    )
