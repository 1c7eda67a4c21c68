"""Indoor line-of-sight optical channel.

Gains follow the Lambertian emitter / concentrator-receiver model.  Angles are
given in degrees at the interface and converted to radians internally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, ValidationError

DOWN = (0.0, 0.0, -1.0)
UP = (0.0, 0.0, 1.0)

#: Half-power semi-angles below this floor (degrees) are rejected.
MIN_SEMI_ANGLE = 1.0
MAX_SEMI_ANGLE = 89.0

TABLE2_LEDS = ((1.0, 1.0, 2.5), (1.0, 3.0, 2.5), (3.0, 1.0, 2.5), (3.0, 3.0, 2.5))
TABLE2_PDS = ((1.9, 1.9, 0.75), (1.9, 2.1, 0.75), (2.1, 1.9, 0.75), (2.1, 2.1, 0.75))


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if v.shape != (3,) or not np.isfinite(norm) or norm == 0.0:
        raise ValidationError(f"orientation must be a non-zero 3-vector, got {v!r}")
    return v / norm


@dataclass(frozen=True)
class RoomGeometry:
    """LED/PD placement and optical front-end parameters.

    ``room_size`` is the (x, y) extent of the floor footprint starting at the
    origin; it only bounds illuminance grids.
    """

    led_positions: tuple = TABLE2_LEDS
    pd_positions: tuple = TABLE2_PDS
    semi_angle_half_power: float = 60.0
    fov_semi_angle: float = 40.0
    detector_area: float = 1e-4
    refractive_index: float = 1.5
    led_orientation: tuple = DOWN
    pd_orientation: tuple = UP
    room_size: tuple = (4.0, 4.0)

    def __post_init__(self):
        leds = np.asarray(self.led_positions, dtype=float)
        pds = np.asarray(self.pd_positions, dtype=float)
        if leds.ndim != 2 or leds.shape[1] != 3 or len(leds) == 0:
            raise ValidationError("led_positions must be a non-empty list of 3-D points")
        if pds.ndim != 2 or pds.shape[1] != 3 or len(pds) == 0:
            raise ValidationError("pd_positions must be a non-empty list of 3-D points")
        if not (np.all(np.isfinite(leds)) and np.all(np.isfinite(pds))):
            raise ValidationError("positions must be finite")
        # store as nested tuples so the dataclass stays hashable and immutable
        object.__setattr__(self, "led_positions", tuple(map(tuple, leds.tolist())))
        object.__setattr__(self, "pd_positions", tuple(map(tuple, pds.tolist())))
        object.__setattr__(self, "led_orientation", tuple(_unit(self.led_orientation).tolist()))
        object.__setattr__(self, "pd_orientation", tuple(_unit(self.pd_orientation).tolist()))
        object.__setattr__(self, "room_size", tuple(float(v) for v in self.room_size))

        if not MIN_SEMI_ANGLE <= self.semi_angle_half_power <= MAX_SEMI_ANGLE:
            raise DomainError(
                f"semi_angle_half_power must lie in [{MIN_SEMI_ANGLE}, {MAX_SEMI_ANGLE}] deg, "
                f"got {self.semi_angle_half_power}"
            )
        if not 0.0 < self.fov_semi_angle <= 90.0:
            raise DomainError(f"fov_semi_angle must lie in (0, 90] deg, got {self.fov_semi_angle}")
        if not self.detector_area > 0.0:
            raise DomainError("detector_area must be positive")
        if not self.refractive_index >= 1.0:
            raise DomainError("refractive_index must be >= 1")
        if leds[:, 2].min() <= pds[:, 2].max():
            raise ValidationError("every LED must be strictly above every PD")
        if len(self.room_size) != 2 or min(self.room_size) <= 0:
            raise ValidationError("room_size must be two positive lengths")

    @property
    def n_leds(self) -> int:
        return len(self.led_positions)

    @property
    def n_pds(self) -> int:
        return len(self.pd_positions)

    def scaled(self, k: float) -> "RoomGeometry":
        """Copy with every position (and the room footprint) multiplied by ``k``."""
        return RoomGeometry(
            led_positions=tuple(tuple(k * c for c in p) for p in self.led_positions),
            pd_positions=tuple(tuple(k * c for c in p) for p in self.pd_positions),
            semi_angle_half_power=self.semi_angle_half_power,
            fov_semi_angle=self.fov_semi_angle,
            detector_area=self.detector_area,
            refractive_index=self.refractive_index,
            led_orientation=self.led_orientation,
            pd_orientation=self.pd_orientation,
            room_size=tuple(k * v for v in self.room_size),
        )


@dataclass(frozen=True)
class ChannelMatrix:
    """Read-only N_R x N_t matrix of nonnegative LOS gains."""

    gains: np.ndarray = field(repr=False)

    def __post_init__(self):
        g = np.array(self.gains, dtype=float, copy=True)
        if g.ndim != 2 or 0 in g.shape:
            raise ValidationError("gains must be a non-empty 2-D matrix")
        if not np.all(np.isfinite(g)):
            raise ValidationError("gains must be finite")
        if np.any(g < 0):
            raise ValidationError("gains must be nonnegative")
        g.flags.writeable = False
        object.__setattr__(self, "gains", g)

    @property
    def n_rows(self) -> int:
        return self.gains.shape[0]

    @property
    def n_cols(self) -> int:
        return self.gains.shape[1]

    def scaled(self, k: float) -> "ChannelMatrix":
        return ChannelMatrix(self.gains * k)


def lambertian_order(semi_angle_half_power: float, floor: float = MIN_SEMI_ANGLE) -> float:
    """Lambertian mode number ``-ln 2 / ln cos(phi_half)``."""
    if not floor <= semi_angle_half_power < 90.0 or semi_angle_half_power <= 0.0:
        raise DomainError(
            f"half-power semi-angle must lie in [{floor}, 90) degrees, got {semi_angle_half_power}"
        )
    return -np.log(2.0) / np.log(np.cos(np.radians(semi_angle_half_power)))


def concentrator_gain(incidence_angle: float, fov_semi_angle: float, refractive_index: float) -> float:
    """Ideal non-imaging concentrator gain; zero outside the field of view."""
    if fov_semi_angle <= 0.0:
        raise DomainError("fov_semi_angle must be positive")
    if incidence_angle < 0.0:
        raise DomainError("incidence_angle must be nonnegative")
    if incidence_angle > fov_semi_angle:
        return 0.0
    return refractive_index**2 / np.sin(np.radians(fov_semi_angle)) ** 2


def _angles(src, src_axis, dst, dst_axis):
    """Distance, emergence and incidence angle (radians) from ``src`` to ``dst``."""
    delta = np.asarray(dst, float) - np.asarray(src, float)
    d = float(np.linalg.norm(delta))
    if d == 0.0:
        raise DomainError("LED and PD positions coincide")
    u = delta / d
    cos_phi = float(np.clip(np.dot(u, src_axis), -1.0, 1.0))
    cos_psi = float(np.clip(np.dot(-u, dst_axis), -1.0, 1.0))
    return d, np.arccos(cos_phi), np.arccos(cos_psi)


def los_gain(led_index: int, pd_index: int, geometry: RoomGeometry) -> float:
    """DC gain of the direct path from one LED to one photodetector."""
    src = geometry.led_positions[led_index]
    dst = geometry.pd_positions[pd_index]
    d, phi, psi = _angles(src, geometry.led_orientation, dst, geometry.pd_orientation)
    psi_deg = np.degrees(psi)
    if psi_deg > geometry.fov_semi_angle or phi >= np.pi / 2:
        return 0.0
    l = lambertian_order(geometry.semi_angle_half_power)
    g = concentrator_gain(psi_deg, geometry.fov_semi_angle, geometry.refractive_index)
    h = (l + 1) * geometry.detector_area / (2 * np.pi * d**2) * g * np.cos(phi) ** l * np.cos(psi)
    return max(float(h), 0.0)


def build_channel_matrix(geometry: RoomGeometry) -> ChannelMatrix:
    gains = np.zeros((geometry.n_pds, geometry.n_leds))
    for r in range(geometry.n_pds):
        for n in range(geometry.n_leds):
            gains[r, n] = los_gain(n, r, geometry)
    return ChannelMatrix(gains)


def lambertian_kernel(geometry: RoomGeometry, points: Sequence) -> np.ndarray:
    """Radiant kernel ``cos^l(phi) cos(psi) / d^2`` from every LED to every point.

    Points are receivers facing ``geometry.pd_orientation``; no field-of-view
    cut-off is applied.  Returns an array of shape (n_points, n_leds).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    leds = np.asarray(geometry.led_positions)
    l = lambertian_order(geometry.semi_angle_half_power)
    delta = pts[:, None, :] - leds[None, :, :]
    d = np.linalg.norm(delta, axis=-1)
    if np.any(d == 0.0):
        raise DomainError("grid point coincides with an LED")
    u = delta / d[..., None]
    cos_phi = u @ np.asarray(geometry.led_orientation)
    cos_psi = -(u @ np.asarray(geometry.pd_orientation))
    visible = (cos_phi > 0) & (cos_psi > 0)
    k = np.where(visible, np.clip(cos_phi, 0, None) ** l * np.clip(cos_psi, 0, None) / d**2, 0.0)
    return k
