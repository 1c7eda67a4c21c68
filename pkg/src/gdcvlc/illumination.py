"""Illumination uniformity of a codebook on the receiver plane.

Illuminance is computed in scale-free units from the Lambertian radiant
kernel; only ratios (UIR, NUIR) are meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import RoomGeometry, lambertian_kernel
from .codebook import Codebook
from .errors import DomainError, ValidationError


@dataclass(frozen=True)
class GridSpec:
    """Rectangular sample lattice at a fixed height."""

    x_min: float = 0.0
    x_max: float = 4.0
    y_min: float = 0.0
    y_max: float = 4.0
    nx: int = 50
    ny: int = 50
    height: float = 0.75

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValidationError("grid needs at least one point per axis")
        if self.x_max < self.x_min or self.y_max < self.y_min:
            raise ValidationError("grid bounds are inverted")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    def points(self) -> np.ndarray:
        """Grid points, x varying fastest; shape (ny * nx, 3)."""
        X, Y = np.meshgrid(self.xs, self.ys)
        return np.column_stack([X.ravel(), Y.ravel(), np.full(X.size, self.height)])


@dataclass(frozen=True)
class IlluminanceMap:
    grid: GridSpec
    values: np.ndarray = field(repr=False)  # shape (ny, nx)
    dimming: float = float("nan")


def activation_probability(codebook: Codebook) -> np.ndarray:
    """Fraction of (matrix, slot) instants in which each LED is on."""
    if len(codebook) == 0:
        raise ValidationError("empty codebook")
    return codebook.totals / (len(codebook) * codebook.n_slots)


def illuminance_from_probability(geometry: RoomGeometry, probability, element_power: float,
                                 grid: GridSpec = GridSpec(), dimming: float = float("nan")) -> IlluminanceMap:
    p = np.asarray(probability, dtype=float)
    if p.shape != (geometry.n_leds,):
        raise ValidationError("need one activation probability per LED")
    lx, ly = geometry.room_size
    if grid.x_min < 0 or grid.y_min < 0 or grid.x_max > lx or grid.y_max > ly:
        raise ValidationError(f"grid {grid} extends outside the {lx} x {ly} m room")
    kernel = lambertian_kernel(geometry, grid.points())
    values = (kernel @ (p * element_power)).reshape(grid.ny, grid.nx)
    return IlluminanceMap(grid, values, dimming)


def illuminance_map(geometry: RoomGeometry, codebook: Codebook, element_power: float,
                    grid: GridSpec = GridSpec(), dimming: float = float("nan")) -> IlluminanceMap:
    return illuminance_from_probability(geometry, activation_probability(codebook), element_power, grid, dimming)


def uir(illum: IlluminanceMap) -> float:
    """Uniformity ratio: minimum over mean."""
    v = np.asarray(illum.values, dtype=float)
    if v.size == 0:
        raise ValidationError("empty map")
    mean = v.mean()
    if not mean > 0:
        raise DomainError("map has zero mean illuminance")
    return float(v.min() / mean)


def nonspatial_map(geometry: RoomGeometry, reference: IlluminanceMap, element_power: float = 1.0) -> IlluminanceMap:
    """Map with every LED equally likely to be on, on the grid of ``reference``."""
    p = np.ones(geometry.n_leds)
    return illuminance_from_probability(geometry, p, element_power, reference.grid, reference.dimming)


def nuir(scheme_map: IlluminanceMap, nonspatial: IlluminanceMap) -> float:
    if scheme_map.grid != nonspatial.grid:
        raise ValidationError("maps are sampled on different grids")
    return uir(scheme_map) / uir(nonspatial)
