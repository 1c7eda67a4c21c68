"""Dimming-constrained configuration and PAM level design."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleError, ResourceError, ValidationError

# dimming levels are compared with this slack to absorb float round-off
_EPS = 1e-12

# largest symbol alphabet any routine will materialise
MAX_BITS_PER_MATRIX = 20


@dataclass(frozen=True)
class GdcConfig:
    n_leds: int
    n_slots: int
    n_active: int
    bits_per_matrix: int
    index_bits: int
    symbol_bits: int
    modulation_order: int
    dimming_target: float
    element_power: float
    current_min: float
    current_max: float

    @property
    def n_cells(self) -> int:
        return self.n_leds * self.n_slots


@dataclass(frozen=True)
class PamConstellation:
    scale: float
    bias: float
    levels: tuple
    mean_current: float

    @property
    def size(self) -> int:
        return len(self.levels)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.levels, dtype=float)

    @property
    def min_spacing_sq(self) -> float:
        """Squared minimum level spacing; infinite for a single level."""
        return self.scale**2 if self.size > 1 else math.inf


def _check_eta(eta: float):
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"dimming level must lie in (0, 1], got {eta}")


def eligible_ns_range(eta: float, n_leds: int, n_slots: int) -> range:
    """Active-element counts able to reach dimming level ``eta``."""
    _check_eta(eta)
    n_cells = n_leds * n_slots
    # guard against eta * n_cells landing a hair above an integer
    lo = math.ceil(eta * n_cells - 1e-9)
    return range(max(lo, 1), n_cells + 1)


def index_bits_for(n_leds: int, n_slots: int, n_active: int, bits_per_matrix: int) -> int:
    n_patterns = math.comb(n_leds * n_slots, n_active)
    return min(n_patterns.bit_length() - 1, bits_per_matrix)


def resolve_config(
    n_leds: int,
    n_slots: int,
    n_active: int,
    eta: float,
    bits_per_matrix: int,
    current_min: float = 0.1,
    current_max: float = 2.0,
) -> GdcConfig:
    _check_eta(eta)
    if bits_per_matrix < 0:
        raise DomainError("bits_per_matrix must be nonnegative")
    if bits_per_matrix > MAX_BITS_PER_MATRIX:
        raise ResourceError(f"{bits_per_matrix} bits per matrix exceeds cap {MAX_BITS_PER_MATRIX}")
    if not 1 <= n_active <= n_leds * n_slots:
        raise ValidationError(f"N_S={n_active} outside [1, {n_leds * n_slots}]")
    if not current_min < current_max:
        raise DomainError("current_min must be below current_max")
    element_power = eta * n_leds * n_slots / n_active
    if element_power > 1.0 + _EPS:
        raise InfeasibleError(
            f"N_S={n_active} cannot reach dimming {eta}: per-element power {element_power:.4f} > 1"
        )
    element_power = min(element_power, 1.0)
    p1 = index_bits_for(n_leds, n_slots, n_active, bits_per_matrix)
    p2 = bits_per_matrix - p1
    return GdcConfig(
        n_leds=n_leds,
        n_slots=n_slots,
        n_active=n_active,
        bits_per_matrix=bits_per_matrix,
        index_bits=p1,
        symbol_bits=p2,
        modulation_order=2**p2,
        dimming_target=eta,
        element_power=element_power,
        current_min=current_min,
        current_max=current_max,
    )


def optimal_levels(current_min: float, current_max: float, modulation_order: int, element_power: float) -> PamConstellation:
    """Widest equally spaced PAM levels inside ``[I_L, I_H]`` with the required mean.

    The mean current is pinned by the per-element power; the spacing is then
    limited by whichever range edge is closer to the mean.
    """
    if not 0.0 < element_power <= 1.0:
        raise DomainError(f"element power must lie in (0, 1], got {element_power}")
    if modulation_order < 1:
        raise DomainError("modulation order must be at least 1")
    if not current_min < current_max:
        raise DomainError("current_min must be below current_max")
    M = modulation_order
    mean = element_power * (current_max - current_min) + current_min
    if M == 1:
        return PamConstellation(0.0, mean, (mean,), mean)
    scale = 2.0 * min(mean - current_min, current_max - mean) / (M - 1)
    bias = mean - scale * (M + 1) / 2.0
    levels = tuple(float(scale * m + bias) for m in range(1, M + 1))
    return PamConstellation(float(scale), float(bias), levels, float(mean))


def optimal_constellation(config: GdcConfig) -> PamConstellation:
    return optimal_levels(
        config.current_min, config.current_max, config.modulation_order, config.element_power
    )


def dimming_of(config: GdcConfig) -> float:
    return config.n_active / config.n_cells * config.element_power
