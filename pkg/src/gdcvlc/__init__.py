"""Dimming-aware space-time index modulation for indoor visible light links."""

from ._version import __version__
from .channel import ChannelMatrix, RoomGeometry, build_channel_matrix, lambertian_order, los_gain
from .codebook import (
    ActivationPattern,
    Codebook,
    build_codebook,
    combinadic_decode,
    combinadic_encode,
    select_exhaustive,
    select_incremental,
    select_sequential,
)
from .config import ExperimentConfig, load_config
from .errors import DomainError, GdcError, InfeasibleError, NumericError, ResourceError, ValidationError
from .illumination import GridSpec, IlluminanceMap, activation_probability, illuminance_map, nuir, uir
from .link import (
    BerCurve,
    BerPoint,
    StopRule,
    ber_monte_carlo,
    make_rng,
    max_rate_search,
    measured_dimming,
    ml_detect,
    modulate,
    snr_to_n0,
)
from .metrics import (
    design_for,
    free_distance_brute,
    mfd1_bound,
    mfd2_distance,
    select_ns,
    select_ns_mber,
    select_ns_mfd,
    union_bound,
)
from .signal import GdcConfig, PamConstellation, optimal_constellation, optimal_levels, resolve_config

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
