"""Monte Carlo link simulation with maximum-likelihood detection."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelMatrix
from .codebook import Codebook
from .errors import DomainError, ValidationError
from .metrics import gains_of, labeling_for, received_points, symbol_matrices
from .signal import PamConstellation

DEFAULT_SEED = 0x5EED_600D
MIN_ERRORS = 200
MAX_MATRICES = 10**7
BATCH = 4096


def make_rng(seed: int, *key) -> np.random.Generator:
    """Counter-based generator keyed by ``seed`` and optional extra words."""
    words = [int(seed) & (2**64 - 1)]
    for k in key:
        if isinstance(k, float):
            # the raw IEEE bits make every distinct float its own stream
            k = struct.unpack("<Q", struct.pack("<d", k))[0]
        words.append(int(k) & (2**64 - 1))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


@dataclass
class LinkRealization:
    channel: ChannelMatrix
    noise_psd: float
    seed: int = DEFAULT_SEED
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not self.noise_psd >= 0:
            raise DomainError("noise_psd must be nonnegative")
        self.rng = make_rng(self.seed)


def modulate(bits, codebook: Codebook, constellation: PamConstellation) -> np.ndarray:
    """Map one P-bit word to its transmit matrix ``K_q * s_m``."""
    lab = labeling_for(codebook, constellation)
    q, m = lab.split(lab.word_to_label(bits))
    return codebook.patterns[q].cells.astype(float) * constellation.levels[m]


def demodulate(position: int, level_index: int, codebook: Codebook, constellation: PamConstellation) -> np.ndarray:
    lab = labeling_for(codebook, constellation)
    return lab.bits(lab.label(position, level_index))


def transmit(S, link: LinkRealization) -> np.ndarray:
    """``H S + W`` with i.i.d. N(0, N0) entries drawn from the link's stream."""
    g = gains_of(link.channel)
    Y = g @ np.asarray(S, dtype=float)
    if link.noise_psd > 0:
        Y = Y + link.rng.normal(0.0, math.sqrt(link.noise_psd), size=Y.shape)
    return Y


class MLDetector:
    """Exhaustive minimum-distance detector over every (pattern, level) pair."""

    def __init__(self, H, codebook: Codebook, constellation: PamConstellation):
        self.points = received_points(H, codebook, constellation)
        self.energy = np.einsum("ij,ij->i", self.points, self.points)
        self.labeling = labeling_for(codebook, constellation)
        self.shape = (gains_of(H).shape[0], codebook.n_slots)

    def detect_labels(self, Y: np.ndarray) -> np.ndarray:
        """Labels of the nearest candidates for a batch of received matrices."""
        Y = np.asarray(Y, dtype=float).reshape(-1, self.points.shape[1])
        # ||y - c||^2 = ||y||^2 - 2 y.c + ||c||^2; the first term is common
        score = self.energy[None, :] - 2.0 * (Y @ self.points.T)
        return np.argmin(score, axis=1)

    def detect_exact(self, Y: np.ndarray) -> np.ndarray:
        """Same decision computed from explicit differences (slower, no cancellation)."""
        Y = np.asarray(Y, dtype=float).reshape(-1, self.points.shape[1])
        diff = Y[:, None, :] - self.points[None, :, :]
        return np.argmin(np.einsum("bkj,bkj->bk", diff, diff), axis=1)


def ml_detect(Y, H, codebook: Codebook, constellation: PamConstellation) -> tuple[int, int]:
    """Return ``(pattern position, level index)`` of the ML decision (0-based)."""
    det = MLDetector(H, codebook, constellation)
    label = int(det.detect_exact(np.asarray(Y, float).ravel()[None, :])[0])
    return det.labeling.split(label)


def symbol_energy(H, codebook: Codebook, constellation: PamConstellation) -> float:
    """Average received electrical energy per photodetector per slot."""
    if len(codebook) == 0:
        raise ValidationError("empty codebook")
    R = received_points(H, codebook, constellation)
    return float(np.mean(np.einsum("ij,ij->i", R, R)) / R.shape[1])


def snr_to_n0(snr_db: float, H, codebook: Codebook, constellation: PamConstellation) -> float:
    if not math.isfinite(snr_db):
        raise DomainError("snr_db must be finite")
    return symbol_energy(H, codebook, constellation) / 10 ** (snr_db / 10)


@dataclass(frozen=True)
class StopRule:
    min_errors: int = MIN_ERRORS
    max_matrices: int = MAX_MATRICES
    batch: int = BATCH


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    ber: float
    bit_errors: int
    bits: int
    stderr: float
    upper_bound_only: bool = False
    symbol_errors: int = 0
    pattern_errors: int = 0
    level_errors: int = 0
    matrices: int = 0


@dataclass
class BerCurve:
    points: list

    FIELDS = ("snr_db", "ber", "errors", "bits", "stderr")

    def __post_init__(self):
        self.points = sorted(self.points, key=lambda p: p.snr_db)

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([p.snr_db for p in self.points])

    @property
    def ber(self) -> np.ndarray:
        return np.array([p.ber for p in self.points])


def simulate_point(
    H,
    codebook: Codebook,
    constellation: PamConstellation,
    noise_psd: float,
    rng: np.random.Generator,
    stop: StopRule = StopRule(),
    snr_db: float = math.nan,
) -> BerPoint:
    """Stream random words through the link until the stop rule fires."""
    det = MLDetector(H, codebook, constellation)
    lab = det.labeling
    P = lab.n_bits
    n_symbols = len(det.points)
    sigma = math.sqrt(noise_psd)
    errors = sq_errors = 0
    sym_err = pat_err = lvl_err = 0
    n = 0
    while n < stop.max_matrices and errors < stop.min_errors:
        b = min(stop.batch, stop.max_matrices - n)
        sent = rng.integers(0, n_symbols, size=b)
        Y = det.points[sent] + rng.normal(0.0, sigma, size=(b, det.points.shape[1]))
        got = det.detect_labels(Y)
        e = lab.errors(sent, got)
        errors += int(e.sum())
        sq_errors += int((e * e).sum())
        wrong = sent != got
        sym_err += int(wrong.sum())
        pat_err += int(((sent >> lab.p2) != (got >> lab.p2)).sum())
        lvl_err += int(((sent & ((1 << lab.p2) - 1)) != (got & ((1 << lab.p2) - 1))).sum())
        n += b
    bits = n * P
    ber = errors / bits
    # per-matrix error counts are the i.i.d. unit, so the error of the mean
    # comes from their sample variance
    mean = errors / n
    var = max(sq_errors / n - mean * mean, 0.0) * n / max(n - 1, 1)
    stderr = math.sqrt(var / n) / P
    return BerPoint(snr_db, ber, errors, bits, stderr, errors == 0,
                    sym_err, pat_err, lvl_err, n)


def ber_monte_carlo(
    H,
    codebook: Codebook,
    constellation: PamConstellation,
    snr_list,
    stop: StopRule = StopRule(),
    seed: int = DEFAULT_SEED,
) -> BerCurve:
    points = []
    for snr in snr_list:
        n0 = snr_to_n0(float(snr), H, codebook, constellation)
        rng = make_rng(seed, float(snr))
        points.append(simulate_point(H, codebook, constellation, n0, rng, stop, float(snr)))
    return BerCurve(points)


def measured_dimming(config, codebook: Codebook, constellation: PamConstellation,
                     n_matrices: int, seed: int = DEFAULT_SEED) -> float:
    """Average normalized optical power emitted over random symbol matrices."""
    if n_matrices < 1:
        raise ValidationError("n_matrices must be at least 1")
    rng = make_rng(seed, 0xD1)
    S = symbol_matrices(codebook, constellation)
    active = codebook.stack
    picks = rng.integers(0, len(S), size=n_matrices)
    span = config.current_max - config.current_min
    M = constellation.size
    power = np.where(active[picks // M] > 0, (S[picks] - config.current_min) / span, 0.0)
    return float(power.mean())


@dataclass
class RateResult:
    bits: int
    ber: float
    n_active: int
    history: list


def max_rate_search(
    H,
    eta: float,
    snr_db: float,
    n_slots: int,
    current_min: float = 0.1,
    current_max: float = 2.0,
    ber_target: float = 5e-4,
    selector: str = "incremental",
    method: str = "mber",
    p_max: int = 12,
    stop: StopRule = StopRule(),
    seed: int = DEFAULT_SEED,
    cpep_scale: int = 4,
) -> RateResult:
    """Largest bits-per-matrix whose selected configuration meets ``ber_target``.

    P is increased from 1 and the search stops at the first failure, so the
    returned P passes and P + 1 either fails or is not evaluated beyond
    ``p_max``.  ``history`` lists ``(P, N_S, ber)`` for every evaluated P.
    """
    from .metrics import design_for, select_ns

    if not ber_target > 0:
        raise DomainError("ber_target must be positive")
    n_leds = gains_of(H).shape[1]
    best = RateResult(0, math.nan, 0, [])
    for P in range(1, p_max + 1):
        sel = select_ns(H, eta, P, n_leds, n_slots, current_min, current_max, method,
                        selector, snr_db=snr_db, cpep_scale=cpep_scale)
        d = design_for(n_leds, n_slots, sel.chosen, eta, P, current_min, current_max, selector)
        n0 = snr_to_n0(snr_db, H, d.codebook, d.constellation)
        pt = simulate_point(H, d.codebook, d.constellation, n0, make_rng(seed, float(eta), float(snr_db), P), stop, snr_db)
        best.history.append((P, sel.chosen, pt.ber))
        if pt.ber > ber_target:
            break
        best.bits, best.ber, best.n_active = P, pt.ber, sel.chosen
    return best
