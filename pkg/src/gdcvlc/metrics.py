"""Pairwise error analysis, free distances and active-element selection.

Symbol matrices are indexed by their label ``q * M + (m - 1)`` where ``q`` is
the pattern position in the codebook and ``m`` the PAM level; the P-bit word
of a symbol is that label written in natural binary (index bits first).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import erfc

from .channel import ChannelMatrix
from .codebook import Codebook, build_codebook
from .errors import DomainError, InfeasibleError, NumericError, ResourceError, ValidationError
from .signal import PamConstellation, eligible_ns_range, optimal_constellation, resolve_config

PAIR_CAP = 2**26
CPEP_SCALES = (2, 4)


def gains_of(H) -> np.ndarray:
    if isinstance(H, ChannelMatrix):
        return H.gains
    g = np.asarray(H, dtype=float)
    if g.ndim != 2:
        raise ValidationError("channel must be a 2-D matrix")
    return g


def qfunc(x):
    return 0.5 * erfc(np.asarray(x) / np.sqrt(2.0))


@dataclass(frozen=True)
class BitLabeling:
    """Natural-binary labels: ``p1`` index bits followed by ``p2`` symbol bits."""

    p1: int
    p2: int

    @property
    def n_bits(self) -> int:
        return self.p1 + self.p2

    def label(self, position: int, level_index: int) -> int:
        """Integer label of pattern ``position`` with level ``level_index`` (0-based)."""
        return (position << self.p2) | level_index

    def split(self, label: int) -> tuple[int, int]:
        return label >> self.p2, label & ((1 << self.p2) - 1)

    def bits(self, label: int) -> np.ndarray:
        return np.array([(label >> (self.n_bits - 1 - i)) & 1 for i in range(self.n_bits)], dtype=np.uint8)

    def word_to_label(self, bits) -> int:
        bits = np.asarray(bits).ravel()
        if bits.size != self.n_bits:
            raise ValidationError(f"expected a {self.n_bits}-bit word, got {bits.size} bits")
        out = 0
        for b in bits:
            out = (out << 1) | int(b)
        return out

    def errors(self, a, b):
        """Hamming distance between labels (array-friendly)."""
        return np.bitwise_count(np.bitwise_xor(np.asarray(a, np.int64), np.asarray(b, np.int64)))


def labeling_for(codebook: Codebook, constellation: PamConstellation) -> BitLabeling:
    return BitLabeling(codebook.p1, int(math.log2(constellation.size)))


def symbol_matrices(codebook: Codebook, constellation: PamConstellation) -> np.ndarray:
    """All ``2**p1 * M`` transmit matrices in label order, shape (N, N_t, T)."""
    K = codebook.stack
    s = constellation.array
    return (K[:, None, :, :] * s[None, :, None, None]).reshape(-1, *K.shape[1:])


def received_points(H, codebook: Codebook, constellation: PamConstellation) -> np.ndarray:
    """Noise-free received matrices ``H S`` flattened row-major, shape (N, N_R*T)."""
    g = gains_of(H)
    S = symbol_matrices(codebook, constellation)
    if g.shape[1] != S.shape[1]:
        raise ValidationError(f"channel has {g.shape[1]} columns but patterns have {S.shape[1]} rows")
    return np.einsum("rn,knt->krt", g, S).reshape(len(S), -1)


def pairwise_distance(H, S, E) -> float:
    g = gains_of(H)
    S = np.asarray(S, dtype=float)
    E = np.asarray(E, dtype=float)
    if S.shape != E.shape or S.ndim != 2 or g.shape[1] != S.shape[0]:
        raise ValidationError("symbol matrices do not conform with the channel")
    D = g @ (S - E)
    return float(np.sum(D * D))


def cpep(distance_sq, noise_psd: float, scale: int = 4):
    """Conditional pairwise error probability ``Q(sqrt(d^2 / (scale * N0)))``.

    ``scale=4`` is the exact ML value for real Gaussian noise of variance N0;
    ``scale=2`` reproduces the printed variant.
    """
    if not noise_psd > 0:
        raise DomainError("noise_psd must be positive")
    if scale not in CPEP_SCALES:
        raise DomainError(f"cpep scale must be one of {CPEP_SCALES}")
    d = np.asarray(distance_sq, dtype=float)
    if np.any(d < 0):
        raise DomainError("distance_sq must be nonnegative")
    out = qfunc(np.sqrt(d / (scale * noise_psd)))
    return float(out) if np.ndim(out) == 0 else out


def union_bound(
    H,
    codebook: Codebook,
    constellation: PamConstellation,
    noise_psd: float,
    scale: int = 4,
    cap: int = PAIR_CAP,
    block: int = 256,
) -> float:
    """Union upper bound on the bit error rate over all ordered symbol pairs."""
    labeling = labeling_for(codebook, constellation)
    P = labeling.n_bits
    if P < 1:
        raise ValidationError("union bound needs at least one bit per matrix")
    if not noise_psd > 0:
        raise DomainError("noise_psd must be positive")
    R = received_points(H, codebook, constellation)
    N = len(R)
    if N * N > cap:
        raise ResourceError(f"{N * N} ordered pairs exceed cap {cap}")
    labels = np.arange(N)
    total = 0.0
    for start in range(0, N, block):
        stop = min(start + block, N)
        diff = R[start:stop, None, :] - R[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        nbits = labeling.errors(labels[start:stop, None], labels[None, :])
        # diagonal pairs carry zero bit errors, so they drop out on their own
        total += float(np.sum(cpep(d2, noise_psd, scale) * nbits))
    return total / (N * P)


@dataclass(frozen=True)
class FreeDistanceReport:
    n_active: int
    d1: float
    d2: float
    method: str

    @property
    def d_free(self) -> float:
        return min(self.d1, self.d2)


def _pattern_diffs(codebook: Codebook):
    K = codebook.stack
    iz, iw = np.triu_indices(len(K), k=1)
    return K, iz, iw


def _level_terms(constellation: PamConstellation):
    s = constellation.array
    return float(np.min(s * s)), constellation.min_spacing_sq


def free_distance_brute(H, codebook: Codebook, constellation: PamConstellation, cap: int = PAIR_CAP) -> FreeDistanceReport:
    """Exact minimum distances over pattern-only and level-only error events."""
    g = gains_of(H)
    K, iz, iw = _pattern_diffs(codebook)
    if len(K) ** 2 > cap:
        raise ResourceError("too many pattern pairs")
    s = constellation.array
    if len(iz):
        HJ = np.einsum("rn,knt->krt", g, K[iz] - K[iw])
        pat = np.einsum("krt,krt->k", HJ, HJ)
        d1 = float(np.min(pat[:, None] * (s * s)[None, :]))
    else:
        d1 = math.inf
    if len(s) > 1:
        HK = np.einsum("rn,knt->krt", g, K)
        energy = np.einsum("krt,krt->k", HK, HK)
        gaps = (s[:, None] - s[None, :]) ** 2
        gap = float(np.min(gaps[~np.eye(len(s), dtype=bool)]))
        d2 = float(np.min(energy) * gap)
    else:
        d2 = math.inf
    return FreeDistanceReport(codebook.n_active, d1, d2, "brute")


def _min_singular_sq(A: np.ndarray, nonzero: bool = True, rtol: float = 1e-10) -> float:
    """Smallest squared singular value of ``A``.

    With ``nonzero`` the smallest singular value above ``rtol * sigma_max`` is
    used; since ``||A||_F^2`` is the sum of all squared singular values this is
    still a lower bound on it, and it does not collapse to zero whenever ``A``
    is merely rank deficient.
    """
    try:
        sv = np.linalg.svd(A, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"singular value decomposition failed: {exc}") from exc
    if not nonzero:
        return float(sv[-1] ** 2)
    kept = sv[sv > rtol * sv[0]] if sv[0] > 0 else sv[:0]
    return float(kept[-1] ** 2) if len(kept) else 0.0


def mfd1_bound(H, codebook: Codebook, constellation: PamConstellation, nonzero: bool = True) -> FreeDistanceReport:
    """Lower bound on the free distance from smallest singular values.

    ``nonzero=False`` takes the plain smallest singular value, which is zero
    for every rank-deficient ``H J`` (any single swap inside one time slot).
    """
    g = gains_of(H)
    K, iz, iw = _pattern_diffs(codebook)
    s_min_sq, spacing_sq = _level_terms(constellation)
    if len(iz):
        HJ = np.einsum("rn,knt->krt", g, K[iz] - K[iw])
        d1 = min(_min_singular_sq(m, nonzero) for m in HJ) * s_min_sq
    else:
        d1 = math.inf
    if math.isfinite(spacing_sq):
        HK = np.einsum("rn,knt->krt", g, K)
        d2 = min(_min_singular_sq(m, nonzero) for m in HK) * spacing_sq
    else:
        d2 = math.inf
    return FreeDistanceReport(codebook.n_active, float(d1), float(d2), "mfd1_bound")


@dataclass(frozen=True)
class PairDistanceTable:
    """Single-pair error distances for one column and one column pair.

    ``same_column[a, b]`` is ``||H (e_a - e_b)||^2`` (both cells in one slot);
    ``cross_column[a, b]`` is ``||H e_a||^2 + ||H e_b||^2`` (different slots).
    Neither depends on which slots are involved because H is time invariant.
    """

    same_column: np.ndarray = field(repr=False)
    cross_column: np.ndarray = field(repr=False)

    @classmethod
    def from_channel(cls, H) -> "PairDistanceTable":
        g = gains_of(H)
        G = g.T @ g
        diag = np.diag(G)
        same = diag[:, None] + diag[None, :] - 2.0 * G
        cross = diag[:, None] + diag[None, :]
        return cls(np.maximum(same, 0.0), cross)

    def lookup(self, row1: int, col1: int, row2: int, col2: int) -> float:
        table = self.same_column if col1 == col2 else self.cross_column
        return float(table[row1, row2])


def single_pair_neighbours(codebook: Codebook):
    """Yield ``(cell_on, cell_off)`` for every codebook pair differing by one swap.

    ``cell_on`` is active only in the first pattern, ``cell_off`` only in the
    second.  Each unordered pair is reported once.
    """
    present = {p.combinadic_index: p for p in codebook.patterns}
    from .codebook import combinadic_encode

    n_active = codebook.n_active
    for p in codebook.patterns:
        flat = p.cells.ravel()
        on = np.flatnonzero(flat)
        off = np.flatnonzero(flat == 0)
        for a in on:
            rest = [int(c) for c in on if c != a]
            for b in off:
                seq = sorted(rest + [int(b)], reverse=True)
                w = combinadic_encode(seq, n_active)
                if w in present and w > p.combinadic_index:
                    yield int(a), int(b)


def mfd2_distance(H, codebook: Codebook, constellation: PamConstellation, symbol_factor: str = "spacing") -> FreeDistanceReport:
    """Free distance from the time-invariant pair table and per-pattern Gram sums.

    ``symbol_factor="spacing"`` multiplies the pattern energy by the squared
    level spacing; ``"s1"`` uses the squared lowest level instead.
    """
    g = gains_of(H)
    T = codebook.n_slots
    table = PairDistanceTable.from_channel(g)
    s_min_sq, spacing_sq = _level_terms(constellation)

    best = math.inf
    for a, b in single_pair_neighbours(codebook):
        best = min(best, table.lookup(a // T, a % T, b // T, b % T))
    if math.isinf(best) and len(codebook) > 1:
        # no pattern pair differs by a single swap: fall back to Gram forms
        K, iz, iw = _pattern_diffs(codebook)
        G = g.T @ g
        J = K[iz] - K[iw]
        best = float(np.min(np.einsum("knt,nm,kmt->k", J, G, J)))
    d1 = best * s_min_sq if math.isfinite(best) else math.inf

    if symbol_factor == "spacing":
        factor = spacing_sq
    elif symbol_factor == "s1":
        factor = s_min_sq if constellation.size > 1 else math.inf
    else:
        raise ValidationError(f"unknown symbol_factor {symbol_factor!r}")
    if math.isfinite(factor):
        G = g.T @ g
        K = codebook.stack
        # sum over slots of the Gram entries between active rows
        energy = np.einsum("knt,nm,kmt->k", K, G, K)
        d2 = float(np.min(energy) * factor)
    else:
        d2 = math.inf
    return FreeDistanceReport(codebook.n_active, float(d1), d2, "mfd2")


FREE_DISTANCE_METHODS: dict[str, Callable] = {
    "brute": free_distance_brute,
    "mfd1": mfd1_bound,
    "mfd2": mfd2_distance,
}


@dataclass
class NsRow:
    n_active: int
    p1: int
    M: int
    eta_e: float
    d1: float
    d2: float
    d_free: float
    union_bound: float
    method: str

    FIELDS = ("N_S", "p1", "M", "eta_e", "d1", "d2", "d_free", "union_bound", "method")

    def as_tuple(self):
        return (self.n_active, self.p1, self.M, self.eta_e, self.d1, self.d2,
                self.d_free, self.union_bound, self.method)


@dataclass
class NsSelection:
    chosen: int
    rows: list
    method: str

    def row(self, n_active: int) -> NsRow:
        for r in self.rows:
            if r.n_active == n_active:
                return r
        raise KeyError(n_active)


@dataclass(frozen=True)
class Design:
    """Everything needed to run one GDC configuration."""

    config: object
    codebook: Codebook
    constellation: PamConstellation


def design_for(n_leds, n_slots, n_active, eta, bits_per_matrix, current_min, current_max, selector="incremental") -> Design:
    cfg = resolve_config(n_leds, n_slots, n_active, eta, bits_per_matrix, current_min, current_max)
    cb = build_codebook(n_leds, n_slots, n_active, cfg.index_bits, selector)
    return Design(cfg, cb, optimal_constellation(cfg))


def _candidates(H, eta, P, n_leds, n_slots, current_min, current_max, selector):
    g = gains_of(H)
    if g.shape[1] != n_leds:
        raise ValidationError("channel column count must equal N_t")
    out = []
    for ns in eligible_ns_range(eta, n_leds, n_slots):
        try:
            d = design_for(n_leds, n_slots, ns, eta, P, current_min, current_max, selector)
        except InfeasibleError:
            continue
        if d.config.bits_per_matrix < 1:
            continue
        out.append(d)
    if not out:
        raise InfeasibleError(f"no feasible N_S for dimming level {eta}")
    return out


def _noise_for(H, design: Design, noise_psd, snr_db):
    if (noise_psd is None) == (snr_db is None):
        raise ValidationError("give exactly one of noise_psd or snr_db")
    if noise_psd is not None:
        return noise_psd
    from .link import snr_to_n0

    return snr_to_n0(snr_db, H, design.codebook, design.constellation)


def select_ns_mber(
    H,
    eta: float,
    P: int,
    n_leds: int,
    n_slots: int,
    current_min: float,
    current_max: float,
    noise_psd: float | None = None,
    selector: str = "incremental",
    snr_db: float | None = None,
    cpep_scale: int = 4,
) -> NsSelection:
    """Pick the active-element count with the smallest union bound.

    The noise level is either a fixed ``noise_psd`` or, with ``snr_db``,
    derived per candidate from its own average received energy.
    """
    rows = []
    for d in _candidates(H, eta, P, n_leds, n_slots, current_min, current_max, selector):
        n0 = _noise_for(H, d, noise_psd, snr_db)
        ub = union_bound(H, d.codebook, d.constellation, n0, cpep_scale)
        fd = free_distance_brute(H, d.codebook, d.constellation)
        rows.append(_row(d, fd, ub, "mber"))
    best = min(rows, key=lambda r: (r.union_bound, r.n_active))
    return NsSelection(best.n_active, rows, "mber")


def select_ns_mfd(
    H,
    eta: float,
    P: int,
    n_leds: int,
    n_slots: int,
    current_min: float,
    current_max: float,
    method: str = "mfd2",
    selector: str = "incremental",
) -> NsSelection:
    """Pick the active-element count with the largest (bounded) free distance."""
    if method not in ("mfd1", "mfd2", "brute"):
        raise ValidationError(f"unknown free-distance method {method!r}")
    fn = FREE_DISTANCE_METHODS[method]
    rows = []
    for d in _candidates(H, eta, P, n_leds, n_slots, current_min, current_max, selector):
        fd = fn(H, d.codebook, d.constellation)
        rows.append(_row(d, fd, math.nan, method))
    best = min(rows, key=lambda r: (-r.d_free, r.n_active))
    return NsSelection(best.n_active, rows, method)


def select_ns(H, eta, P, n_leds, n_slots, current_min, current_max, method="mber",
              selector="incremental", snr_db=None, noise_psd=None, cpep_scale=4) -> NsSelection:
    """Dispatch to the MBER or MFD selector by method name."""
    if method == "mber":
        return select_ns_mber(H, eta, P, n_leds, n_slots, current_min, current_max,
                              noise_psd=noise_psd, selector=selector, snr_db=snr_db,
                              cpep_scale=cpep_scale)
    return select_ns_mfd(H, eta, P, n_leds, n_slots, current_min, current_max, method, selector)


def _row(d: Design, fd: FreeDistanceReport, ub: float, method: str) -> NsRow:
    c = d.config
    return NsRow(c.n_active, c.index_bits, c.modulation_order, c.element_power,
                 fd.d1, fd.d2, fd.d_free, ub, method)


def flop_estimates(n_leds: int, n_pds: int, n_slots: int, n_active: int, P: int, p1: int) -> dict:
    """FLOP counts of the three selection criteria for one candidate N_S."""
    Nt, NR, T = n_leds, n_pds, n_slots
    per_cpep = 2 * Nt * T + (2 * Nt * NR * T - NR * T + Nt * T) + 2 * NR**2 * (T - 1)
    svd = 2 * NR * T**2 + 13 * T**2
    per_d1 = 2 * Nt * NR * T - NR * T + Nt * T + svd
    per_d2 = 2 * Nt * NR * T - NR * T + svd
    Q = 2**p1
    return {
        "cpep": per_cpep,
        "mber": (2 ** (2 * P) - 2**P) * per_cpep,
        "mfd1": Q * (Q - 1) * per_d1 + Q * per_d2,
        "mfd2": Nt**2 * 2 * (8 - 2) + Q * 2 * (2 * n_active**2 - 2 * n_active),
    }
