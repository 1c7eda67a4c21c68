"""Activation patterns, combinadic indexing and codebook selection.

A pattern is an ``N_t x T`` binary matrix with exactly ``N_S`` ones.  Pattern
``z`` is obtained from the combinadic expansion of ``z`` and a row-major
cell numbering (cell ``c`` is LED ``c // T``, slot ``c % T``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InfeasibleError, ResourceError, ValidationError

ENUMERATION_CAP = 2**24
EXHAUSTIVE_CAP = 10**7

SELECTION_METHODS = ("incremental", "sequential", "exhaustive")


def combinadic_decode(z: int, n_select: int, n_total: int) -> tuple[int, ...]:
    """Strictly descending ``(c_K, ..., c_1)`` with ``z = sum C(c_a, a)``."""
    if n_select < 0 or n_total < n_select:
        raise ValidationError(f"need 0 <= n_select <= n_total, got {n_select}, {n_total}")
    if not 0 <= z < math.comb(n_total, n_select):
        raise ValidationError(f"z={z} outside [0, C({n_total},{n_select}))")
    out = []
    c = n_total - 1
    comb = math.comb
    for a in range(n_select, 0, -1):
        # largest c with C(c, a) <= z; c >= a - 1 always works since C(a-1, a) = 0
        b = comb(c, a)
        while b > z:
            # C(c-1, a) = C(c, a) * (c - a) / c
            b = b * (c - a) // c
            c -= 1
        out.append(c)
        z -= b
        c -= 1
    return tuple(out)


def combinadic_encode(sequence: Sequence[int], n_select: int | None = None) -> int:
    seq = [int(c) for c in sequence]
    if n_select is None:
        n_select = len(seq)
    if len(seq) != n_select:
        raise ValidationError(f"expected {n_select} entries, got {len(seq)}")
    if seq and seq[-1] < 0:
        raise ValidationError("entries must be nonnegative")
    total = 0
    prev = None
    for i, c in enumerate(seq):
        if prev is not None and c >= prev:
            raise ValidationError(f"sequence must be strictly descending: {seq}")
        total += math.comb(c, n_select - i)
        prev = c
    return total


def sequence_to_pattern(sequence: Sequence[int], n_leds: int, n_slots: int) -> np.ndarray:
    cells = np.zeros(n_leds * n_slots, dtype=np.int8)
    for c in sequence:
        if not 0 <= c < n_leds * n_slots:
            raise ValidationError(f"cell index {c} outside [0, {n_leds * n_slots})")
        cells[c] = 1
    return cells.reshape(n_leds, n_slots)


def pattern_to_sequence(cells: np.ndarray) -> tuple[int, ...]:
    flat = np.flatnonzero(np.asarray(cells).ravel())
    return tuple(int(c) for c in flat[::-1])


@dataclass(frozen=True)
class ActivationPattern:
    cells: np.ndarray = field(repr=False)
    combinadic_index: int

    def __post_init__(self):
        c = np.array(self.cells, dtype=np.int8, copy=True)
        if c.ndim != 2 or not np.isin(c, (0, 1)).all():
            raise ValidationError("pattern cells must be a binary matrix")
        c.flags.writeable = False
        object.__setattr__(self, "cells", c)

    @property
    def weight(self) -> int:
        return int(self.cells.sum())

    @property
    def counts(self) -> np.ndarray:
        """Per-LED number of active slots."""
        return self.cells.sum(axis=1).astype(int)

    @classmethod
    def from_index(cls, z: int, n_leds: int, n_slots: int, n_active: int) -> "ActivationPattern":
        seq = combinadic_decode(z, n_active, n_leds * n_slots)
        return cls(sequence_to_pattern(seq, n_leds, n_slots), z)


@dataclass(frozen=True)
class Codebook:
    """Ordered set of ``2**p1`` activation patterns (ascending combinadic index)."""

    patterns: tuple
    p1: int
    selection_method: str
    n_leds: int
    n_slots: int
    n_active: int

    def __post_init__(self):
        pats = tuple(sorted(self.patterns, key=lambda p: p.combinadic_index))
        object.__setattr__(self, "patterns", pats)
        if len(pats) != 2**self.p1:
            raise ValidationError(f"codebook holds {len(pats)} patterns, expected 2**{self.p1}")
        if len({p.combinadic_index for p in pats}) != len(pats):
            raise ValidationError("codebook patterns must be distinct")
        for p in pats:
            if p.cells.shape != (self.n_leds, self.n_slots) or p.weight != self.n_active:
                raise ValidationError("pattern shape or weight does not match the codebook")

    def __len__(self) -> int:
        return len(self.patterns)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(p.combinadic_index for p in self.patterns)

    @property
    def stack(self) -> np.ndarray:
        """All patterns as a float array of shape (2**p1, N_t, T)."""
        return np.stack([p.cells for p in self.patterns]).astype(float)

    @property
    def totals(self) -> np.ndarray:
        """Per-LED activation counts summed over the codebook."""
        return np.sum([p.counts for p in self.patterns], axis=0)


def _check_sizes(n_leds, n_slots, n_active):
    if n_leds < 1 or n_slots < 1:
        raise ValidationError("N_t and T must be positive")
    if not 1 <= n_active <= n_leds * n_slots:
        raise ValidationError(f"N_S={n_active} outside [1, {n_leds * n_slots}]")


def enumerate_patterns(n_leds: int, n_slots: int, n_active: int, cap: int = ENUMERATION_CAP):
    """All patterns in ascending combinadic order, paired with their per-LED counts."""
    _check_sizes(n_leds, n_slots, n_active)
    total = math.comb(n_leds * n_slots, n_active)
    if total > cap:
        raise ResourceError(f"C({n_leds * n_slots},{n_active}) = {total} exceeds cap {cap}")
    out = []
    for z in range(total):
        pat = ActivationPattern.from_index(z, n_leds, n_slots, n_active)
        out.append((pat, pat.counts))
    return out


def _check_feasible(n_leds, n_slots, n_active, p1):
    if p1 < 0:
        raise ValidationError("p1 must be nonnegative")
    if 2**p1 > math.comb(n_leds * n_slots, n_active):
        raise InfeasibleError(
            f"2**{p1} patterns requested but only C({n_leds * n_slots},{n_active}) exist"
        )


def select_sequential(n_leds: int, n_slots: int, n_active: int, p1: int) -> Codebook:
    """The ``2**p1`` patterns with the smallest combinadic indices."""
    _check_sizes(n_leds, n_slots, n_active)
    _check_feasible(n_leds, n_slots, n_active, p1)
    pats = [ActivationPattern.from_index(z, n_leds, n_slots, n_active) for z in range(2**p1)]
    return Codebook(tuple(pats), p1, "sequential", n_leds, n_slots, n_active)


def _balance_swaps(counts: np.ndarray, in_set: np.ndarray, max_iter: int = 10_000) -> np.ndarray:
    """Swap selected/unselected patterns while the totals' variance strictly drops.

    Each round applies the single best swap; ties go to the smallest removed
    index, then the smallest added index.
    """
    in_set = in_set.copy()
    c = counts.astype(float)
    for _ in range(max_iter):
        inside = np.flatnonzero(in_set)
        outside = np.flatnonzero(~in_set)
        if len(inside) == 0 or len(outside) == 0:
            break
        totals = c[inside].sum(axis=0)
        # var(t + d) - var(t) for d = c_w - c_z, computed without the 1/N_t
        d = c[outside][None, :, :] - c[inside][:, None, :]
        dc = d - d.mean(axis=-1, keepdims=True)
        tc = totals - totals.mean()
        gain = 2.0 * (dc @ tc) + np.einsum("ijk,ijk->ij", dc, dc)
        i, j = np.unravel_index(np.argmin(gain), gain.shape)
        if gain[i, j] >= -1e-9:
            break
        in_set[inside[i]] = False
        in_set[outside[j]] = True
    return in_set


def select_incremental(n_leds: int, n_slots: int, n_active: int, p1: int, refine: bool = True) -> Codebook:
    """Illumination-balancing incremental index mapping.

    Patterns are grouped by the first LED they activate.  Within group ``n``
    patterns are admitted while the running activation count of LED ``n``
    stays below ``ceil(2**p1 * N_S / N_t)``.  The selection is then grown
    (favouring the least used LED) or shrunk (dropping patterns heavy on the
    most used LED) to exactly ``2**p1`` patterns.  Ties go to the smallest z.

    The grouping pass alone can leave the last LEDs starved, so by default a
    final pass swaps patterns in and out while that lowers the variance of
    the per-LED totals.  ``refine=False`` stops after the size compensation.
    """
    _check_sizes(n_leds, n_slots, n_active)
    _check_feasible(n_leds, n_slots, n_active, p1)
    entries = enumerate_patterns(n_leds, n_slots, n_active)
    counts = np.array([c for _, c in entries])
    target = 2**p1
    quota = math.ceil(target * n_active / n_leds)

    groups = [[] for _ in range(n_leds)]
    for z, u in enumerate(counts):
        groups[int(np.flatnonzero(u)[0])].append(z)

    chosen: list[int] = []
    for n, members in enumerate(groups):
        running = 0
        for z in members:
            running += counts[z, n]
            if running < quota:
                chosen.append(z)

    in_set = np.zeros(len(entries), dtype=bool)
    in_set[chosen] = True
    totals = counts[in_set].sum(axis=0) if chosen else np.zeros(n_leds, dtype=int)

    while in_set.sum() < target:
        n_star = int(np.argmin(totals))
        score = np.where(in_set, -1, counts[:, n_star])
        z = int(np.argmax(score))
        in_set[z] = True
        totals = totals + counts[z]

    while in_set.sum() > target:
        n_star = int(np.argmax(totals))
        score = np.where(in_set, counts[:, n_star], -1)
        z = int(np.argmax(score))
        in_set[z] = False
        totals = totals - counts[z]

    if refine:
        in_set = _balance_swaps(counts, in_set)

    pats = tuple(entries[z][0] for z in np.flatnonzero(in_set))
    return Codebook(pats, p1, "incremental", n_leds, n_slots, n_active)


def select_exhaustive(n_leds: int, n_slots: int, n_active: int, p1: int, cap: int = EXHAUSTIVE_CAP) -> Codebook:
    """Variance-minimizing subset by brute force; a reference for tiny cases only."""
    _check_sizes(n_leds, n_slots, n_active)
    _check_feasible(n_leds, n_slots, n_active, p1)
    total = math.comb(n_leds * n_slots, n_active)
    target = 2**p1
    n_candidates = math.comb(total, target)
    if n_candidates > cap:
        raise ResourceError(f"C({total},{target}) = {n_candidates} candidate sets exceeds cap {cap}")
    entries = enumerate_patterns(n_leds, n_slots, n_active)
    counts = np.array([c for _, c in entries], dtype=float)
    best, best_var = None, np.inf
    # combinations() yields subsets in lexicographic order, so the first strict
    # improvement wins ties
    for subset in itertools.combinations(range(total), target):
        var = float(np.var(counts[list(subset)].sum(axis=0)))
        if var < best_var - 1e-12:
            best, best_var = subset, var
    pats = tuple(entries[z][0] for z in best)
    return Codebook(pats, p1, "exhaustive", n_leds, n_slots, n_active)


SELECTORS = {
    "incremental": select_incremental,
    "sequential": select_sequential,
    "exhaustive": select_exhaustive,
}


def build_codebook(n_leds: int, n_slots: int, n_active: int, p1: int, method: str = "incremental") -> Codebook:
    try:
        selector = SELECTORS[method]
    except KeyError:
        raise ValidationError(f"unknown selection method {method!r}") from None
    return selector(n_leds, n_slots, n_active, p1)


def activation_variance(codebook: Codebook) -> float:
    """Population variance of the per-LED activation totals."""
    return float(np.var(codebook.totals.astype(float)))
