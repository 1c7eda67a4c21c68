"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gdcvlc.channel import RoomGeometry, build_channel_matrix
from gdcvlc.cli import main
from gdcvlc.codebook import combinadic_decode, combinadic_encode
from gdcvlc.config import load_config
from gdcvlc.experiments import cmd_ber_sweep, cmd_uidr_sweep
from gdcvlc.io import read_csv
from gdcvlc.link import DEFAULT_SEED, LinkRealization, make_rng, measured_dimming, ml_detect, modulate, transmit
from gdcvlc.link import demodulate
from gdcvlc.metrics import (
    cpep,
    design_for,
    free_distance_brute,
    mfd1_bound,
    mfd2_distance,
    select_ns,
    select_ns_mber,
    symbol_matrices,
)
from gdcvlc.signal import eligible_ns_range, optimal_levels
from gdcvlc.errors import InfeasibleError

from oracles import grid_search_lambda, pairwise_ml_error_rate, symbol_energy_loop, union_bound_loop

ETAS = (0.35, 0.5, 0.65, 0.8)


@pytest.fixture(scope="module")
def room_H():
    return build_channel_matrix(RoomGeometry()).gains


@pytest.fixture(scope="module")
def reference_ber(tmp_path_factory):
    """Full reference BER sweep, shared by the bound and ordering criteria."""
    out = tmp_path_factory.mktemp("ber")
    t0 = time.perf_counter()
    cmd_ber_sweep(load_config(), out)
    elapsed = time.perf_counter() - t0
    _, header, rows = read_csv(out / "ber.csv")
    recs = [dict(zip(header, r)) for r in rows]
    for r in recs:
        for k in ("eta", "snr_db", "ber", "stderr", "union_bound"):
            r[k] = float(r[k])
        for k in ("n_active", "bit_errors", "bits"):
            r[k] = int(r[k])
    return recs, elapsed


def test_criterion_01_combinadic_bijection(verdict):
    t0 = time.perf_counter()
    bad = checked = 0
    for n in range(1, 17):
        for k in range(1, n + 1):
            for z in range(math.comb(n, k)):
                seq = combinadic_decode(z, k, n)
                if combinadic_encode(seq, k) != z or seq[0] >= n:
                    bad += 1
                checked += 1
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 1.0
    assert verdict(1, ok, f"{checked} indices, {bad} mismatches, {elapsed:.2f} s (budget 1 s)")


def test_criterion_02_level_design_optimal(verdict):
    t0 = time.perf_counter()
    rng = make_rng(DEFAULT_SEED, 2)
    worst_gap = worst_violation = 0.0
    for _ in range(1000):
        i_low = float(rng.uniform(0.0, 1.0))
        i_high = i_low + float(rng.uniform(0.2, 2.0))
        M = int(2 ** rng.integers(1, 6))
        eta_e = float(rng.uniform(0.01, 1.0))
        c = optimal_levels(i_low, i_high, M, eta_e)
        worst_gap = max(worst_gap, abs(c.scale - grid_search_lambda(i_low, i_high, M, eta_e)))
        s = np.asarray(c.levels)
        mean = eta_e * (i_high - i_low) + i_low
        violations = [
            i_low - s.min(),
            s.max() - i_high,
            abs(s.mean() - mean),
            -c.scale,
            float(np.max(np.abs(np.diff(s) - c.scale))) if M > 1 else 0.0,
        ]
        worst_violation = max(worst_violation, *violations)
    elapsed = time.perf_counter() - t0
    ok = worst_gap <= 1e-4 and worst_violation <= 1e-9 and elapsed < 10
    assert verdict(2, ok, f"max |lambda - grid| {worst_gap:.2e} (step 1e-4), "
                          f"max constraint violation {worst_violation:.1e}, {elapsed:.1f} s")


def test_criterion_03_pairwise_error_scale(verdict, room_H):
    t0 = time.perf_counter()
    d = design_for(4, 2, 5, 0.5, 8, 0.1, 2.0)
    S = symbol_matrices(d.codebook, d.constellation)
    base = S[0]
    d2 = np.array([np.sum((room_H @ (base - E)) ** 2) for E in S])
    d_min = d2[d2 > 0].min()
    n0 = d_min / (4 * 0.8416**2)  # Q = 0.2 at the closest neighbour
    picks = []
    for target_q in (0.2, 0.02, 0.002):
        arg = {0.2: 0.8416, 0.02: 2.054, 0.002: 2.878}[target_q]
        j = int(np.argmin(np.where(d2 > 0, np.abs(d2 - 4 * n0 * arg**2), np.inf)))
        picks.append(j)
    rng = make_rng(DEFAULT_SEED, 3)
    lines, ok = [], len({round(float(d2[j]) / d_min, 9) for j in picks}) == 3
    for j in picks:
        p, se = pairwise_ml_error_rate(room_H, base, S[j], n0, 10**6, rng)
        q4 = cpep(d2[j], n0, 4)
        q2 = cpep(d2[j], n0, 2)
        z = abs(p - q4) / se
        ok &= z <= 3
        lines.append(f"d2/dmin={d2[j] / d_min:.2f} mc={p:.4g} Q4={q4:.4g} ({z:.1f} se) Q2={q2:.4g}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 30
    assert verdict(3, ok, "; ".join(lines) + f"; {elapsed:.1f} s")


def _random_instance(rng, max_cells=8):
    n_leds = int(rng.integers(2, 5))
    n_slots = int(rng.integers(1, max_cells // n_leds + 1))
    n = n_leds * n_slots
    ns = int(rng.integers(1, n + 1))
    p1max = math.comb(n, ns).bit_length() - 1
    P = int(rng.integers(max(1, p1max), p1max + 3))
    eta = float(rng.uniform(0.05, 1.0)) * ns / n
    H = rng.uniform(0.0, 1.0, size=(int(rng.integers(1, 5)), n_leds))
    return H, design_for(n_leds, n_slots, ns, eta, P, 0.1, 2.0)


def _close(a, b, tol):
    return a == b or abs(a - b) <= tol


def test_criterion_04_free_distance_chain(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(DEFAULT_SEED)
    order_bad = eq_bad = 0
    worst = 0.0
    for _ in range(100):
        H, d = _random_instance(rng)
        brute = free_distance_brute(H, d.codebook, d.constellation).d_free
        m1 = mfd1_bound(H, d.codebook, d.constellation).d_free
        m2 = mfd2_distance(H, d.codebook, d.constellation).d_free
        if not (m1 <= m2 + 1e-9):
            order_bad += 1
        if not _close(m2, brute, 1e-9):
            eq_bad += 1
            worst = max(worst, m2 - brute)
    elapsed = time.perf_counter() - t0
    ok = order_bad == 0 and eq_bad == 0 and elapsed < 60
    assert verdict(4, ok, f"100 instances: MFD1 > MFD2 in {order_bad}, MFD2 != brute in {eq_bad} "
                          f"(largest excess {worst:.3g}), {elapsed:.1f} s")


@pytest.mark.slow
def test_criterion_05_union_bound_validity(verdict, reference_ber):
    recs, sweep_time = reference_ber
    seen = {}
    for r in recs:
        if r["eta"] in (0.35, 0.5) and r["bit_errors"] >= 200:
            seen[(r["eta"], r["n_active"], r["snr_db"])] = r
    bad = [k for k, r in seen.items() if r["ber"] > r["union_bound"] + 3 * r["stderr"]]
    tightest = max(((r["ber"] - r["union_bound"]) / r["stderr"] for r in seen.values()), default=math.nan)
    ok = bool(seen) and not bad and sweep_time < 600
    assert verdict(5, ok, f"{len(seen)} points with >=200 errors, {len(bad)} above bound + 3 se "
                          f"(max (ber-ub)/se {tightest:.2f}), sweep {sweep_time:.0f} s")


def test_criterion_06_dimming_accuracy(verdict, room_H):
    t0 = time.perf_counter()
    worst = 0.0
    count = 0
    for eta in (0.2, 0.35, 0.5, 0.65, 0.8):
        for ns in eligible_ns_range(eta, 4, 2):
            try:
                d = design_for(4, 2, ns, eta, 8, 0.1, 2.0)
            except InfeasibleError:
                continue
            got = measured_dimming(d.config, d.codebook, d.constellation, 10**5, seed=DEFAULT_SEED + ns)
            worst = max(worst, abs(got - eta) / eta)
            count += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.005 and elapsed < 60
    assert verdict(6, ok, f"{count} designs, max relative error {worst:.2e} (limit 5e-3), {elapsed:.1f} s")


def test_criterion_07_uniformity(verdict, tmp_path):
    t0 = time.perf_counter()
    cmd_uidr_sweep(load_config(), tmp_path)
    _, header, rows = read_csv(tmp_path / "uidr.csv")
    col = {h: np.array([float(r[i]) for r in rows]) for i, h in enumerate(header)}
    elapsed = time.perf_counter() - t0
    inc, seq, ref = col["nuir_incremental"], col["nuir_sequential"], col["nonspatial"]
    checks = {
        "nonspatial == 1": bool(np.all(np.abs(ref - 1.0) <= 1e-12)),
        "incremental >= sequential": bool(np.all(inc >= seq - 1e-12)),
        "min incremental >= 0.85": inc.min() >= 0.85,
        "min sequential <= 0.80": seq.min() <= 0.80,
    }
    ok = all(checks.values()) and elapsed < 60
    failed = [k for k, v in checks.items() if not v]
    assert verdict(7, ok, f"{len(rows)} levels, min incremental {inc.min():.3f}, min sequential "
                          f"{seq.min():.3f}, failed: {failed or 'none'}, {elapsed:.1f} s")


@pytest.mark.slow
def test_criterion_08_ber_orderings(verdict, reference_ber):
    recs, sweep_time = reference_ber
    top = max(r["snr_db"] for r in recs)
    at_top = {(r["eta"], r["method"]): r for r in recs if r["snr_db"] == top}
    ber = {eta: at_top[(eta, "mber")]["ber"] for eta in ETAS}
    # strict: two zero-error estimates do not establish an ordering
    c1 = ber[0.5] < ber[0.35] and ber[0.5] * 2 <= ber[0.35]
    c2 = ber[0.65] < ber[0.8] and ber[0.65] * 2 <= ber[0.8]
    spread = []
    agree = True
    for r in recs:
        if r["eta"] not in (0.35, 0.5) or r["method"] == "mber":
            continue
        ref = next(x for x in recs if x["eta"] == r["eta"] and x["snr_db"] == r["snr_db"]
                   and x["method"] == "mber")
        se = math.hypot(r["stderr"], ref["stderr"])
        diff = abs(r["ber"] - ref["ber"])
        close = diff == 0 or diff <= 3 * se
        agree &= close
        spread.append(diff / se if se > 0 else 0.0)
    ok = c1 and c2 and agree and sweep_time < 1200
    detail = (f"at {top:g} dB: BER(0.5)={ber[0.5]:.3g} vs BER(0.35)={ber[0.35]:.3g} "
              f"[{'ok' if c1 else 'violated'}]; BER(0.65)={ber[0.65]:.3g} vs BER(0.8)={ber[0.8]:.3g} "
              f"[{'ok' if c2 else 'violated'}]; methods agree: {agree} "
              f"(max {max(spread, default=0):.2f} se); sweep {sweep_time:.0f} s")
    assert verdict(8, ok, detail)


def test_criterion_09_mber_matches_union_bound_argmin(verdict, room_H):
    t0 = time.perf_counter()
    mismatches = []
    for snr in (10.0, 30.0):
        for eta in ETAS:
            sel = select_ns_mber(room_H, eta, 8, 4, 2, 0.1, 2.0, snr_db=snr)
            bounds = {}
            for ns in eligible_ns_range(eta, 4, 2):
                try:
                    d = design_for(4, 2, ns, eta, 8, 0.1, 2.0)
                except InfeasibleError:
                    continue
                n0 = symbol_energy_loop(room_H, d.codebook, d.constellation.levels) / 10 ** (snr / 10)
                bounds[ns] = union_bound_loop(room_H, d.codebook, d.constellation.levels, n0)
            best = min(bounds, key=lambda ns: (bounds[ns], ns))
            if best != sel.chosen:
                mismatches.append((snr, eta, sel.chosen, best))
    elapsed = time.perf_counter() - t0
    ok = not mismatches and elapsed < 300
    assert verdict(9, ok, f"8 (SNR, eta) cases, mismatches {mismatches or 'none'}, {elapsed:.1f} s")


_BASE_CHOICE: dict = {}
_SCALING_FAILURES: list = []
_SCALING_RUNS = [0, 0.0]


def _chosen(H, eta, method):
    return select_ns(H, eta, 8, 4, 2, 0.1, 2.0, method, snr_db=30.0 if method == "mber" else None).chosen


@settings(max_examples=15, deadline=None)
@given(st.floats(1e-3, 1e3), st.sampled_from(ETAS), st.integers(0, 255))
def _scaling_property(room_H, k, eta, word):
    t0 = time.perf_counter()
    for method in ("mber", "mfd1", "mfd2"):
        key = (eta, method)
        if key not in _BASE_CHOICE:
            _BASE_CHOICE[key] = _chosen(room_H, eta, method)
        if _chosen(k * room_H, eta, method) != _BASE_CHOICE[key]:
            _SCALING_FAILURES.append((k, eta, method))
    d = design_for(4, 2, _BASE_CHOICE[(eta, "mber")], eta, 8, 0.1, 2.0)
    bits = [(word >> (7 - i)) & 1 for i in range(8)]
    S = modulate(bits, d.codebook, d.constellation)
    Y = transmit(S, LinkRealization(k * room_H, 0.0))
    q, m = ml_detect(Y, k * room_H, d.codebook, d.constellation)
    if list(demodulate(q, m, d.codebook, d.constellation)) != bits:
        _SCALING_FAILURES.append((k, eta, "round-trip", word))
    _SCALING_RUNS[0] += 1
    _SCALING_RUNS[1] += time.perf_counter() - t0


def test_criterion_10_scaling_invariance(verdict, room_H):
    _scaling_property(room_H)
    n, elapsed = _SCALING_RUNS
    ok = not _SCALING_FAILURES and elapsed < 10
    assert verdict(10, ok, f"{n} scale factors, failures {_SCALING_FAILURES or 'none'}, {elapsed:.1f} s")


SMALL = """
[geometry]
grid_points = 21
[sweep]
dimming_levels = 0.35 0.65
snr_db = 10 20
max_matrices = 20000
uidr_levels = 0.1:0.9:0.2
ns_slots = 2
rate_levels = 0.3 0.9
max_bits = 10
"""


def test_criterion_11_cli_determinism(verdict, tmp_path):
    t0 = time.perf_counter()
    cfg = tmp_path / "small.ini"
    cfg.write_text(SMALL)
    differing = []
    for cmd in ("uidr", "illum", "ber", "ns", "rate"):
        runs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{cmd}-{tag}"
            assert main([cmd, "--config", str(cfg), "--out", str(out), "--seed", "7"]) == 0
            runs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        if runs[0] != runs[1]:
            differing.append(cmd)
    elapsed = time.perf_counter() - t0
    ok = not differing and cfg.read_text() == SMALL and elapsed < 60
    assert verdict(11, ok, f"5 commands run twice, differing outputs: {differing or 'none'}, {elapsed:.1f} s")
