"""Experiment sweeps driven by an :class:`ExperimentConfig`.

Each ``cmd_*`` function is a pure function of its arguments: it writes CSV
files into ``out`` and returns their paths.  Random streams are keyed by the
seed and the sweep coordinates, never by method, so methods that settle on
the same design see the same noise.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np

from .channel import build_channel_matrix
from .codebook import build_codebook
from .config import ExperimentConfig
from .errors import InfeasibleError
from .illumination import illuminance_map, nonspatial_map, nuir, uir
from .io import write_csv
from .link import make_rng, max_rate_search, simulate_point, snr_to_n0
from .metrics import design_for, select_ns, select_ns_mber, union_bound

log = logging.getLogger(__name__)


def _meta(cfg: ExperimentConfig, command: str, **extra) -> dict:
    return {"command": command, "config_sha256": cfg.digest(), "seed": cfg.sweep.seed, **extra}


def _select(cfg: ExperimentConfig, H, eta: float, method: str, n_slots=None, P=None, snr_db=None):
    s = cfg.sweep
    sy = cfg.system
    return select_ns(H, eta, P or sy.bits_per_matrix, H.n_cols, n_slots or sy.n_slots,
                     sy.current_min, sy.current_max, method, s.selector,
                     snr_db=s.selection_snr_db if snr_db is None else snr_db,
                     cpep_scale=s.cpep_scale)


def _balanced_maps(cfg, geometry, H, eta, method):
    """Selected design plus incremental/sequential maps and the equal-probability reference."""
    sel = _select(cfg, H, eta, method)
    row = sel.row(sel.chosen)
    grid = cfg.grid()
    maps = {}
    for name in ("incremental", "sequential"):
        cb = build_codebook(H.n_cols, cfg.system.n_slots, sel.chosen, row.p1, name)
        maps[name] = illuminance_map(geometry, cb, row.eta_e, grid, eta)
    ref = nonspatial_map(geometry, maps["incremental"], row.eta_e)
    return row, maps, ref


def cmd_uidr_sweep(cfg: ExperimentConfig, out, method: str = "mber") -> list[Path]:
    geometry = cfg.room()
    H = build_channel_matrix(geometry)
    rows = []
    for eta in cfg.sweep.uidr_levels:
        try:
            row, maps, ref = _balanced_maps(cfg, geometry, H, eta, method)
        except InfeasibleError as exc:
            log.warning("skipping eta=%s: %s", eta, exc)
            continue
        rows.append([eta, row.n_active, row.p1, row.eta_e,
                     nuir(maps["incremental"], ref), nuir(maps["sequential"], ref), nuir(ref, ref)])
    header = ["eta", "n_active", "p1", "eta_e", "nuir_incremental", "nuir_sequential", "nonspatial"]
    return [write_csv(Path(out) / "uidr.csv", header, rows, _meta(cfg, "uidr", method=method))]


def cmd_illuminance_map(cfg: ExperimentConfig, out, eta: float | None = None, method: str = "mber") -> list[Path]:
    eta = cfg.sweep.illum_eta if eta is None else eta
    geometry = cfg.room()
    H = build_channel_matrix(geometry)
    row, maps, ref = _balanced_maps(cfg, geometry, H, eta, method)
    grid = cfg.grid()
    X, Y = np.meshgrid(grid.xs, grid.ys)
    paths = []
    for name, m in maps.items():
        meta = _meta(cfg, "illum", method=method, selector=name, eta=eta, n_active=row.n_active,
                     uir=uir(m), nuir=nuir(m, ref))
        data = zip(X.ravel(), Y.ravel(), m.values.ravel())
        paths.append(write_csv(Path(out) / f"illum_{name}.csv", ["x", "y", "value"], data, meta))
    return paths


def _simulate(cfg, H, design, snr_db, *key):
    n0 = snr_to_n0(snr_db, H, design.codebook, design.constellation)
    rng = make_rng(cfg.sweep.seed, *key, float(snr_db))
    pt = simulate_point(H, design.codebook, design.constellation, n0, rng, cfg.stop_rule(), snr_db)
    ub = union_bound(H, design.codebook, design.constellation, n0, cfg.sweep.cpep_scale)
    return pt, ub


def cmd_ber_sweep(cfg: ExperimentConfig, out, dimming_levels=None, methods=None) -> list[Path]:
    s, sy = cfg.sweep, cfg.system
    levels = s.dimming_levels if dimming_levels is None else tuple(dimming_levels)
    methods = s.methods if methods is None else tuple(methods)
    H = build_channel_matrix(cfg.room())
    cache = {}
    rows = []
    for eta in levels:
        for method in methods:
            try:
                ns = _select(cfg, H, eta, method).chosen
            except InfeasibleError as exc:
                log.warning("skipping eta=%s method=%s: %s", eta, method, exc)
                continue
            d = design_for(H.n_cols, sy.n_slots, ns, eta, sy.bits_per_matrix,
                           sy.current_min, sy.current_max, s.selector)
            for snr in s.snr_db:
                k = (eta, ns, snr)
                if k not in cache:
                    cache[k] = _simulate(cfg, H, d, snr, float(eta))
                pt, ub = cache[k]
                rows.append([eta, method, ns, d.config.index_bits, d.constellation.size, snr,
                             pt.ber, pt.bit_errors, pt.bits, pt.stderr, ub])
    header = ["eta", "method", "n_active", "p1", "M", "snr_db", "ber", "bit_errors", "bits",
              "stderr", "union_bound"]
    return [write_csv(Path(out) / "ber.csv", header, rows, _meta(cfg, "ber"))]


def cmd_ns_sweep(cfg: ExperimentConfig, out, eta: float | None = None, slot_values=None) -> list[Path]:
    s, sy = cfg.sweep, cfg.system
    eta = s.ns_eta if eta is None else eta
    slot_values = s.ns_slots if slot_values is None else tuple(slot_values)
    P = s.ns_bits_per_matrix
    H = build_channel_matrix(cfg.room())
    rows = []
    for T in slot_values:
        try:
            sel = select_ns_mber(H, eta, P, H.n_cols, T, sy.current_min, sy.current_max,
                                 selector=s.selector, snr_db=s.ns_snr_db, cpep_scale=s.cpep_scale)
        except InfeasibleError as exc:
            log.warning("skipping T=%s: %s", T, exc)
            continue
        for r in sel.rows:
            d = design_for(H.n_cols, T, r.n_active, eta, P, sy.current_min, sy.current_max, s.selector)
            pt, _ = _simulate(cfg, H, d, s.ns_snr_db, float(eta), T, r.n_active)
            rows.append([T, r.n_active, r.p1, r.M, r.eta_e, r.d_free, r.union_bound,
                         pt.ber, pt.bit_errors, pt.stderr, int(r.n_active == sel.chosen)])
    header = ["T", "n_active", "p1", "M", "eta_e", "d_free", "union_bound", "ber", "bit_errors",
              "stderr", "selected"]
    meta = _meta(cfg, "ns", eta=eta, P=P, snr_db=s.ns_snr_db)
    return [write_csv(Path(out) / "ns.csv", header, rows, meta)]


def cmd_rate_sweep(cfg: ExperimentConfig, out, snr_db: float | None = None, methods=None) -> list[Path]:
    s, sy = cfg.sweep, cfg.system
    snr_db = s.rate_snr_db if snr_db is None else snr_db
    methods = s.methods if methods is None else tuple(methods)
    H = build_channel_matrix(cfg.room())
    rows = []
    for eta in s.rate_levels:
        for method in methods:
            try:
                res = max_rate_search(H, eta, snr_db, sy.n_slots, sy.current_min, sy.current_max,
                                      s.ber_target, s.selector, method, s.max_bits, cfg.stop_rule(),
                                      s.seed, s.cpep_scale)
            except InfeasibleError as exc:
                log.warning("skipping eta=%s method=%s: %s", eta, method, exc)
                continue
            rows.append([eta, method, snr_db, res.bits, res.n_active,
                         res.ber if res.bits else math.nan])
    header = ["eta", "method", "snr_db", "bits", "n_active", "ber"]
    return [write_csv(Path(out) / "rate.csv", header, rows, _meta(cfg, "rate", snr_db=snr_db))]


COMMANDS = {
    "uidr": cmd_uidr_sweep,
    "illum": cmd_illuminance_map,
    "ber": cmd_ber_sweep,
    "ns": cmd_ns_sweep,
    "rate": cmd_rate_sweep,
}
