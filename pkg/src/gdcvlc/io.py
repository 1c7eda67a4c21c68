"""CSV export and import.

Each file starts with ``#`` comment lines carrying the tool version, the
config digest and the seed, followed by a header row.  Floats use Python's
shortest round-trip repr, so re-runs produce identical bytes.
"""

from __future__ import annotations

import csv
import io as _io
import math
from pathlib import Path

import numpy as np

from ._version import __version__
from .channel import ChannelMatrix
from .codebook import ActivationPattern, Codebook
from .errors import ValidationError
from .metrics import NsRow
from .signal import PamConstellation


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def render_csv(header, rows, meta: dict | None = None) -> str:
    buf = _io.StringIO()
    meta = {"tool": f"gdcvlc {__version__}", **(meta or {})}
    for k, v in meta.items():
        buf.write(f"# {k}={_fmt(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def write_csv(path, header, rows, meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(header, rows, meta))
    return path


def read_csv(path) -> tuple[dict, list, list]:
    """Return ``(meta, header, rows)`` with rows as lists of strings."""
    meta, lines = {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k.strip()] = v
            else:
                lines.append(line)
    rows = list(csv.reader(lines))
    if not rows:
        raise ValidationError(f"{path}: no header row")
    return meta, rows[0], rows[1:]


def write_channel(path, H: ChannelMatrix, meta: dict | None = None) -> Path:
    g = H.gains
    header = [f"led{n}" for n in range(g.shape[1])]
    return write_csv(path, header, g.tolist(), meta)


def read_channel(path) -> ChannelMatrix:
    _, _, rows = read_csv(path)
    return ChannelMatrix(np.array([[float(v) for v in r] for r in rows]))


def write_codebook(path, codebook: Codebook, meta: dict | None = None) -> Path:
    info = {"N_t": codebook.n_leds, "T": codebook.n_slots, "N_S": codebook.n_active,
            "p1": codebook.p1, "method": codebook.selection_method, **(meta or {})}
    n = codebook.n_leds * codebook.n_slots
    header = ["z"] + [f"c{i}" for i in range(n)]
    rows = [[p.combinadic_index, *np.asarray(p.cells).ravel().astype(int).tolist()]
            for p in codebook.patterns]
    return write_csv(path, header, rows, info)


def read_codebook(path) -> Codebook:
    meta, _, rows = read_csv(path)
    try:
        n_leds, n_slots, n_active, p1 = (int(meta[k]) for k in ("N_t", "T", "N_S", "p1"))
    except KeyError as exc:
        raise ValidationError(f"{path}: missing codebook field {exc}") from exc
    pats = []
    for r in rows:
        p = ActivationPattern.from_index(int(r[0]), n_leds, n_slots, n_active)
        bits = np.array([int(v) for v in r[1:]]).reshape(n_leds, n_slots)
        if not np.array_equal(bits, np.asarray(p.cells)):
            raise ValidationError(f"{path}: cells do not match index {r[0]}")
        pats.append(p)
    return Codebook(tuple(pats), p1, meta.get("method", "imported"), n_leds, n_slots, n_active)


def write_constellation(path, const: PamConstellation, meta: dict | None = None) -> Path:
    info = {"lambda": const.scale, "B_L": const.bias, **(meta or {})}
    rows = [[m + 1, s] for m, s in enumerate(const.levels)]
    return write_csv(path, ["m", "s_m"], rows, info)


def write_ber_curve(path, curve, meta: dict | None = None) -> Path:
    rows = [[p.snr_db, p.ber, p.bit_errors, p.bits, p.stderr] for p in curve.points]
    return write_csv(path, list(curve.FIELDS), rows, meta)


def write_ns_table(path, selection, meta: dict | None = None) -> Path:
    info = {"chosen": selection.chosen, **(meta or {})}
    return write_csv(path, list(NsRow.FIELDS), [r.as_tuple() for r in selection.rows], info)
