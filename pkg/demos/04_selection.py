"""Choosing the number of active cells with the three selection rules."""

from gdcvlc import RoomGeometry, build_channel_matrix, select_ns

H = build_channel_matrix(RoomGeometry())
for eta in (0.35, 0.5, 0.65, 0.8):
    picks = {}
    for method in ("mber", "mfd1", "mfd2"):
        sel = select_ns(H, eta, 8, 4, 2, 0.1, 2.0, method, snr_db=30.0 if method == "mber" else None)
        picks[method] = sel.chosen
    print(f"eta={eta}: " + "  ".join(f"{m}->N_S={n}" for m, n in picks.items()))

sel = select_ns(H, 0.5, 8, 4, 2, 0.1, 2.0, "mber", snr_db=30.0)
for row in sel.rows:
    print(f"  N_S={row.n_active}: union bound {row.union_bound:.3e}, d_free {row.d_free:.3e}")
