"""Monte Carlo bit error rate against the union bound."""

from gdcvlc import RoomGeometry, StopRule, ber_monte_carlo, build_channel_matrix, design_for, snr_to_n0, union_bound

H = build_channel_matrix(RoomGeometry())
d = design_for(4, 2, 5, 0.5, 8, 0.1, 2.0)
curve = ber_monte_carlo(H, d.codebook, d.constellation, [10, 15, 20, 25],
                        stop=StopRule(min_errors=200, max_matrices=200_000), seed=1)
for pt in curve.points:
    n0 = snr_to_n0(pt.snr_db, H, d.codebook, d.constellation)
    ub = union_bound(H, d.codebook, d.constellation, n0)
    print(f"{pt.snr_db:>4.0f} dB: simulated {pt.ber:.3e} (+/- {pt.stderr:.1e}, {pt.bit_errors} errors), bound {ub:.3e}")
