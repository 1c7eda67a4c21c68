"""Dimming target to active-cell count, per-cell power and PAM levels."""

from gdcvlc import optimal_constellation, resolve_config
from gdcvlc.signal import eligible_ns_range

eta = 0.35
for ns in eligible_ns_range(eta, 4, 2):
    cfg = resolve_config(4, 2, ns, eta, 8, current_min=0.1, current_max=2.0)
    c = optimal_constellation(cfg)
    levels = ", ".join(f"{s:.3f}" for s in c.levels[:4]) + (" ..." if c.size > 4 else "")
    print(f"N_S={ns}: p1={cfg.index_bits} M={cfg.modulation_order:>3} "
          f"eta_e={cfg.element_power:.3f} spacing={c.scale:.4f} A levels [{levels}]")
