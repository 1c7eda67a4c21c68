"""Activation patterns: combinadic indexing and the two pattern selectors."""

from gdcvlc import build_codebook, combinadic_decode, combinadic_encode
from gdcvlc.codebook import activation_variance, sequence_to_pattern

n_leds, n_slots, n_active = 4, 2, 4
z = 37
seq = combinadic_decode(z, n_active, n_leds * n_slots)
print(f"z={z} -> cells {seq} -> z={combinadic_encode(seq)}")
print(sequence_to_pattern(seq, n_leds, n_slots))

for method in ("sequential", "incremental"):
    cb = build_codebook(n_leds, n_slots, n_active, 6, method)
    print(f"{method:>11}: per-LED activations {cb.totals.tolist()}, variance {activation_variance(cb):.2f}")
