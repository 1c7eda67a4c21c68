"""Floor illuminance uniformity for balanced and unbalanced codebooks."""

from gdcvlc import GridSpec, RoomGeometry, build_codebook, illuminance_map, nuir, uir
from gdcvlc.illumination import activation_probability, nonspatial_map

geo = RoomGeometry()
grid = GridSpec(nx=41, ny=41)
eta_e = 0.8
maps = {m: illuminance_map(geo, build_codebook(4, 2, 5, 5, m), eta_e, grid) for m in ("incremental", "sequential")}
ref = nonspatial_map(geo, maps["incremental"], eta_e)
for name, m in maps.items():
    probs = activation_probability(build_codebook(4, 2, 5, 5, name))
    print(f"{name:>11}: LED activation probabilities {probs.round(3).tolist()}, "
          f"UIR {uir(m):.3f}, normalised {nuir(m, ref):.3f}")
