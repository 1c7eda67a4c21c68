"""Line-of-sight gains for the default 4 m x 4 m room with four ceiling LEDs."""

import numpy as np

from gdcvlc import RoomGeometry, build_channel_matrix, lambertian_order

geo = RoomGeometry()
H = build_channel_matrix(geo)

print(f"Lambertian order for a 60 deg half-power angle: {lambertian_order(60.0):.3f}")
print("H (rows = photodetectors, columns = LEDs):")
print(np.array2string(H.gains, formatter={"float": lambda v: f"{v:.4e}"}))
print("Zeros mark LEDs that each detector sees beyond its 40 deg field of view.")
