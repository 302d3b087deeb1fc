"""Trace a fan of THz rays through the canonical disk-with-rectangle object
and look at how they bend and lose intensity at each interface.

Run:  python demos/ray_bending.py
Writes ray_bending.png next to this script when matplotlib is available.
"""

import math
from pathlib import Path

import numpy as np

from thztomo import GridSpec, circle_with_rectangle, interfaces_of, rasterize, trace

R = 70.5

regions = circle_with_rectangle()
grid = GridSpec.square(R, 282)
field = rasterize(regions, grid)
interfaces = interfaces_of(regions, R=R)

print("object: disk r=50 mm n=1.4 with embedded 25x20 mm rectangle n=1.7")
print(f"interfaces: {len(interfaces)} curves, {len(interfaces.corners)} corners\n")

# a horizontal fan of rays entering from the left (phi = 3*pi/2 makes the
# travel direction (1, 0); s is the vertical offset of each ray)
offsets = np.linspace(-45.0, 45.0, 13)
paths = [trace(interfaces, field, 3 * math.pi / 2, s) for s in offsets]

print(f"{'s (mm)':>8} {'crossings':>10} {'C_abs':>8}  per-event (gamma1 -> gamma2, rho)")
for s, path in zip(offsets, paths):
    events = ", ".join(
        f"{math.degrees(ev.refraction.gamma1):.1f}->{math.degrees(ev.refraction.gamma2):.1f} deg"
        f" rho={ev.refraction.rho:.3f}"
        for ev in path.events)
    print(f"{s:8.1f} {path.n_crossings:10d} {path.c_abs:8.4f}  {events}")

# the central ray passes every interface at normal incidence and stays
# straight; off-center rays bend more the closer they graze the disk edge
central = paths[len(paths) // 2]
assert central.n_crossings >= 2
assert all(abs(p.phi - central.partials[0].phi) < 1e-9 for p in central.partials)

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("\nmatplotlib not installed; skipping the figure")
else:
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.imshow(field.n_minus_1 + 1.0, origin="lower", cmap="bone",
              extent=[-R, R, -R, R])
    for path in paths:
        poly = path.polyline()
        ax.plot(poly[:, 0], poly[:, 1], color="orange", lw=0.9)
    ax.add_artist(plt.Circle((0, 0), R, fill=False, color="gray", ls=":"))
    ax.set_title("refracted ray paths (straight rays would be horizontal)")
    ax.set_xlabel("x (mm)")
    ax.set_ylabel("y (mm)")
    out = Path(__file__).with_name("ray_bending.png")
    fig.savefig(out, dpi=140, bbox_inches="tight")
    print(f"\nwrote {out}")
