"""Hulls of the scaled complex Brownian trace, and the Loewner flow.

The even body of the two-dimensional walk is z - sqrt(kappa) B+ with
B+ = B1 + i B2, so the trace Gamma(t) = sqrt(kappa) B+_t lives in the plane
and its complement's bounded components define growing hulls.  This script
rasterizes the hulls, checks nesting in time, and runs the half-plane
Loewner flow where the kappa = 0 solution g_t = sqrt(z^2 + 4t) is exact.

Run with:  python3 demos/supertrace_hulls.py
"""

import numpy as np

from supersle.sde import loewner_flow, supertrace_hull, write_pgm

# ---------------------------------------------------------------------------
# 1. A supertrace hull raster.

kappa, T, dt, seed = 4.0, 1.0, 1e-3, 1
raster, trace = supertrace_hull(kappa, T, dt, seed, grid=128)
print(f"trace starts at {trace[0]}, ends at {trace[-1]:.4f}")
print(f"hull occupies {int(raster.occupancy.sum())} of "
      f"{raster.occupancy.size} cells in bounds {raster.bounds}")

write_pgm(raster, "demo_hull.pgm",
          config={"kappa": kappa, "T": T, "dt": dt, "seed": seed})
print("wrote demo_hull.pgm (P2 text raster, top row = largest imaginary part)")

# ---------------------------------------------------------------------------
# 2. Hulls are increasing in time (same driving path, same raster bounds).

bounds = (-4, 4, -4, 4)
early, _ = supertrace_hull(kappa, 0.5, dt, seed, grid=64, bounds=bounds)
late, _ = supertrace_hull(kappa, 1.0, dt, seed, grid=64, bounds=bounds)
assert np.all(late.occupancy[early.occupancy])
print("nesting: every cell of the T=0.5 hull is inside the T=1.0 hull")

# ---------------------------------------------------------------------------
# 3. Loewner flow sanity: kappa = 0 means constant driving, where
#    g_t(z) = sqrt(z^2 + 4t) (upper-half-plane branch) in closed form.

grid = np.array([0.5 + 1.0j, -1.0 + 1.0j, 3.0 + 0.5j, 1.0 + 2.0j])
res = loewner_flow(0.0, grid, T=1.0, dt=1e-4, seed=seed)
exact = np.sqrt(grid ** 2 + 4.0)
exact = np.where(exact.imag < 0, -exact, exact)
print(f"\nkappa=0 flow error vs sqrt(z^2+4t): "
      f"{np.max(np.abs(res.final_g - exact)):.2e}")

# Points on the imaginary axis are swallowed at t = |z|^2 / 4 exactly.
axis = 1j * np.linspace(0.4, 1.6, 4)
res = loewner_flow(0.0, axis, T=1.0, dt=1e-4, seed=seed)
for z, t in zip(axis, res.swallowed_time):
    print(f"  z = {z}: swallowed at t = {t:.4f} (exact {abs(z)**2/4:.4f})")

# ---------------------------------------------------------------------------
# 4. Larger kappa swallows more of the plane by a fixed horizon.

xs = np.linspace(-2, 2, 21)
ys = np.linspace(0.05, 2, 20)
grid = (xs[None, :] + 1j * ys[:, None]).ravel()
print()
for k in (1.0, 4.0, 8.0):
    res = loewner_flow(k, grid, T=1.0, dt=1e-3, seed=11)
    print(f"kappa={k}: swallowed fraction {res.swallowed.mean():.2f}")
