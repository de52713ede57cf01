"""Minkowski, Alexandrov-Fenchel and Heintze-Karcher deficits.

Run with ``python3 demos/02_inequalities.py``.
"""

# %% [markdown]
# Each deficit vanishes on round slices and is positive on any other mean
# convex star-shaped surface.  We check a charged background at several
# radii, then a family of bumpy surfaces.

# %%
from __future__ import annotations

import numpy as np

from rnads import BackgroundParams, RadialProfile, build_mesh, evaluate, geometry_from_profile

p = BackgroundParams(n=3, eps=1, kappa=1.0, m=1.0, q=0.5)
mesh = build_mesh("sphere_axisym", 48)
print(f"horizon radius s0 = {p.s0:.12f}")

for lam in (1.0, 2.0, 5.0):
    prof = RadialProfile.slice(mesh, p, lam)
    rep = evaluate(geometry_from_profile(prof), prof)
    print(f"slice lambda = {lam}: minkowski {rep.minkowski_deficit:+.1e}  "
          f"af {rep.af_deficit:+.1e}  hk {rep.hk_residual:+.1e}")

# %% [markdown]
# Now perturb the slice lambda = 2 by growing multiples of P_2(cos theta).
# The deficits grow roughly quadratically in the amplitude.

# %%
u = np.cos(mesh.nodes["theta"])
p2 = 0.5 * (3 * u**2 - 1)
for amp in (0.01, 0.02, 0.05, 0.1):
    prof = RadialProfile.from_lambda(mesh, p, 2.0 * (1 + amp * p2))
    geom = geometry_from_profile(prof)
    rep = evaluate(geom, prof)
    print(f"amp {amp:4.2f}: min H {geom.H.min():.3f}  minkowski {rep.minkowski_deficit:.3e}  "
          f"af {rep.af_deficit:.3e}  hk {rep.hk_residual:.3e}")

# %% [markdown]
# A flat torus cross-section (eps = 0) works the same way.

# %%
pt = BackgroundParams(n=3, eps=0, kappa=1.0, m=1.0, q=0.3)
torus = build_mesh("torus", 24, eps=0)
x, y = torus.nodes["x"], torus.nodes["y"]
prof = RadialProfile.from_lambda(torus, pt, 2.0 * pt.s0 * (1 + 0.05 * np.cos(x) * np.sin(y)))
rep = evaluate(geometry_from_profile(prof), prof)
print(f"torus: minkowski {rep.minkowski_deficit:.3e}  af {rep.af_deficit:.3e}  "
      f"hk {rep.hk_residual:.3e}")
