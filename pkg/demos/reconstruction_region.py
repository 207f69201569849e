"""
Where a single Gaussian signal becomes recoverable
==================================================

For one low-rank Gaussian component the vanishing-noise MMSE either
stalls at a positive floor or goes to zero, depending only on how the
feature counts compare with the covariance ranks. This script maps the
verdict over a grid of (m1, m2) and then checks a few cells numerically
by evaluating the closed-form MMSE at tiny noise for fresh random
kernels.
"""

import numpy as np

import gmmsi
from gmmsi import presets

pair = presets.coupled_gaussian_pair()
geo = gmmsi.geometry_summary(pair)
ranks = next(iter(geo.component_ranks.values()))
print(f"component rank triple (r_x1, r_x2, r_x) = {ranks.triple}")

# analytic verdict plus a numerical probe per cell: twenty kernels,
# noise 1e-10, median MMSE against the signal energy
grid = gmmsi.region_map(
    pair, range(0, 6), range(0, 6), predicates=("gaussian",),
    probe=gmmsi.ProbeSpec(sigma2=1e-10, kernels=20, seed=0),
)
verdict = grid.verdicts["gaussian"]

print("\nrecoverable (#) vs floor (.) over the feature grid, m1 down, m2 across:")
for m1 in range(5, -1, -1):
    row = "".join("#" if verdict[m1, m2] else "." for m2 in range(6))
    print(f"  m1={m1}: {row}")

tr = float(np.trace(pair.component((1, 1)).sigma_x1))
print(f"\nsignal energy tr(Sigma_x1) = {tr:.3f}")
print("median MMSE at sigma2=1e-10 on a diagonal of cells:")
for m in range(6):
    lo, hi = grid.probe_lo[m, m], grid.probe_hi[m, m]
    tag = grid.probe_outcome[m, m]
    print(f"  m1=m2={m}: [{lo:9.2e}, {hi:9.2e}]  {tag}")
