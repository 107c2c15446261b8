"""Eigenvalues of the spherical Radon transform, two ways.

Every even-degree harmonic is an eigenfunction.  The spectral route tabulates
the eigenvalues from a two-term recurrence; the geometric route averages over
orthogonal subspheres and should land on the same numbers without ever seeing
the recurrence.
"""

import numpy as np

from ibodylab import ZonalProfile, radon_geometric_zonal, radon_multiplier

for d in (3, 4, 5, 7):
    mu = radon_multiplier(d, 12)
    print(f"\nd = {d}")
    print(f"{'k':>3} {'spectral':>14} {'geometric':>14} {'abs err':>10}")
    for k in range(0, 13, 2):
        c = np.zeros(13)
        c[k] = 1.0
        geo = float(radon_geometric_zonal(ZonalProfile.from_coeffs(d, c)).coeffs[k])
        print(f"{k:>3} {mu[k]:>14.10f} {geo:>14.10f} {abs(geo - mu[k]):>10.1e}")

# magnitude decay: |mu_k| ~ k^{-(d-2)/2} for large k
print("\nlog-log slope of |mu_k| between k = 64 and k = 512:")
for d in (3, 4, 5):
    mu = np.abs(radon_multiplier(d, 512))
    slope = (np.log(mu[512]) - np.log(mu[64])) / (np.log(512) - np.log(64))
    print(f"  d = {d}: {slope:+.3f}   (expect about {-(d - 2) / 2:+.1f})")
