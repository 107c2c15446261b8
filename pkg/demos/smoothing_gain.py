"""How much tail energy one application of the transform removes.

Feed the transform a profile whose coefficients decay like k^{-2}, cut both
input and output above degree n, and compare tail energies.  The ratio falls
like n^{-(d-2)}: the transform is a smoothing operator of order (d-2)/2 in
the L^2 scale.
"""

import numpy as np

from ibodylab import smoothing_gain_experiment

for d in (3, 4, 5):
    res = smoothing_gain_experiment(d)
    print(f"\nd = {d}  (band {res.band_limit}, coefficient decay {res.decay})")
    print(f"{'cut n':>6} {'tail energy ratio':>18}")
    for n, r in zip(res.tail_indices, res.energy_ratios):
        print(f"{n:>6} {r:>18.6e}")
    print(f"energy slope {res.energy_slope:+.4f}  expect {-(d - 2):+d}")
    print(f"l2 slope     {res.l2_slope:+.4f}  expect {-(d - 2) / 2:+.1f}")
