"""Small-cap perturbations under one application of the operator.

A bump supported on a spherical cap of width w, normalized to unit sup norm,
comes out of the operator with sup norm scaling like w^(4/(d+3)) and gradient
norm scaling like w^(2/(d+3)) as w shrinks.  The exponents are read off a
log-log fit across a geometric ladder of widths.
"""

from ibodylab import cap_scaling_exponents

for d in (3, 4):
    res = cap_scaling_exponents(d)
    print(f"\nd = {d}")
    print(f"{'width':>8} {'sup':>12} {'grad':>12}")
    for w, s, g in zip(res.widths, res.sup_values, res.grad_values):
        print(f"{w:>8.4f} {s:>12.5e} {g:>12.5e}")
    print(f"sup exponent  {res.exponent_sup:.4f}   expect {4 / (d + 3):.4f}")
    print(f"grad exponent {res.exponent_grad:.4f}   expect {2 / (d + 3):.4f}")
