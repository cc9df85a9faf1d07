"""Walk through the fold of the scalar Stommel model.

Locates the upper fold at m = 7.5, reports the bifurcation numbers, matches
the extended normal form on both sides of the fold and builds the conjugacy
at one fold distance.

    python3 demos/stommel_fold.py
"""

from __future__ import annotations

import math

from saddlenode import builtin, conjugate_to_normal_form, locate_saddle_node, normal_form_curve


def main():
    model = builtin("stommel1d", m=7.5)
    sn = locate_saddle_node(model, 0.9, 0.95)
    print(f"fold at y* = {sn.x:.9f}, p* = {sn.mu:.9f}")
    print(f"p0^2 = {sn.p0sq:.9f}  (sqrt(33.75) = {math.sqrt(33.75):.9f})")
    print(f"a0   = {sn.a0:.9f}  (-1/4.5 = {-1 / 4.5:.9f})")

    mus = [-1e-3, -1e-4] + [2.0**-k * 1e-2 for k in range(6)]
    curve = normal_form_curve(model, sn, mus)
    print("\n        mu              nu        nu/(p0^2 mu)          a")
    for s in curve.samples:
        print(f"{s.mu:12.4e}  {s.nu:14.6e}  {s.nu / (sn.p0sq * s.mu):16.12f}  {s.a:12.9f}")

    res = conjugate_to_normal_form(model, sn, 1e-3)
    print(f"\nconjugacy at mu = 1e-3 onto nu = {res.matched.nu:.6e}, a = {res.matched.a:.6f}")
    for k, s in enumerate(res.samples):
        lo, hi = s.interval
        print(f"  piece {k}: [{lo:.5f}, {hi:.5f}]  max defect {s.defect.max:.1e}  "
              f"p90 {s.defect.p90:.1e}  monotone {s.monotone}")


if __name__ == "__main__":
    main()
