"""Fold of the Fraedrich energy-balance model.

Compares the located fold with the closed forms ``mu_c = 4d/b^2`` and
``T_c = sqrt(2d/b)`` and lists the equilibria on either side of it.

    python3 demos/energy_balance.py
"""

from __future__ import annotations

import math

from saddlenode import builtin, find_all_stationary, locate_saddle_node


def main():
    model = builtin("fraedrich")
    c = model.constants
    sn = locate_saddle_node(model, 290.0, 1.0)
    print(f"a = {c['a']:.6e}  b = {c['b']:.6f}  d = {c['d']:.6e}")
    print(f"mu_c = {sn.mu:.9f}   4d/b^2      = {4 * c['d'] / c['b'] ** 2:.9f}")
    print(f"T_c  = {sn.x:.6f} K  sqrt(2d/b) = {math.sqrt(2 * c['d'] / c['b']):.6f} K")
    print(f"p0^2 = {sn.p0sq:.6e}, a0 = {sn.a0:.6e}")
    for mu in (sn.mu - 0.01, sn.mu + 0.01):
        pts = find_all_stationary(model, mu, 150.0, 400.0)
        desc = ", ".join(f"{p.x:.3f} K ({'stable' if p.stable else 'unstable'})" for p in pts) or "none"
        print(f"mu = {mu:.5f}: {desc}")


if __name__ == "__main__":
    main()
