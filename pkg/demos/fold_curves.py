"""Fold curves of the two-box Stommel model for a stiff and a soft relaxation.

For alpha = 3600 the folds sit on the closed-form locus of the scalar model;
for alpha = 36 they move away and the two folds no longer share their
bifurcation numbers.  Writes ``fold_curves.svg`` into the given directory.

    python3 demos/fold_curves.py [outdir]
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from saddlenode import builtin
from saddlenode.continuation import analytic_branch_1d, analytic_locus_stommel, branch_numbers, trace_both
from saddlenode.svg import Panel, Series, render


def main(outdir="."):
    m_range = (3.2, 12.0)
    panels = [Panel("fold curves", "m", "p", []), Panel("p0^2", "m", "p0^2", []), Panel("1/a0", "m", "1/a0", [])]
    for alpha in (3600.0, 36.0):
        branches = trace_both(builtin("stommel2d", alpha=alpha), m_range, jobs=2)
        for name, b in branches.items():
            k = 0 if name == "upper" else 1
            t = branch_numbers(b)
            dev = max(abs(q.p - analytic_locus_stommel(q.m)[k]) for q in b.points if q.m >= 4)
            print(f"alpha={alpha:6.0f} {name:5s}: m in [{b.m.min():.3f}, {b.m.max():.3f}] "
                  f"({b.termination}), max |p - p_locus| over m >= 4: {dev:.2e}")
            for j, panel in enumerate(panels):
                panel.series.append(Series(f"{name} a={alpha:g}", list(t[:, 0]), list(t[:, j + 1])))
        up, lo = branches["upper"].point_at(7.5), branches["lower"].point_at(7.5)
        print(f"  at m = 7.5: p0^2 {up.p0sq:.6f} / {lo.p0sq:.6f}, a0 {up.a0:.6f} / {lo.a0:.6f}")
    ms = np.linspace(3.2, 12.0, 60)
    limit = branch_numbers(analytic_branch_1d(ms))
    for j, panel in enumerate(panels):
        panel.series.append(Series("alpha -> inf", list(limit[:, 0]), list(limit[:, j + 1]), color="#000000"))
    path = Path(outdir) / "fold_curves.svg"
    path.write_text(render(panels), encoding="utf-8")
    print(f"wrote {path}")


if __name__ == "__main__":
    main(*sys.argv[1:2])
