"""Two-parameter continuation of fold curves of planar systems.

The fold curve is the solution set of ``H(x, y, p, m) = (F, G, det J) = 0``,
a curve in four unknowns.  It is traced by pseudo-arclength continuation with
a secant predictor and a Newton corrector; the centre-manifold numbers are
computed at every accepted point.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .centre_manifold import FoldError, fold_residual, jordanize, cm_reduce, polish_fold
from .models import PlanarModel2P, builtin
from .saddle_node import ConvergenceError, GenericityError, locate_saddle_node, takens_numbers

__all__ = [
    "BranchPoint",
    "Branch",
    "ContinuationError",
    "analytic_locus_stommel",
    "seed_point",
    "continue_branch",
    "trace_branch",
    "analytic_branch_1d",
    "branch_numbers",
    "DS_MIN",
    "DS_MAX",
]

DS_MIN = 1e-4
DS_MAX = 0.2
DS_INIT = 0.05
CORRECTOR_MAXITER = 8
EASY_ITER = 3
EASY_STREAK = 4
CUSP_TOL = 1e-8
DEFAULT_M_RANGE = (3.2, 12.0)
HOMOTOPY_START = 1e6


class ContinuationError(RuntimeError):
    pass


@dataclass(frozen=True)
class BranchPoint:
    m: float
    p: float
    x: float
    y: float
    lam: float = math.nan
    p0sq: float = math.nan
    a0: float = math.nan
    b1: float = math.nan  # quadratic coefficient on the centre manifold
    step: float = 0.0  # arclength step that produced the point
    iterations: int = 0

    def as_row(self) -> dict[str, float]:
        return {"m": self.m, "p": self.p, "x": self.x, "y": self.y, "lambda": self.lam,
                "p0sq": self.p0sq, "a0": self.a0}

    @property
    def z(self) -> np.ndarray:
        return np.array([self.x, self.y, self.p, self.m])


@dataclass
class Branch:
    points: list[BranchPoint]
    termination: str  # 'range-end' | 'cusp-suspect' | 'step-failure'
    message: str = ""
    model: PlanarModel2P | None = field(default=None, repr=False)

    @property
    def m(self) -> np.ndarray:
        return np.array([q.m for q in self.points])

    @property
    def p(self) -> np.ndarray:
        return np.array([q.p for q in self.points])

    @property
    def complete(self) -> bool:
        return self.termination == "range-end"

    def point_at(self, m: float) -> BranchPoint:
        """Fold point at exactly ``m``, polished from the neighbouring branch points."""
        ms = self.m
        if not ms.min() - 1e-12 <= m <= ms.max() + 1e-12:
            raise ValueError(f"m={m} outside the branch range [{ms.min()}, {ms.max()}]")
        order = np.argsort(ms)
        guess = [np.interp(m, ms[order], np.array([getattr(q, k) for q in self.points])[order]) for k in "xyp"]
        return _evaluate(self.model, *polish_fold(self.model, *guess, m), m)


def analytic_locus_stommel(m: float) -> tuple[float, float, float, float]:
    """``(p+, p-, y+, y-)`` of the large-alpha Stommel folds."""
    if not m > 3:
        raise ValueError("the fold pair exists only for m > 3")
    r = 1.0 - 3.0 / m
    k = r**1.5
    p_plus = 2.0 / 3.0 + (2.0 * m / 27.0) * (1.0 - k)
    p_minus = 2.0 / 3.0 + (2.0 * m / 27.0) * (1.0 + k)
    sq = math.sqrt(r)
    return p_plus, p_minus, (2.0 + sq) / 3.0, (2.0 - sq) / 3.0


def _evaluate(model: PlanarModel2P, x, y, p, m, step=0.0, iterations=0) -> BranchPoint:
    J = jordanize(model, x, y, p, m)
    red = cm_reduce(J, tol=CUSP_TOL)
    return BranchPoint(m=float(m), p=float(p), x=float(x), y=float(y), lam=red.lam,
                       p0sq=red.p0sq, a0=red.a0, b1=J.b["b1"], step=step, iterations=iterations)


def seed_point(model: PlanarModel2P, m: float, which: str = "upper", *, guess=None, steps: int = 24) -> BranchPoint:
    """Fold point at ``m`` from the large-alpha locus, followed by a homotopy in alpha.

    Models without the ``homotopy: alpha`` hint need ``guess = (x, y, p)``.
    """
    if guess is None:
        if model.hints.get("homotopy") != "alpha":
            raise ContinuationError(f"model {model.name} has no seeding rule; supply a guess (x, y, p)")
        p_plus, p_minus, y_plus, y_minus = analytic_locus_stommel(m)
        if which not in ("upper", "lower"):
            raise ValueError("which must be 'upper' or 'lower'")
        x, y, p = 1.0, (y_plus if which == "upper" else y_minus), (p_plus if which == "upper" else p_minus)
        target = float(model.constants["alpha"])
        for alpha in np.geomspace(max(HOMOTOPY_START, target), target, steps):
            # F and det J carry a factor alpha, so their rounding floor grows with it
            x, y, p = polish_fold(model.with_constants(alpha=float(alpha)), x, y, p, m,
                                  scale=max(1.0, 1e-3 * alpha))
    else:
        x, y, p = guess
    x, y, p = polish_fold(model, x, y, p, m)
    return _evaluate(model, x, y, p, m)


def _tangent(DH: np.ndarray, previous: np.ndarray | None) -> np.ndarray:
    _, _, vt = np.linalg.svd(DH)
    t = vt[-1]
    if previous is not None and t @ previous < 0:
        t = -t
    return t / np.linalg.norm(t)


def _correct(model, z_pred, t):
    """Newton on ``[H(z); t . (z - z_pred)] = 0``."""
    z = z_pred.copy()
    for it in range(1, CORRECTOR_MAXITER + 1):
        H, DH = fold_residual(model, *z)
        if not np.all(np.isfinite(H)):
            return None, it
        A = np.vstack([DH, t])
        rhs = -np.concatenate([H, [t @ (z - z_pred)]])
        try:
            dz = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            return None, it
        z = z + dz
        if np.max(np.abs(dz)) < 1e-13 * max(1.0, np.max(np.abs(z))):
            H, _ = fold_residual(model, *z)
            if np.max(np.abs(H[:2])) < 1e-10 and abs(H[2]) < 1e-9:
                return z, it
    H, _ = fold_residual(model, *z)
    if np.all(np.isfinite(H)) and np.max(np.abs(H[:2])) < 1e-11 and abs(H[2]) < 1e-10:
        return z, CORRECTOR_MAXITER
    return None, CORRECTOR_MAXITER


def continue_branch(
    model: PlanarModel2P,
    start: BranchPoint,
    m_end: float,
    *,
    ds: float = DS_INIT,
    ds_min: float = DS_MIN,
    ds_max: float = DS_MAX,
    max_points: int = 20000,
) -> Branch:
    """Follow the fold curve from ``start`` until ``m`` reaches ``m_end``."""
    if not ds_min <= ds <= ds_max:
        raise ValueError("initial step outside [ds_min, ds_max]")
    direction = 1.0 if m_end >= start.m else -1.0
    points = [start]
    z = start.z
    _, DH = fold_residual(model, *z)
    t = _tangent(DH, None)
    if t[3] * direction < 0:
        t = -t
    easy = 0
    prev_z = None
    while len(points) < max_points:
        if direction * (m_end - z[3]) <= 1e-12:
            return Branch(points, "range-end", model=model)
        # secant predictor once two points exist, tangent otherwise
        if prev_z is not None:
            sec = z - prev_z
            t = sec / np.linalg.norm(sec)
        z_pred = z + ds * t
        z_new, iters = _correct(model, z_pred, t)
        if z_new is None or (z_new - z) @ t <= 0:
            ds *= 0.5
            easy = 0
            if ds < ds_min:
                return Branch(points, "step-failure", f"corrector failed at m={z[3]:.6g} with ds < {ds_min:g}",
                              model=model)
            continue
        if direction * (z_new[3] - m_end) > 0:
            # overshoot: land exactly on the range end with m fixed
            frac = (m_end - z[3]) / (z_new[3] - z[3])
            guess = z + frac * (z_new - z)
            try:
                x, y, p = polish_fold(model, guess[0], guess[1], guess[2], m_end)
            except ConvergenceError as exc:
                return Branch(points, "step-failure", str(exc), model=model)
            z_new = np.array([x, y, p, m_end])
        if direction * (z_new[3] - z[3]) <= 0:
            return Branch(points, "cusp-suspect", f"fold curve turns back in m near m={z[3]:.6g}", model=model)
        try:
            bp = _evaluate(model, *z_new, step=float(ds), iterations=iters)
        except GenericityError as exc:
            return Branch(points, "cusp-suspect", str(exc), model=model)
        except FoldError as exc:
            return Branch(points, "step-failure", str(exc), model=model)
        if bp.b1 * points[-1].b1 < 0:
            return Branch(points, "cusp-suspect", f"b1 changes sign between m={z[3]:.6g} and m={bp.m:.6g}",
                          model=model)
        points.append(bp)
        prev_z, z = z, z_new
        if iters <= EASY_ITER:
            easy += 1
            if easy >= EASY_STREAK:
                ds = min(2.0 * ds, ds_max)
                easy = 0
        else:
            easy = 0
    return Branch(points, "step-failure", "too many points", model=model)


def trace_branch(
    model: PlanarModel2P,
    which: str = "upper",
    m_range: tuple[float, float] = DEFAULT_M_RANGE,
    *,
    m_seed: float | None = None,
    guess=None,
    ds: float = DS_INIT,
) -> Branch:
    """Seed inside ``m_range`` and continue to both ends; points ordered by ``m``."""
    lo, hi = sorted(map(float, m_range))
    if m_seed is None:
        m_seed = min(max(7.5, lo), hi)
    start = seed_point(model, m_seed, which, guess=guess)
    down = continue_branch(model, start, lo, ds=ds)
    up = continue_branch(model, start, hi, ds=ds)
    pts = list(reversed(down.points[1:])) + up.points
    for b in (down, up):
        if b.termination != "range-end":
            return Branch(pts, b.termination, b.message, model=model)
    return Branch(pts, "range-end", model=model)


def trace_both(model: PlanarModel2P, m_range=DEFAULT_M_RANGE, *, jobs: int = 1) -> dict[str, Branch]:
    """Upper and lower fold branches, concurrently when ``jobs > 1``."""
    names = ("upper", "lower")
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=min(jobs, 2)) as pool:
            futs = {n: pool.submit(trace_branch, model, n, m_range) for n in names}
            return {n: f.result() for n, f in futs.items()}
    return {n: trace_branch(model, n, m_range) for n in names}


def analytic_branch_1d(ms, which: str = "upper", m_model=None) -> Branch:
    """Large-alpha limit: fold points of the scalar Stommel model along ``ms``."""
    pts = []
    for m in ms:
        p_plus, p_minus, y_plus, y_minus = analytic_locus_stommel(m)
        y0, p0 = (y_plus, p_plus) if which == "upper" else (y_minus, p_minus)
        model = (m_model or builtin("stommel1d")).with_constants(m=float(m))
        sn = locate_saddle_node(model, y0, p0)
        p0sq, a0 = takens_numbers(sn.bundle)
        pts.append(BranchPoint(m=float(m), p=sn.mu, x=1.0, y=sn.x, p0sq=p0sq, a0=a0))
    return Branch(pts, "range-end")


def branch_numbers(branch: Branch) -> np.ndarray:
    """Rows ``(m, p*, p0^2, 1/a0)``."""
    return np.array([[q.m, q.p, q.p0sq, (1.0 / q.a0 if q.a0 != 0 else math.inf)] for q in branch.points])
