"""Quantifying an approximate failure region against the ground truth.

The approximate region is the convex hull of the harvested points. Its
volume is exact in one and two dimensions (interval length, shoelace
area of the monotone-chain hull) and Monte-Carlo estimated from d = 3 up
(uniform samples in the hull's bounding box, in-hull fraction times box
volume, with the binomial standard error reported alongside). The
effectiveness score is the ratio of that volume to the ground-truth
region volume.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .geometry import InputDomain
from .oracles import RegionSpec
from .search import BoundaryHarvest

log = logging.getLogger(__name__)

# LP feasibility tolerance for convex-combination membership.
FEASIBILITY_TOL = 1e-9


def convex_hull_2d(points) -> np.ndarray:
    """Monotone-chain convex hull, counter-clockwise, collinear vertices dropped.

    Degenerate inputs yield a 2-point segment or a single point.
    """
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if pts.shape[1] != 2:
        raise ValueError(f"convex_hull_2d needs 2-d points, got shape {pts.shape}")
    n = len(pts)
    if n <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 2:  # every point collinear, keep the two extremes
        return np.array([pts[0], pts[-1]])
    return np.array(hull)


def polygon_area(vertices) -> float:
    """Shoelace area of a simple polygon given in order."""
    v = np.asarray(vertices, dtype=float)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, 1)) - np.dot(y, np.roll(x, 1))))


def point_in_hull(q, vertices, tol: float = FEASIBILITY_TOL) -> bool:
    """True iff ``q`` is a convex combination of ``vertices``.

    Decided by phase-1 simplex feasibility of {lam >= 0, sum lam = 1,
    V^T lam = q}, with Bland's rule against cycling. A triggered cycling
    guard logs a warning and returns a conservative False.
    """
    V = np.asarray(vertices, dtype=float)
    q = np.asarray(q, dtype=float)
    n, d = V.shape
    m = d + 1
    A = np.vstack([V.T, np.ones(n)])
    b = np.concatenate([q, [1.0]])
    flip = b < 0
    A[flip] *= -1.0
    b = np.where(flip, -b, b)

    # Tableau [A | I | b] with an all-artificial starting basis.
    T = np.hstack([A, np.eye(m), b[:, None]])
    basis = list(range(n, n + m))
    cost = np.concatenate([np.zeros(n), np.ones(m)])
    red = cost - T[:, :-1].sum(axis=0)  # reduced costs, basis cost all ones
    obj = float(b.sum())

    max_iter = 50 * (n + m)
    for _ in range(max_iter):
        enter = -1
        for j in range(n + m):  # Bland: lowest eligible index
            if red[j] < -1e-12:
                enter = j
                break
        if enter < 0:
            break
        col = T[:, enter]
        best_i, best_ratio = -1, np.inf
        for i in range(m):
            if col[i] > 1e-12:
                ratio = T[i, -1] / col[i]
                if ratio < best_ratio - 1e-15 or (
                        abs(ratio - best_ratio) <= 1e-15
                        and (best_i < 0 or basis[i] < basis[best_i])):
                    best_i, best_ratio = i, ratio
        if best_i < 0:  # unbounded: cannot happen for phase 1, bail out
            break
        piv = T[best_i, enter]
        T[best_i] /= piv
        for i in range(m):
            if i != best_i and T[i, enter] != 0.0:
                T[i] -= T[i, enter] * T[best_i]
        red -= red[enter] * T[best_i, :-1]
        basis[best_i] = enter
        obj = float(sum(T[i, -1] for i in range(m) if basis[i] >= n))
        if obj <= 0.0:
            break
    else:
        log.warning("point_in_hull cycling guard hit (n=%d, d=%d); returning False", n, d)
        return False
    scale = max(1.0, float(np.abs(b).max()))
    return obj <= tol * scale


def _facet_membership(queries: np.ndarray, equations: np.ndarray, tol: float) -> np.ndarray:
    """Half-space tests against hull facet equations, chunked for cache size."""
    A = equations[:, :-1].T
    b = equations[:, -1]
    chunk = max(1, 2_000_000 // len(equations))
    out = np.empty(len(queries), dtype=bool)
    for start in range(0, len(queries), chunk):
        block = queries[start:start + chunk]
        out[start:start + chunk] = (block @ A + b <= tol).all(axis=1)
    return out


def points_in_hull(queries, vertices, tol: float = FEASIBILITY_TOL) -> np.ndarray:
    """Vectorized membership for many queries against one vertex set.

    Facet half-space tests on the qhull-computed hull (unit normals, so
    ``tol`` is a distance, matching the LP feasibility tolerance). Falls
    back to the LP when the vertex set has no full-dimensional hull.
    """
    V = np.asarray(vertices, dtype=float)
    Q = np.atleast_2d(np.asarray(queries, dtype=float))
    try:
        hull = ConvexHull(V)
    except QhullError:
        return np.array([point_in_hull(q, V, tol) for q in Q])
    return _facet_membership(Q, hull.equations, tol)


def _full_dimensional(points: np.ndarray) -> bool:
    centered = points - points[0]
    return np.linalg.matrix_rank(centered, tol=1e-12) >= points.shape[1]


def hull_volume(points, mc_samples: int = 200_000,
                rng: np.random.Generator | None = None,
                force_monte_carlo: bool = False) -> tuple[float, float]:
    """(volume, stderr) of the convex hull of ``points``.

    Exact for d <= 2 (stderr 0). For d >= 3 the volume is Monte-Carlo
    estimated and stderr is the binomial standard error of the estimate.
    Fewer than d+1 affinely independent points give volume 0.
    ``force_monte_carlo`` routes d = 2 through the Monte-Carlo estimator
    as well (cross-validation against the exact area).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError(f"points must be (n, d), got shape {pts.shape}")
    d = pts.shape[1]
    if d == 1:
        return float(pts.max() - pts.min()), 0.0
    if d == 2 and not force_monte_carlo:
        return polygon_area(convex_hull_2d(pts)), 0.0
    if len(pts) < d + 1 or not _full_dimensional(pts):
        return 0.0, 0.0
    if rng is None:
        raise ValueError("rng is required for the Monte-Carlo volume (d >= 3)")
    try:
        hull = ConvexHull(pts)
    except QhullError:  # no full-dimensional hull despite the rank check
        return 0.0, 0.0
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    box_volume = float(np.prod(hi - lo))
    samples = rng.uniform(lo, hi, size=(mc_samples, d))
    p = float(_facet_membership(samples, hull.equations, FEASIBILITY_TOL).mean())
    stderr = box_volume * float(np.sqrt(p * (1.0 - p) / mc_samples))
    return p * box_volume, stderr


@dataclass(frozen=True)
class RegionMeasure:
    """Volume comparison of the harvested region against the ground truth."""

    s_afr: float
    s_rfr: float
    s_ratio: float
    stderr: float
    method: str  # exact-1d | exact-2d | monte-carlo
    degenerate: bool = False


def measure_run(harvest: BoundaryHarvest, spec: RegionSpec, domain: InputDomain,
                mc_samples: int = 200_000,
                rng: np.random.Generator | None = None) -> RegionMeasure:
    """Measure one harvest: hull volume of boundary plus source inputs over
    the ground-truth region volume."""
    pts = np.asarray(list(harvest.boundary_inputs) + list(harvest.source_inputs))
    if pts.size == 0:
        raise ValueError("harvest holds no points")
    d = domain.dimension
    volume, stderr = hull_volume(pts, mc_samples=mc_samples, rng=rng)
    s_rfr = spec.theta * domain.volume
    method = {1: "exact-1d", 2: "exact-2d"}.get(d, "monte-carlo")
    return RegionMeasure(
        s_afr=volume,
        s_rfr=s_rfr,
        s_ratio=volume / s_rfr,
        stderr=stderr,
        method=method,
        degenerate=volume == 0.0,
    )


def _axis_names(d: int) -> list[str]:
    if d <= 3:
        return ["x", "y", "z"][:d]
    return [f"x{i + 1}" for i in range(d)]


def inequality_report(points, form: str = "auto") -> str:
    """Describe the hull of ``points`` as a conjunction of inequalities.

    ``form="halfplanes"`` lists one linear inequality per 2-d hull edge;
    ``form="box"`` lists per-axis bounds in any dimension (equalities for
    collapsed axes). ``"auto"`` picks half-planes when the 2-d hull has
    an interior and the box form otherwise.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = pts.shape[1]
    if form not in ("auto", "halfplanes", "box"):
        raise ValueError(f"unknown form {form!r}")
    if form == "halfplanes" and d != 2:
        raise ValueError("half-plane form needs d = 2")
    hull = convex_hull_2d(pts) if d == 2 else None
    if form == "auto":
        form = "halfplanes" if d == 2 and hull is not None and len(hull) >= 3 else "box"

    if form == "box":
        names = _axis_names(d)
        lines = []
        for i, name in enumerate(names):
            lo, hi = float(pts[:, i].min()), float(pts[:, i].max())
            if lo == hi:
                lines.append(f"{name} = {lo:.6g}")
            else:
                lines.append(f"{lo:.6g} <= {name} <= {hi:.6g}")
        return "\n".join(lines)

    if len(hull) < 3:
        return inequality_report(pts, form="box")
    lines = []
    for idx in range(len(hull)):
        p = hull[idx]
        qv = hull[(idx + 1) % len(hull)]
        a = qv[1] - p[1]
        b = p[0] - qv[0]
        norm = float(np.hypot(a, b))
        a, b = a / norm, b / norm
        c = a * p[0] + b * p[1]
        lines.append(f"{a:.6g}*x + {b:.6g}*y <= {c:.6g}")
    return "\n".join(lines)
