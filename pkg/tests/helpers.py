"""Shared test utilities: recording oracles and brute-force geometry checks.

Everything here is deliberately independent of the package's own
algorithms so it can serve as an oracle for them.
"""

import numpy as np


class RecordingOracle:
    """Wraps an oracle and logs every (point, verdict) pair."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = []

    def __call__(self, point):
        verdict = self.inner(point)
        self.calls.append((np.array([float(x) for x in point]), verdict))
        return verdict

    @property
    def stats(self):
        return self.inner.stats


def interval_oracle(a: float, b: float):
    """1-d closed-interval membership, the analytic boundary oracle."""

    def oracle(point):
        return a <= point[0] <= b

    oracle.a = a
    oracle.b = b
    return oracle


def point_in_polygon(q, vertices, tol=1e-9):
    """Exact containment test for a convex CCW polygon via edge crossings."""
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    for i in range(n):
        p1 = v[i]
        p2 = v[(i + 1) % n]
        cross = (p2[0] - p1[0]) * (q[1] - p1[1]) - (p2[1] - p1[1]) * (q[0] - p1[0])
        if cross < -tol:
            return False
    return True


def brute_force_hull_vertices(points):
    """Extreme points of a 2-d cloud by the O(n^3) directed-edge method.

    A directed edge (i, j) is on the hull iff every other point lies
    strictly left of it; hull vertices are the endpoints of such edges.
    Assumes points in general position (no duplicates, no 3 collinear).
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    extreme = set()
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            d = pts[j] - pts[i]
            ok = True
            for m in range(n):
                if m in (i, j):
                    continue
                cross = d[0] * (pts[m][1] - pts[i][1]) - d[1] * (pts[m][0] - pts[i][0])
                if cross < 0:
                    ok = False
                    break
            if ok:
                extreme.add(i)
                extreme.add(j)
    return {tuple(pts[i]) for i in extreme}


def rotated_rectangle_corners(center, half_extents, gamma_deg):
    """Forward-rotated 2-d rectangle corners, CCW order."""
    g = np.radians(gamma_deg)
    rot = np.array([[np.cos(g), -np.sin(g)], [np.sin(g), np.cos(g)]])
    ex, ey = half_extents
    corners = np.array([[ex, ey], [-ex, ey], [-ex, -ey], [ex, -ey]])
    return np.asarray(center) + corners @ rot.T
