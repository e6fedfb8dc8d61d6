"""d-dimensional vector primitives shared by all search strategies.

Points and orientations are plain float64 numpy arrays of shape (d,).
Orientations are unit vectors; every generator below normalizes its
output and keeps the element order fixed so seeded runs replay exactly.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError

UNIT_NORM_TOL = 1e-9


def as_point(coords) -> np.ndarray:
    """Coerce a coordinate sequence to a finite float64 vector."""
    p = np.asarray(coords, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise InvalidDimensionError(f"point must be a 1-d sequence, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"point has non-finite coordinates: {p}")
    return p


def unit(v) -> np.ndarray:
    """Normalize a vector to unit Euclidean norm."""
    v = np.asarray(v, dtype=float)
    n = math.sqrt(float(v @ v))
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


@dataclass(frozen=True)
class InputDomain:
    """Axis-aligned box with half-open per-axis bounds [lower_i, upper_i).

    Parameters
    ----------
    lower, upper : array-like
        Per-axis bounds; lower_i < upper_i is required on every axis.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_point(self.lower)
        hi = as_point(self.upper)
        if lo.shape != hi.shape:
            raise InvalidDimensionError("lower/upper dimension mismatch")
        if not np.all(lo < hi):
            raise ValueError(f"need lower < upper on every axis, got {lo} / {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, point) -> bool:
        """True iff lower_i <= p_i < upper_i for every axis."""
        lo = self.lower
        hi = self.upper
        for i in range(lo.size):
            x = point[i]
            if x < lo[i] or x >= hi[i]:
                return False
        return True

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        """Uniform point(s) in the box; shape (d,) or (size, d)."""
        if size is None:
            return rng.uniform(self.lower, self.upper)
        return rng.uniform(self.lower, self.upper, size=(size, self.dimension))


def unit_domain(d: int) -> InputDomain:
    """The unit hypercube [0, 1)^d used throughout the simulations."""
    if d < 1:
        raise InvalidDimensionError(f"d must be >= 1, got {d}")
    return InputDomain(np.zeros(d), np.ones(d))


def axis_orientations(d: int) -> list[np.ndarray]:
    """The 2d signed axis directions, ordered +e1, -e1, +e2, -e2, ...

    This is the fixed orientation set of the axis-only search strategy.
    """
    if d < 1:
        raise InvalidDimensionError(f"d must be >= 1, got {d}")
    out = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        out.append(e)
        out.append(-e)
    return out


def orthant_diagonal_orientations(d: int) -> list[np.ndarray]:
    """The 2^d orthant diagonals (+-1/sqrt(d), ..., +-1/sqrt(d)).

    The equal-angle diagonal bisects each orthant; sign patterns follow
    :func:`mirror_to_orthants` order (binary counting, bit i = sign of
    axis i). For d = 1 there are no orthant diagonals distinct from the
    axes, so the caller should fall back to :func:`axis_orientations`.
    """
    if d < 2:
        raise InvalidDimensionError(f"orthant diagonals need d >= 2, got {d}")
    diag = np.full(d, 1.0 / math.sqrt(d))
    return mirror_to_orthants(diag)


def mirror_to_orthants(v) -> list[np.ndarray]:
    """Map a first-orthant unit vector to every orthant by sign flips.

    Sign patterns are enumerated in binary-counting order: pattern m
    flips axis i iff bit i of m is set, so m = 0 reproduces ``v``.
    Exact zero components make some patterns coincide; duplicates are
    dropped, keeping the first occurrence, so fewer than 2^d vectors may
    be returned.
    """
    v = np.asarray(v, dtype=float)
    d = v.size
    if np.any(v < 0.0):
        raise ValueError(f"mirror source must be in the first orthant, got {v}")
    if abs(math.sqrt(float(v @ v)) - 1.0) > UNIT_NORM_TOL:
        raise ValueError(f"mirror source must be a unit vector, got |v|={np.linalg.norm(v)}")
    out = []
    seen = set()
    for mask in range(1 << d):
        w = v.copy()
        for i in range(d):
            if mask >> i & 1:
                w[i] = -w[i]
        key = tuple(w + 0.0)  # +0.0 canonicalizes -0.0
        if key not in seen:
            seen.add(key)
            out.append(w)
    return out


def cosine_distance(u, v) -> float:
    """1 - cos(angle between u and v); ranges over [0, 2]."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu = math.sqrt(float(u @ u))
    nv = math.sqrt(float(v @ v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine distance is undefined for the zero vector")
    c = float(u @ v) / (nu * nv)
    return 1.0 - max(-1.0, min(1.0, c))


def rotate_in_plane(p, center, gamma_deg: float, axes: tuple[int, int] = (0, 1)) -> np.ndarray:
    """Rigid rotation of ``p`` about ``center`` within one coordinate plane.

    Parameters
    ----------
    p, center : array-like
        Point and rotation center.
    gamma_deg : float
        Counter-clockwise angle in degrees (degrees at the interface,
        radians internally).
    axes : (int, int)
        Zero-based pair of distinct coordinate axes spanning the plane;
        all other coordinates pass through unchanged.
    """
    p = np.asarray(p, dtype=float)
    i, j = axes
    if i == j or not (0 <= i < p.size and 0 <= j < p.size):
        raise InvalidDimensionError(f"invalid rotation plane {axes} for d={p.size}")
    g = math.radians(gamma_deg)
    c, s = math.cos(g), math.sin(g)
    out = p.copy()
    di = p[i] - center[i]
    dj = p[j] - center[j]
    out[i] = center[i] + c * di - s * dj
    out[j] = center[j] + s * di + c * dj
    return out
