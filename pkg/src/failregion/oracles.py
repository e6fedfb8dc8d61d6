"""Pass/fail verdict providers.

An oracle is any callable taking one point (a sequence of d floats) and
returning a bool verdict: True means the input is failure-causing, False
means it passes. Two providers live here:

* analytic simulated regions (rectangles/ellipsoids of configurable
  failure rate, compactness, and rotation placed inside the domain), and
* a wrapper that shells out to an external program per probe.

Callers never submit out-of-domain probes; the search layer pre-filters.
"""

import logging
import math
import shlex
import subprocess
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleRegionError, InvalidDimensionError, OracleUnavailableError
from .geometry import InputDomain, as_point

log = logging.getLogger(__name__)

SHAPES = ("rectangle", "ellipse")

# Relative tolerance on the derived region volume against theta * |D|.
VOLUME_RTOL = 1e-9


@dataclass
class OracleStats:
    """Per-run probe counters; owned by exactly one run at a time."""

    probe_count: int = 0
    fail_count: int = 0


def unit_ball_volume(d: int) -> float:
    """Volume of the d-dimensional unit ball (2, pi, 4pi/3, pi^2/2, ...)."""
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def derive_extents(shape: str, theta: float, delta: float, d: int,
                   domain_volume: float = 1.0) -> np.ndarray:
    """Per-axis half-lengths of a region with volume theta * domain_volume.

    The half-length pattern is (h, h*delta, ..., h*delta): the first axis
    is the short one. For rectangles the full edges are 2x these values
    and their product equals theta * domain_volume; for ellipsoids the
    half-lengths are the semi-axes and V_d * prod(r_i) equals the same
    volume. Raises InfeasibleRegionError when the longest full extent
    already exceeds the edge of a cube with the given volume (placement
    performs the exact containment check against the actual domain).
    """
    if shape not in SHAPES:
        raise ValueError(f"shape must be one of {SHAPES}, got {shape!r}")
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"theta must be in (0, 1], got {theta}")
    if delta < 1.0:
        raise ValueError(f"delta must be >= 1, got {delta}")
    if d < 1:
        raise InvalidDimensionError(f"d must be >= 1, got {d}")
    target = theta * domain_volume
    if shape == "rectangle":
        edge = (target / delta ** (d - 1)) ** (1.0 / d)
        half = edge / 2.0
    else:
        half = (target / (unit_ball_volume(d) * delta ** (d - 1))) ** (1.0 / d)
    extents = np.full(d, half)
    extents[1:] *= delta
    longest = 2.0 * extents.max()
    if longest > domain_volume ** (1.0 / d) * (1.0 + VOLUME_RTOL):
        raise InfeasibleRegionError(
            f"longest extent {longest:.6g} exceeds the domain edge "
            f"(shape={shape}, theta={theta}, delta={delta}, d={d})")
    return extents


@dataclass(frozen=True)
class RegionSpec:
    """A placed ground-truth failure region.

    ``extents`` are per-axis half-lengths (rectangle half-edges or
    ellipsoid semi-axes) of the unrotated region; ``gamma`` rotates it
    counter-clockwise, in degrees, within the ``plane`` coordinate pair.
    Rotation is applied in a single plane for every d; (0, 1) is the
    default and the convention used by the experiment harness.
    """

    shape: str
    theta: float
    delta: float
    gamma: float
    center: np.ndarray
    extents: np.ndarray
    plane: tuple[int, int] = (0, 1)

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        object.__setattr__(self, "extents", as_point(self.extents))
        if self.center.size != self.extents.size:
            raise InvalidDimensionError("center/extents dimension mismatch")

    @property
    def dimension(self) -> int:
        return self.center.size

    def volume(self) -> float:
        full = 2.0 * self.extents
        if self.shape == "rectangle":
            return float(np.prod(full))
        return unit_ball_volume(self.dimension) * float(np.prod(self.extents))

    def bounding_half_widths(self) -> np.ndarray:
        """Half-widths of the axis-aligned bounding box after rotation."""
        m = self.extents.copy()
        if self.dimension >= 2:
            i, j = self.plane
            g = math.radians(self.gamma)
            c, s = abs(math.cos(g)), abs(math.sin(g))
            ei, ej = self.extents[i], self.extents[j]
            if self.shape == "rectangle":
                m[i] = ei * c + ej * s
                m[j] = ei * s + ej * c
            else:
                m[i] = math.sqrt((ei * c) ** 2 + (ej * s) ** 2)
                m[j] = math.sqrt((ei * s) ** 2 + (ej * c) ** 2)
        return m


def placement_margins(shape: str, theta: float, delta: float, gamma: float,
                      domain: InputDomain, plane: tuple[int, int] = (0, 1)) -> np.ndarray:
    """Rotated-bounding-box half-widths for a region not yet placed.

    The region fits somewhere in the domain iff every margin is at most
    half the corresponding domain edge.
    """
    extents = derive_extents(shape, theta, delta, domain.dimension, domain.volume)
    probe = RegionSpec(shape, theta, delta, gamma,
                       center=np.zeros(domain.dimension), extents=extents, plane=plane)
    return probe.bounding_half_widths()


def place_region(shape: str, theta: float, delta: float, gamma: float,
                 domain: InputDomain, rng: np.random.Generator,
                 plane: tuple[int, int] = (0, 1)) -> RegionSpec:
    """Place a region uniformly at random, fully contained in the domain.

    The center is drawn uniformly from the sub-box that keeps the whole
    rotated bounding box inside the domain; when that sub-box collapses
    to a point (the region spans the domain) the center is forced there.
    Same rng state always yields the same placement.
    """
    d = domain.dimension
    extents = derive_extents(shape, theta, delta, d, domain.volume)
    spec = RegionSpec(shape, theta, delta, gamma,
                      center=np.zeros(d), extents=extents, plane=plane)
    margin = spec.bounding_half_widths()
    lo = domain.lower + margin
    hi = domain.upper - margin
    slack = hi - lo
    # Forgive sub-epsilon negative slack from the rotation trig.
    tight = slack < 0
    if np.any(slack < -1e-12 * (domain.upper - domain.lower)):
        raise InfeasibleRegionError(
            f"region does not fit the domain after rotation "
            f"(shape={shape}, theta={theta}, delta={delta}, gamma={gamma}, d={d})")
    center = rng.uniform(lo, np.where(tight, lo, hi))
    return RegionSpec(shape, theta, delta, gamma, center=center, extents=extents, plane=plane)


class SimulatedRegionOracle:
    """Deterministic membership oracle for a placed RegionSpec.

    Verdict is True (failure-causing) iff the probe, inverse-rotated
    about the center, lies inside the axis-aligned region; rectangle
    membership uses closed inequalities, so the boundary itself fails.
    """

    def __init__(self, spec: RegionSpec, stats: OracleStats | None = None):
        self.spec = spec
        self.stats = stats if stats is not None else OracleStats()
        self._d = spec.dimension
        self._center = [float(x) for x in spec.center]
        self._ext = [float(x) for x in spec.extents]
        self._rect = spec.shape == "rectangle"
        self._i, self._j = spec.plane
        g = math.radians(spec.gamma)
        # Inverse rotation; skip the trig entirely when it is the identity.
        self._cos = math.cos(g)
        self._sin = math.sin(g)
        self._rotated = self._d >= 2 and spec.gamma % 360.0 != 0.0

    def __call__(self, point) -> bool:
        if len(point) != self._d:
            raise InvalidDimensionError(
                f"oracle expects d={self._d}, got point of length {len(point)}")
        st = self.stats
        st.probe_count += 1
        c = self._center
        e = self._ext
        q = [float(point[k]) - c[k] for k in range(self._d)]
        if self._rotated:
            i, j = self._i, self._j
            qi = self._cos * q[i] + self._sin * q[j]
            qj = -self._sin * q[i] + self._cos * q[j]
            q[i] = qi
            q[j] = qj
        if self._rect:
            for k in range(self._d):
                if abs(q[k]) > e[k]:
                    return False
        else:
            acc = 0.0
            for k in range(self._d):
                acc += (q[k] / e[k]) ** 2
                if acc > 1.0:
                    return False
        st.fail_count += 1
        return True


class ExternalProgramOracle:
    """Oracle that spawns an external command per probe.

    The command template names one placeholder per coordinate, e.g.
    ``prog --x {x1} --y {x2}``; coordinates are substituted as decimal
    text with 17 significant digits (lossless for doubles). Verdicts:

    * ``fail_convention="exit-code"``: failure iff the exit status is
      non-zero;
    * ``fail_convention="stdout"``: failure iff standard output contains
      the token ``FAIL``.

    A probe that exceeds ``timeout_ms`` counts as Pass and is logged.
    The environment is passed through unchanged. A command that cannot
    be spawned raises OracleUnavailableError and aborts the run.
    """

    CONVENTIONS = ("exit-code", "stdout")

    def __init__(self, command_template: str, d: int,
                 fail_convention: str = "exit-code",
                 timeout_ms: float | None = None,
                 stats: OracleStats | None = None):
        if fail_convention not in self.CONVENTIONS:
            raise ValueError(f"fail_convention must be one of {self.CONVENTIONS}")
        if d < 1:
            raise InvalidDimensionError(f"d must be >= 1, got {d}")
        self._tokens = shlex.split(command_template)
        names = [f"x{i + 1}" for i in range(d)]
        missing = [n for n in names
                   if not any("{%s}" % n in tok for tok in self._tokens)]
        if missing:
            raise ValueError(f"command template is missing placeholders: {missing}")
        self._d = d
        self._convention = fail_convention
        self._timeout = None if timeout_ms is None else timeout_ms / 1000.0
        self.stats = stats if stats is not None else OracleStats()
        self.timeouts = 0

    def __call__(self, point) -> bool:
        if len(point) != self._d:
            raise InvalidDimensionError(
                f"oracle expects d={self._d}, got point of length {len(point)}")
        subs = {f"x{i + 1}": "%.17g" % float(point[i]) for i in range(self._d)}
        argv = [tok.format_map(subs) for tok in self._tokens]
        self.stats.probe_count += 1
        try:
            proc = subprocess.run(argv, capture_output=True, timeout=self._timeout)
        except subprocess.TimeoutExpired:
            self.timeouts += 1
            log.warning("oracle probe timed out (counted as Pass): %s", argv)
            return False
        except OSError as exc:
            raise OracleUnavailableError(f"cannot spawn oracle command {argv!r}: {exc}") from exc
        if self._convention == "exit-code":
            failing = proc.returncode != 0
        else:
            failing = b"FAIL" in proc.stdout
        if failing:
            self.stats.fail_count += 1
        return failing
