"""Boundary-search core.

Three layers:

* :func:`find_first_failure` locates one failure-causing input with
  fixed-size-candidate-set adaptive random testing (FSCS-ART);
* :func:`search_boundary` walks a single ray from a failing source input
  to the failure-region boundary, in either of two modes (see below);
* the strategy drivers :func:`run_fsb` / :func:`run_dsb` schedule rays
  until N failure-causing boundary inputs are harvested.

Ray-search modes
----------------
``bracketing`` (default) marches outward in steps of L while probes
fail, then maintains a [deepest-fail, shallowest-miss] bracket and
bisects it; each hit raises the lower end, each miss lowers the upper
end, so for a convex region the returned offset is within
L * 2**(1 - lam) of the true boundary (the bracket is also cut off once
its width falls below L * 2**(-2 * lam), i.e. at machine precision for
the usual lam = 20).

``literal`` flips the extension direction and halves the length on
*every* miss, and halves again after a hit at a retracted point. The two
modes agree while hits and misses alternate, but on two consecutive
misses the literal rule turns outward again and the cursor converges
away from the region, never recovering; the mode is kept for audit and
comparison runs. Both modes treat out-of-domain probe points as misses
without consulting the oracle.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import NoFailureFoundError
from .geometry import InputDomain, axis_orientations, mirror_to_orthants, \
    orthant_diagonal_orientations

Oracle = Callable[[list[float]], bool]

STRATEGIES = ("fsb1", "fsb2", "dsb")
POLICIES = ("all", "one")
MODES = ("bracketing", "literal")


@dataclass(frozen=True)
class SearchConfig:
    """Tunables of one boundary-search run.

    ``lam`` is the count of consecutive non-failing probes that ends one
    ray search; ``L`` is the initial outward step in domain-length
    units; ``probe_budget`` caps oracle calls for the whole run.
    """

    strategy: str
    N: int = 100
    L: float = 1.0
    lam: int = 20
    k: int = 10
    fscs_k: int = 10
    orientation_policy: str = "all"
    alg1_mode: str = "bracketing"
    probe_budget: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.orientation_policy not in POLICIES:
            raise ValueError(f"orientation_policy must be one of {POLICIES}")
        if self.alg1_mode not in MODES:
            raise ValueError(f"alg1_mode must be one of {MODES}")
        if self.L <= 0 or self.lam < 1 or self.N < 1 or self.k < 1 or self.fscs_k < 1:
            raise ValueError("need L > 0, lam >= 1, N >= 1, k >= 1, fscs_k >= 1")
        if self.probe_budget < self.N:
            raise ValueError("probe_budget must be at least N")


@dataclass
class BoundaryHarvest:
    """Outcome of one strategy run: the collected boundary inputs plus counters."""

    source_inputs: list = field(default_factory=list)
    boundary_inputs: list = field(default_factory=list)
    iterations: int = 0
    probes: int = 0
    budget_exhausted: bool = False
    pool_exhausted: bool = False
    degenerate_rays: int = 0


class RaySearch(NamedTuple):
    point: np.ndarray
    probes: int
    iterations: int
    beyond_source: bool


def select_fscs_candidate(executed: np.ndarray, candidates: np.ndarray) -> int:
    """Index of the candidate farthest (max-min Euclidean) from executed inputs.

    Ties break toward the lowest index.
    """
    diff = candidates[:, None, :] - executed[None, :, :]
    dmin = np.sqrt((diff * diff).sum(axis=2)).min(axis=1)
    return int(np.argmax(dmin))


def find_first_failure(oracle: Oracle, domain: InputDomain, fscs_k: int,
                       rng: np.random.Generator, budget: int) -> np.ndarray:
    """Run FSCS-ART until the oracle reports a failure-causing input.

    The first test input is uniform over the domain; every later one is
    the best of ``fscs_k`` uniform candidates under the max-min distance
    rule. Raises NoFailureFoundError when ``budget`` oracle calls pass
    without a failure.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    executed = []
    while len(executed) < budget:
        if not executed:
            test = domain.sample(rng)
        else:
            cands = domain.sample(rng, fscs_k)
            test = cands[select_fscs_candidate(np.asarray(executed), cands)]
        if oracle(test):
            return test
        executed.append(test)
    raise NoFailureFoundError(
        f"no failure-causing input within {budget} executions")


def _ray_point(source, direction, t, d):
    return [source[i] + t * direction[i] for i in range(d)]


def search_boundary(source, orientation, L: float, lam: int, oracle: Oracle,
                    domain: InputDomain, mode: str = "bracketing",
                    budget: int | None = None, trace: list | None = None) -> RaySearch:
    """Find a failure-causing input near the region boundary along one ray.

    ``source`` must be failure-causing and ``orientation`` a unit vector.
    Returns the deepest failing point found; when no probe beyond the
    source ever fails, the source itself is returned with
    ``beyond_source=False`` (degenerate thin region). ``budget`` limits
    oracle calls for this ray; ``trace``, when given, collects one dict
    per iteration for audit and demos.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    d = len(source)
    s = [float(x) for x in source]
    a = [float(x) for x in orientation]
    left = math.inf if budget is None else budget

    probes = 0
    iterations = 0

    def probe(t):
        nonlocal probes, iterations
        iterations += 1
        pt = _ray_point(s, a, t, d)
        if not domain.contains(pt):
            if trace is not None:
                trace.append({"offset": t, "called": False, "fail": False})
            return pt, False
        probes += 1
        failing = oracle(pt)
        if trace is not None:
            trace.append({"offset": t, "called": True, "fail": failing})
        return pt, failing

    if mode == "literal":
        return _literal_search(s, a, L, lam, probe, lambda: probes >= left,
                               lambda: (probes, iterations), trace)

    lo = 0.0
    best = None
    hi = None
    t = L
    while probes < left:  # outward march
        pt, failing = probe(t)
        if failing:
            lo, best = t, pt
            t += L
        else:
            hi = t
            break
    if hi is None:  # budget ran dry while still marching
        point = np.array(best) if best is not None else np.array(s)
        return RaySearch(point, probes, iterations, best is not None)

    misses = 1
    collapse = max(L * 2.0 ** (-2 * lam), 2.0 ** -52 * max(L, hi))
    while misses < lam and hi - lo > collapse and probes < left:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        pt, failing = probe(mid)
        if failing:
            lo, best = mid, pt
            misses = 0
        else:
            hi = mid
            misses += 1
    point = np.array(best) if best is not None else np.array(s)
    return RaySearch(point, probes, iterations, best is not None)


def _literal_search(s, a, L, lam, probe, exhausted, counters, trace):
    """Ray search transcribing the published miss rule verbatim.

    The cursor moves on every step, the direction negates on every miss,
    and the step halves on a miss or after a hit at a retracted point.
    An iteration cap guards the pathological all-hit fixed point once
    the step underflows.
    """
    guard = max(10_000, 100 * lam)
    offset = 0.0
    step = L
    sign = 1.0
    flag = False
    best = None
    misses = 0
    iterations = 0
    while misses < lam and iterations < guard and step > 0.0 and not exhausted():
        iterations += 1
        offset += sign * step
        pt, failing = probe(offset)
        if not failing:
            step /= 2.0
            sign = -sign
            flag = True
            misses += 1
        else:
            best = pt
            misses = 0
            if flag:
                step /= 2.0
                sign = -sign
                flag = False
        if trace is not None:
            trace[-1].update({"L": step, "sign": sign, "flag": flag})
    probes, _ = counters()
    point = np.array(best) if best is not None else np.array(s)
    return RaySearch(point, probes, iterations, best is not None)


def _strategy_orientations(variant: int, d: int) -> list[np.ndarray]:
    axes = axis_orientations(d)
    if variant == 1 or d < 2:  # orthant diagonals degenerate to axes at d=1
        return axes
    return axes + orthant_diagonal_orientations(d)


def run_fsb(variant: int, initial_sources, config: SearchConfig, oracle: Oracle,
            domain: InputDomain, rng: np.random.Generator) -> BoundaryHarvest:
    """Fixed-orientation strategy: variant 1 uses the 2d axis directions,
    variant 2 adds the 2^d orthant diagonals.

    A pool of unused failure-causing sources starts with
    ``initial_sources``; each loop draws one uniformly, retires it, and
    extends along its fixed orientations (all of them, or one random one,
    per ``config.orientation_policy``). Every harvested boundary input
    that advanced beyond its source re-enters the pool; each pool entry
    is drawn at most once, so no harvested input is reused as a ray
    origin (on exactly axis-aligned regions two entries can still carry
    identical coordinates). Degenerate results never re-enter the pool,
    which is why the pool can only run dry on degenerate regions.
    """
    if variant not in (1, 2):
        raise ValueError(f"variant must be 1 or 2, got {variant}")
    if not initial_sources:
        raise ValueError("need at least one failure-causing source input")
    d = domain.dimension
    orientations = _strategy_orientations(variant, d)
    harvest = BoundaryHarvest(source_inputs=[np.array(p, dtype=float) for p in initial_sources])
    pool = [p.copy() for p in harvest.source_inputs]
    left = config.probe_budget

    while len(harvest.boundary_inputs) < config.N:
        if not pool:
            harvest.pool_exhausted = True
            break
        if left <= 0:
            harvest.budget_exhausted = True
            break
        source = pool.pop(int(rng.integers(len(pool))))
        if config.orientation_policy == "all":
            chosen = orientations
        else:
            chosen = [orientations[int(rng.integers(len(orientations)))]]
        for direction in chosen:
            result = search_boundary(source, direction, config.L, config.lam,
                                     oracle, domain, config.alg1_mode, budget=left)
            left -= result.probes
            harvest.probes += result.probes
            harvest.iterations += result.iterations
            harvest.boundary_inputs.append(result.point)
            if result.beyond_source:
                pool.append(result.point)
            else:
                harvest.degenerate_rays += 1
            if len(harvest.boundary_inputs) >= config.N:
                break
            if left <= 0:
                harvest.budget_exhausted = True
                break
        if harvest.budget_exhausted:
            break
    return harvest


def sample_first_orthant(rng: np.random.Generator, d: int) -> np.ndarray:
    """Uniform unit vector on the first-orthant patch of the sphere."""
    v = np.abs(rng.standard_normal(d))
    return v / math.sqrt(float(v @ v))


def select_diverse_candidate(candidates: np.ndarray, selected: np.ndarray) -> int:
    """Index of the candidate with the largest min cosine distance to ``selected``.

    All rows are unit vectors; ties break toward the lowest index.
    """
    dmin = (1.0 - candidates @ selected.T).min(axis=1)
    return int(np.argmax(dmin))


def next_dsb_orientation(selected, k: int, rng: np.random.Generator,
                         d: int | None = None) -> np.ndarray:
    """Draw the next first-orthant extension orientation.

    With an empty ``selected`` list the draw is a single uniform random
    first-orthant unit vector (``d`` is then required); afterwards the
    best of ``k`` uniform candidates under the max-min cosine-distance
    rule is chosen against everything selected so far.
    """
    if not selected:
        if d is None:
            raise ValueError("d is required when no orientation has been selected yet")
        return sample_first_orthant(rng, d)
    d = len(selected[0])
    cands = np.abs(rng.standard_normal((k, d)))
    cands /= np.sqrt((cands * cands).sum(axis=1))[:, None]
    return cands[select_diverse_candidate(cands, np.asarray(selected))]


def run_dsb(initial_source, config: SearchConfig, oracle: Oracle,
            domain: InputDomain, rng: np.random.Generator) -> BoundaryHarvest:
    """Diverse-orientation strategy from a single fixed source input.

    Each round draws one first-orthant orientation (random first, then
    max-min cosine distance over ``config.k`` candidates), mirrors it to
    all 2^d orthants, and searches every mirrored ray from the same
    source. The final partial round truncates at exactly N.
    """
    d = domain.dimension
    source = np.array(initial_source, dtype=float)
    harvest = BoundaryHarvest(source_inputs=[source])
    selected: list[np.ndarray] = []
    left = config.probe_budget

    while len(harvest.boundary_inputs) < config.N:
        if left <= 0:
            harvest.budget_exhausted = True
            break
        orientation = next_dsb_orientation(selected, config.k, rng, d)
        selected.append(orientation)
        for direction in mirror_to_orthants(orientation):
            result = search_boundary(source, direction, config.L, config.lam,
                                     oracle, domain, config.alg1_mode, budget=left)
            left -= result.probes
            harvest.probes += result.probes
            harvest.iterations += result.iterations
            harvest.boundary_inputs.append(result.point)
            if not result.beyond_source:
                harvest.degenerate_rays += 1
            if len(harvest.boundary_inputs) >= config.N:
                break
            if left <= 0:
                harvest.budget_exhausted = True
                break
        if harvest.budget_exhausted:
            break
    return harvest


def run_strategy(config: SearchConfig, initial_sources, oracle: Oracle,
                 domain: InputDomain, rng: np.random.Generator) -> BoundaryHarvest:
    """Dispatch on ``config.strategy``; DSB keeps only the first source."""
    if config.strategy == "fsb1":
        return run_fsb(1, initial_sources, config, oracle, domain, rng)
    if config.strategy == "fsb2":
        return run_fsb(2, initial_sources, config, oracle, domain, rng)
    return run_dsb(initial_sources[0], config, oracle, domain, rng)
