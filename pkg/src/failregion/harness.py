"""Experiment orchestration: settings matrices, seeded repetitions, records.

A matrix file is flat ``key = value`` text (comma-separated lists on the
experiment axes); its cross-product yields one ExperimentSetting per
cell. Every repetition derives its own 64-bit seed from (base_seed,
setting id, repetition), so results are reproducible regardless of
worker count or execution order. Each run serializes to a JSON record;
sweeps additionally emit one CSV row per run plus a per-cell summary.
"""

import concurrent.futures
import hashlib
import itertools
import json
import logging
import math
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import ConfigError, InfeasibleRegionError, NoFailureFoundError
from .geometry import rotate_in_plane, unit_domain
from .measure import convex_hull_2d, measure_run
from .oracles import SHAPES, RegionSpec, SimulatedRegionOracle, place_region
from .search import STRATEGIES, SearchConfig, find_first_failure, run_strategy

log = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1
CSV_HEADER = ("setting_id,rep,d,theta,shape,delta,gamma,strategy,N,lambda,L,"
              "alg1_mode,orientation_policy,s_ratio,s_afr,s_rfr,stderr,"
              "probes,iterations,wall_time_ms,seed,status")

RECORD_SCHEMA = "failregion-run-v1"

# Statuses carrying full metrics (CSV rows) vs. error statuses (logged only).
RESULT_STATUSES = ("ok", "budget-exhausted", "pool-exhausted")
ERROR_STATUSES = ("infeasible-region", "no-failure-found")


@dataclass(frozen=True)
class ExperimentSetting:
    """One cell of the experiment matrix."""

    d: int
    theta: float
    shape: str
    delta: float
    gamma: float
    strategy: str
    N: int
    lam: int
    L: float
    repetitions: int = 1
    base_seed: int = 0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ConfigError(f"shape must be one of {SHAPES}, got {self.shape!r}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not 0.0 <= self.gamma <= 180.0:
            raise ConfigError(f"gamma must be in [0, 180] degrees, got {self.gamma}")

    @property
    def setting_id(self) -> str:
        return (f"d{self.d}-th{self.theta:g}-{self.shape}-dl{self.delta:g}"
                f"-g{self.gamma:g}-{self.strategy}-N{self.N}-lm{self.lam}-L{self.L:g}")


def derive_run_seed(base_seed: int, setting_id: str, rep: int) -> int:
    """Stable 64-bit per-run seed; identical across platforms and processes."""
    digest = hashlib.blake2b(f"{base_seed}|{setting_id}|{rep}".encode(),
                             digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass
class RunRecord:
    """Serializable outcome of a single run (one repetition of one setting)."""

    setting_id: str
    rep: int
    seed: int
    d: int
    theta: float
    shape: str
    delta: float
    gamma: float
    strategy: str
    N: int
    lam: int
    L: float
    alg1_mode: str
    orientation_policy: str
    rotation_plane: tuple[int, int]
    status: str
    domain_lower: list = field(default_factory=list)
    domain_upper: list = field(default_factory=list)
    region_center: list | None = None
    region_extents: list | None = None
    first_failure: list | None = None
    boundary_inputs: list | None = None
    probes: int = 0
    iterations: int = 0
    wall_time_ms: float = 0.0
    s_afr: float | None = None
    s_rfr: float | None = None
    s_ratio: float | None = None
    stderr: float | None = None
    measure_method: str | None = None
    degenerate: bool = False

    def to_dict(self) -> dict:
        out = {"schema": RECORD_SCHEMA}
        out.update(asdict(self))
        out["rotation_plane"] = list(self.rotation_plane)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        data = dict(data)
        schema = data.pop("schema", RECORD_SCHEMA)
        if schema != RECORD_SCHEMA:
            raise ConfigError(f"unsupported record schema {schema!r}")
        data["rotation_plane"] = tuple(data["rotation_plane"])
        return cls(**data)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "RunRecord":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def csv_row(self) -> str:
        def num(x):
            if x is None:
                return ""
            return repr(float(x))

        cells = [self.setting_id, str(self.rep), str(self.d), num(self.theta),
                 self.shape, num(self.delta), num(self.gamma), self.strategy,
                 str(self.N), str(self.lam), num(self.L), self.alg1_mode,
                 self.orientation_policy, num(self.s_ratio), num(self.s_afr),
                 num(self.s_rfr), num(self.stderr), str(self.probes),
                 str(self.iterations), num(self.wall_time_ms), str(self.seed),
                 self.status]
        return ",".join(cells)


def _points_list(points) -> list:
    return [[float(x) for x in p] for p in points]


def run_setting(setting: ExperimentSetting, *, alg1_mode: str = "bracketing",
                orientation_policy: str = "all", k: int = 10, fscs_k: int = 10,
                probe_budget: int = 1_000_000, mc_samples: int = 200_000,
                plane: tuple[int, int] = (0, 1), timing: bool = True) -> list[RunRecord]:
    """Run every repetition of one setting and return one record each.

    Infeasible regions and failed first-failure searches yield records
    with an error status instead of raising, so sweeps keep going.
    ``probe_budget`` caps oracle calls for the first-failure search and
    for the strategy phase separately. ``timing=False`` records
    wall_time_ms as 0.0, making records byte-reproducible.
    """
    domain = unit_domain(setting.d)
    records = []
    for rep in range(setting.repetitions):
        seed = derive_run_seed(setting.base_seed, setting.setting_id, rep)
        base = dict(setting_id=setting.setting_id, rep=rep, seed=seed,
                    d=setting.d, theta=setting.theta, shape=setting.shape,
                    delta=setting.delta, gamma=setting.gamma,
                    strategy=setting.strategy, N=setting.N, lam=setting.lam,
                    L=setting.L, alg1_mode=alg1_mode,
                    orientation_policy=orientation_policy,
                    rotation_plane=plane,
                    domain_lower=[float(x) for x in domain.lower],
                    domain_upper=[float(x) for x in domain.upper])
        rng = np.random.default_rng(seed)
        try:
            spec = place_region(setting.shape, setting.theta, setting.delta,
                                setting.gamma, domain, rng, plane=plane)
        except InfeasibleRegionError as exc:
            log.warning("infeasible setting %s: %s", setting.setting_id, exc)
            records.append(RunRecord(status="infeasible-region", **base))
            continue
        base.update(region_center=[float(x) for x in spec.center],
                    region_extents=[float(x) for x in spec.extents])
        oracle = SimulatedRegionOracle(spec)
        try:
            first = find_first_failure(oracle, domain, fscs_k, rng, budget=probe_budget)
        except NoFailureFoundError:
            records.append(RunRecord(status="no-failure-found",
                                     probes=oracle.stats.probe_count, **base))
            continue
        config = SearchConfig(strategy=setting.strategy, N=setting.N, L=setting.L,
                              lam=setting.lam, k=k, fscs_k=fscs_k,
                              orientation_policy=orientation_policy,
                              alg1_mode=alg1_mode, probe_budget=probe_budget,
                              seed=seed)
        t0 = time.perf_counter_ns()
        harvest = run_strategy(config, [first], oracle, domain, rng)
        elapsed_ms = (time.perf_counter_ns() - t0) / 1e6 if timing else 0.0
        measure = measure_run(harvest, spec, domain, mc_samples=mc_samples, rng=rng)
        if harvest.budget_exhausted:
            status = "budget-exhausted"
        elif harvest.pool_exhausted:
            status = "pool-exhausted"
        else:
            status = "ok"
        records.append(RunRecord(
            status=status,
            first_failure=[float(x) for x in first],
            boundary_inputs=_points_list(harvest.boundary_inputs),
            probes=oracle.stats.probe_count,
            iterations=harvest.iterations,
            wall_time_ms=elapsed_ms,
            s_afr=measure.s_afr, s_rfr=measure.s_rfr, s_ratio=measure.s_ratio,
            stderr=measure.stderr, measure_method=measure.method,
            degenerate=measure.degenerate, **base))
    return records


# ---------------------------------------------------------------------------
# Matrix files


_AXIS_KEYS = {
    "d": int, "theta": float, "shape": str, "delta": float, "gamma": float,
    "strategy": str, "N": int, "lambda": int, "L": float,
}
_SCALAR_KEYS = {
    "repetitions": int, "base_seed": int, "alg1_mode": str,
    "orientation_policy": str, "probe_budget": int, "mc_samples": int,
    "k": int, "fscs_k": int,
}
_REQUIRED = ("d", "theta", "shape", "delta", "gamma", "strategy", "N",
             "lambda", "L", "repetitions", "base_seed")


def parse_matrix(text: str) -> dict:
    """Parse flat ``key = value[, value...]`` matrix text.

    Axis keys (d, theta, shape, delta, gamma, strategy, N, lambda, L)
    accept comma-separated lists; everything else is single-valued.
    ``#`` starts a comment. Unknown or missing keys raise ConfigError.
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"matrix line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        items = [v.strip() for v in value.split(",") if v.strip()]
        if not items:
            raise ConfigError(f"matrix line {lineno}: no value for key {key!r}")
        if key in _AXIS_KEYS:
            cast = _AXIS_KEYS[key]
        elif key in _SCALAR_KEYS:
            cast = _SCALAR_KEYS[key]
            if len(items) != 1:
                raise ConfigError(f"matrix line {lineno}: key {key!r} takes a single value")
        else:
            raise ConfigError(f"matrix line {lineno}: unknown key {key!r}")
        try:
            values = [cast(v) for v in items]
        except ValueError as exc:
            raise ConfigError(f"matrix line {lineno}: bad value for {key!r}: {exc}") from exc
        out[key] = values if key in _AXIS_KEYS else values[0]
    missing = [k for k in _REQUIRED if k not in out]
    if missing:
        raise ConfigError(f"matrix is missing required keys: {missing}")
    return out


def expand_settings(matrix: dict) -> tuple[list[ExperimentSetting], dict]:
    """Cross-product of the axis lists -> settings, plus the scalar knobs."""
    axes = [matrix[k] for k in ("d", "theta", "shape", "delta", "gamma",
                                "strategy", "N", "lambda", "L")]
    reps = matrix["repetitions"]
    base_seed = matrix["base_seed"]
    settings = []
    for d, theta, shape, delta, gamma, strategy, n, lam, length in itertools.product(*axes):
        settings.append(ExperimentSetting(
            d=d, theta=theta, shape=shape, delta=delta, gamma=gamma,
            strategy=strategy, N=n, lam=lam, L=length,
            repetitions=reps, base_seed=base_seed))
    knobs = {k: matrix[k] for k in _SCALAR_KEYS if k in matrix
             and k not in ("repetitions", "base_seed")}
    return settings, knobs


def _sweep_task(args) -> list[dict]:
    setting, knobs = args
    return [r.to_dict() for r in run_setting(setting, **knobs)]


@dataclass
class SweepResult:
    rows: int
    errors: int
    csv_path: Path
    summary_path: Path
    records_dir: Path

    @property
    def partial(self) -> bool:
        return self.errors > 0


def sweep(matrix_path, out_dir, jobs: int = 1, timing: bool = True) -> SweepResult:
    """Run a whole matrix and write results.csv, summary.csv, and records/.

    Rows land in the CSV sorted by (setting_id, rep); records with an
    error status are written to errors.log (and their JSON kept) but get
    no CSV row. Worker count never changes the output: every run is
    seeded independently of scheduling.
    """
    matrix = parse_matrix(Path(matrix_path).read_text())
    settings, knobs = expand_settings(matrix)
    knobs["timing"] = timing
    out = Path(out_dir)
    records_dir = out / "records"
    records_dir.mkdir(parents=True, exist_ok=True)

    tasks = [(s, knobs) for s in settings]
    if jobs <= 1:
        batches = [_sweep_task(t) for t in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(_sweep_task, tasks, chunksize=1))

    records = [RunRecord.from_dict(d) for batch in batches for d in batch]
    records.sort(key=lambda r: (r.setting_id, r.rep))

    rows = []
    error_lines = []
    for rec in records:
        rec.save(records_dir / f"{rec.setting_id}-r{rec.rep:04d}.json")
        if rec.status in ERROR_STATUSES:
            error_lines.append(f"{rec.setting_id} rep={rec.rep} seed={rec.seed} "
                               f"status={rec.status}")
        else:
            rows.append(rec.csv_row())

    csv_path = out / "results.csv"
    csv_path.write_text("\n".join([CSV_HEADER] + rows) + "\n")
    if error_lines:
        (out / "errors.log").write_text("\n".join(error_lines) + "\n")
    summary_path = out / "summary.csv"
    summary_path.write_text(summarize_rows(records))
    return SweepResult(rows=len(rows), errors=len(error_lines),
                       csv_path=csv_path, summary_path=summary_path,
                       records_dir=records_dir)


def summarize_rows(records: list[RunRecord]) -> str:
    """Per-cell mean table (CSV text) over records that carry metrics."""
    cells: dict[str, list[RunRecord]] = {}
    for rec in records:
        if rec.status in ERROR_STATUSES:
            continue
        cells.setdefault(rec.setting_id, []).append(rec)
    lines = ["setting_id,runs,mean_s_ratio,mean_probes,mean_iterations,mean_wall_time_ms"]
    for sid in sorted(cells):
        recs = cells[sid]
        n = len(recs)
        mean = lambda xs: sum(xs) / n
        lines.append(",".join([
            sid, str(n),
            repr(mean([r.s_ratio for r in recs])),
            repr(mean([float(r.probes) for r in recs])),
            repr(mean([float(r.iterations) for r in recs])),
            repr(mean([r.wall_time_ms for r in recs])),
        ]))
    return "\n".join(lines) + "\n"


def summarize_csv(csv_path) -> str:
    """Summary table from a previously written results.csv."""
    text = Path(csv_path).read_text().strip().splitlines()
    if not text or text[0] != CSV_HEADER:
        raise ConfigError(f"{csv_path} does not carry the expected CSV header")
    header = text[0].split(",")
    idx = {name: i for i, name in enumerate(header)}
    cells: dict[str, list[list[str]]] = {}
    for line in text[1:]:
        parts = line.split(",")
        cells.setdefault(parts[idx["setting_id"]], []).append(parts)
    lines = ["setting_id,runs,mean_s_ratio,mean_probes,mean_iterations,mean_wall_time_ms"]
    for sid in sorted(cells):
        rows = cells[sid]
        n = len(rows)
        col = lambda name: sum(float(r[idx[name]]) for r in rows) / n
        lines.append(",".join([sid, str(n), repr(col("s_ratio")), repr(col("probes")),
                               repr(col("iterations")), repr(col("wall_time_ms"))]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# SVG rendering


_SVG_SIZE = 640
_SVG_MARGIN = 40


def _region_outline_2d(record: RunRecord, axes: tuple[int, int]) -> list[tuple[float, float]]:
    """Ground-truth outline projected on the chosen axes.

    Exact polygon for d = 2 on the rotation plane; the rotated bounding
    box otherwise.
    """
    center = np.asarray(record.region_center)
    extents = np.asarray(record.region_extents)
    i, j = axes
    exact_2d = record.d == 2 and set(axes) == set(record.rotation_plane)
    if exact_2d and record.shape == "rectangle":
        corners = []
        for sx, sy in ((1, 1), (-1, 1), (-1, -1), (1, -1)):
            p = center.copy()
            p[0] += sx * extents[0]
            p[1] += sy * extents[1]
            p = rotate_in_plane(p, center, record.gamma, record.rotation_plane)
            corners.append((float(p[i]), float(p[j])))
        return corners
    if exact_2d and record.shape == "ellipse":
        pts = []
        for step in range(120):
            ang = 2.0 * math.pi * step / 120
            p = center.copy()
            p[0] += extents[0] * math.cos(ang)
            p[1] += extents[1] * math.sin(ang)
            p = rotate_in_plane(p, center, record.gamma, record.rotation_plane)
            pts.append((float(p[i]), float(p[j])))
        return pts
    spec = RegionSpec(record.shape, record.theta, record.delta, record.gamma,
                      center=center, extents=extents, plane=record.rotation_plane)
    half = spec.bounding_half_widths()
    return [(float(center[i] + sx * half[i]), float(center[j] + sy * half[j]))
            for sx, sy in ((1, 1), (-1, 1), (-1, -1), (1, -1))]


def render_svg(record: RunRecord, axes: tuple[int, int] = (0, 1)) -> str:
    """Deterministic SVG view of one run record.

    Draws the domain box, the ground-truth region outline, the hull of
    the projected harvested points, every boundary input as a dot, and
    the source input as a distinguished ring. ``axes`` picks the two
    projection dimensions for d > 2.
    """
    i, j = axes
    if i == j or not (0 <= i < record.d and 0 <= j < record.d):
        raise ValueError(f"invalid projection axes {axes} for d={record.d}")
    lo_i, hi_i = record.domain_lower[i], record.domain_upper[i]
    lo_j, hi_j = record.domain_lower[j], record.domain_upper[j]
    span = _SVG_SIZE - 2 * _SVG_MARGIN

    def sx(v):
        return _SVG_MARGIN + (v - lo_i) / (hi_i - lo_i) * span

    def sy(v):
        return _SVG_SIZE - _SVG_MARGIN - (v - lo_j) / (hi_j - lo_j) * span

    def fmt(v):
        return f"{v:.3f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_SIZE}" '
        f'height="{_SVG_SIZE}" viewBox="0 0 {_SVG_SIZE} {_SVG_SIZE}">',
        f'<title>{record.setting_id} rep {record.rep}</title>',
        f'<rect class="domain" x="{fmt(sx(lo_i))}" y="{fmt(sy(hi_j))}" '
        f'width="{fmt(span)}" height="{fmt(span)}" '
        'fill="white" stroke="black" stroke-width="1"/>',
    ]
    if record.region_center is not None:
        outline = _region_outline_2d(record, axes)
        pts = " ".join(f"{fmt(sx(px))},{fmt(sy(py))}" for px, py in outline)
        parts.append(f'<polygon class="region" points="{pts}" '
                     'fill="none" stroke="#c33" stroke-width="1.5"/>')
    points = [list(p) for p in (record.boundary_inputs or [])]
    sources = [record.first_failure] if record.first_failure is not None else []
    projected = np.array([[p[i], p[j]] for p in points + sources]) if points else None
    if projected is not None and len(projected) >= 3:
        hull = convex_hull_2d(projected)
        if len(hull) >= 3:
            pts = " ".join(f"{fmt(sx(px))},{fmt(sy(py))}" for px, py in hull)
            parts.append(f'<polygon class="hull" points="{pts}" '
                         'fill="#9cf" fill-opacity="0.35" stroke="#36c" stroke-width="1"/>')
    for p in points:
        parts.append(f'<circle class="boundary" cx="{fmt(sx(p[i]))}" '
                     f'cy="{fmt(sy(p[j]))}" r="2.5" fill="#036"/>')
    for p in sources:
        parts.append(f'<circle class="source" cx="{fmt(sx(p[i]))}" '
                     f'cy="{fmt(sy(p[j]))}" r="5" fill="none" '
                     'stroke="#c33" stroke-width="2"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
