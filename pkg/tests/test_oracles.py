import math
import sys

import numpy as np
import pytest

from helpers import point_in_polygon, rotated_rectangle_corners

from failregion.errors import InfeasibleRegionError, InvalidDimensionError, \
    OracleUnavailableError
from failregion.geometry import unit_domain
from failregion.oracles import ExternalProgramOracle, OracleStats, RegionSpec, \
    SimulatedRegionOracle, derive_extents, place_region, unit_ball_volume


class TestUnitBallVolume:
    def test_known_values(self):
        assert unit_ball_volume(1) == pytest.approx(2.0)
        assert unit_ball_volume(2) == pytest.approx(math.pi)
        assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)
        assert unit_ball_volume(4) == pytest.approx(math.pi ** 2 / 2)


class TestDeriveExtents:
    # Independent oracle: edge a = (theta*|D| / delta^(d-1))^(1/d) for
    # rectangles, semi-axis r = (theta*|D| / (V_d delta^(d-1)))^(1/d) for
    # ellipsoids; derive_extents returns half-lengths.

    def test_square_edges(self):
        half = derive_extents("rectangle", 0.001, 1.0, 2)
        edges = 2 * half
        assert edges == pytest.approx([0.0316228, 0.0316228], abs=1e-6)
        assert edges[0] * edges[1] == pytest.approx(0.001, rel=1e-9)

    def test_elongated_rectangle(self):
        edges = 2 * derive_extents("rectangle", 0.001, 10.0, 2)
        assert edges == pytest.approx([0.01, 0.1], rel=1e-9)
        assert edges[0] * edges[1] == pytest.approx(0.001, rel=1e-9)

    def test_circle(self):
        r = derive_extents("ellipse", 0.001, 1.0, 2)
        assert r == pytest.approx([0.0178412, 0.0178412], abs=1e-6)
        assert math.pi * r[0] * r[1] == pytest.approx(0.001, rel=1e-9)

    @pytest.mark.parametrize("shape", ["rectangle", "ellipse"])
    @pytest.mark.parametrize("d", [1, 2, 3, 4])
    @pytest.mark.parametrize("theta,delta", [(0.001, 1.0), (0.005, 10.0), (0.01, 3.0)])
    def test_volume_identity(self, shape, d, theta, delta):
        half = derive_extents(shape, theta, delta, d)
        if shape == "rectangle":
            volume = float(np.prod(2 * half))
        else:
            volume = unit_ball_volume(d) * float(np.prod(half))
        assert volume == pytest.approx(theta, rel=1e-9)
        assert half[1:] == pytest.approx(half[0] * delta)

    def test_infeasible_extent(self):
        with pytest.raises(InfeasibleRegionError):
            derive_extents("rectangle", 0.02, 100.0, 2)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            derive_extents("rectangle", 0.0, 1.0, 2)
        with pytest.raises(ValueError):
            derive_extents("rectangle", 0.5, 0.5, 2)
        with pytest.raises(ValueError):
            derive_extents("pyramid", 0.5, 1.0, 2)


class TestPlaceRegion:
    def test_whole_domain_center_forced(self):
        dom = unit_domain(2)
        rng = np.random.default_rng(3)
        spec = place_region("rectangle", 1.0, 1.0, 0.0, dom, rng)
        assert np.allclose(spec.center, [0.5, 0.5])

    def test_same_seed_same_placement(self):
        dom = unit_domain(3)
        a = place_region("ellipse", 0.001, 10.0, 30.0, dom, np.random.default_rng(11))
        b = place_region("ellipse", 0.001, 10.0, 30.0, dom, np.random.default_rng(11))
        assert np.array_equal(a.center, b.center)

    def test_infeasible_after_rotation(self):
        dom = unit_domain(4)
        rng = np.random.default_rng(0)
        with pytest.raises(InfeasibleRegionError):
            place_region("ellipse", 0.005, 100.0, 0.0, dom, rng)

    @pytest.mark.parametrize("shape,gamma", [("rectangle", 0.0), ("rectangle", 30.0),
                                             ("rectangle", 117.0), ("ellipse", 60.0)])
    def test_thousand_placements_contained(self, shape, gamma):
        # Brute-force containment: rectangle corners (or dense ellipse
        # boundary samples) of the forward-rotated region stay in-domain.
        dom = unit_domain(2)
        rng = np.random.default_rng(42)
        for _ in range(1000):
            spec = place_region(shape, 0.001, 10.0, gamma, dom, rng)
            if shape == "rectangle":
                boundary = rotated_rectangle_corners(spec.center, spec.extents, gamma)
            else:
                ang = np.linspace(0, 2 * math.pi, 64, endpoint=False)
                ring = np.column_stack([spec.extents[0] * np.cos(ang),
                                        spec.extents[1] * np.sin(ang)])
                g = math.radians(gamma)
                rot = np.array([[math.cos(g), -math.sin(g)], [math.sin(g), math.cos(g)]])
                boundary = spec.center + ring @ rot.T
            assert all(dom.contains(p) for p in boundary)

    def test_rotated_bbox_corners_inside(self):
        dom = unit_domain(3)
        rng = np.random.default_rng(5)
        for _ in range(200):
            spec = place_region("rectangle", 0.001, 10.0, 45.0, dom, rng)
            half = spec.bounding_half_widths()
            for mask in range(8):
                corner = spec.center + half * np.array(
                    [1 if mask >> i & 1 else -1 for i in range(3)])
                assert all(dom.lower <= corner) and all(corner <= dom.upper)


def make_spec(shape="rectangle", theta=0.001, delta=1.0, gamma=0.0, d=2, seed=0):
    dom = unit_domain(d)
    return place_region(shape, theta, delta, gamma, dom, np.random.default_rng(seed)), dom


class TestSimulatedRegionOracle:
    def test_center_fails(self):
        spec, _ = make_spec()
        assert SimulatedRegionOracle(spec)(spec.center)

    def test_far_corner_passes(self):
        spec, _ = make_spec()
        oracle = SimulatedRegionOracle(spec)
        corner = np.zeros(2) if np.all(spec.center > 0.5) else np.array([0.999, 0.999])
        assert not oracle(corner)

    def test_deterministic(self):
        spec, dom = make_spec("ellipse", gamma=45.0, delta=10.0)
        oracle = SimulatedRegionOracle(spec)
        pts = dom.sample(np.random.default_rng(1), 200)
        first = [oracle(p) for p in pts]
        assert [oracle(p) for p in pts] == first

    def test_stats_counting(self):
        spec, dom = make_spec(theta=0.05)
        oracle = SimulatedRegionOracle(spec)
        pts = dom.sample(np.random.default_rng(2), 500)
        fails = sum(oracle(p) for p in pts)
        assert oracle.stats.probe_count == 500
        assert oracle.stats.fail_count == fails <= 500

    def test_dimension_mismatch(self):
        spec, _ = make_spec()
        with pytest.raises(InvalidDimensionError):
            SimulatedRegionOracle(spec)([0.5, 0.5, 0.5])

    @pytest.mark.parametrize("gamma", [0.0, 90.0, 180.0])
    def test_axis_aligned_equals_plain_box(self, gamma):
        spec, dom = make_spec("rectangle", delta=10.0, gamma=gamma, seed=7)
        oracle = SimulatedRegionOracle(spec)
        # At these angles the rotated rectangle is axis-aligned; 90
        # degrees swaps the two in-plane extents.
        ext = spec.extents.copy()
        if gamma == 90.0:
            ext[0], ext[1] = ext[1], ext[0]
        pts = dom.sample(np.random.default_rng(3), 20_000)
        for p in pts:
            box = bool(np.all(np.abs(p - spec.center) <= ext))
            assert oracle(p) == box

    def test_rotated_rect_equals_polygon_test(self):
        spec, dom = make_spec("rectangle", delta=10.0, gamma=30.0, seed=8)
        oracle = SimulatedRegionOracle(spec)
        corners = rotated_rectangle_corners(spec.center, spec.extents, 30.0)
        rng = np.random.default_rng(4)
        # Mix domain-wide and near-region points so both verdicts occur.
        pts = np.vstack([dom.sample(rng, 5000),
                         spec.center + rng.uniform(-0.06, 0.06, size=(5000, 2))])
        agree = sum(oracle(p) == point_in_polygon(p, corners, tol=1e-12) for p in pts)
        assert agree == len(pts)

    @pytest.mark.parametrize("shape,delta,gamma,seed",
                             [("rectangle", 1.0, 0.0, 0), ("rectangle", 10.0, 30.0, 1),
                              ("ellipse", 1.0, 0.0, 2), ("ellipse", 10.0, 60.0, 3)])
    def test_monte_carlo_volume(self, shape, delta, gamma, seed):
        # Binomial sampling oracle: the failing fraction of uniform
        # points estimates theta within 3 standard errors.
        theta = 0.001
        spec, dom = make_spec(shape, theta, delta, gamma, seed=seed)
        oracle = SimulatedRegionOracle(spec)
        n = 100_000
        pts = dom.sample(np.random.default_rng(seed + 100), n)
        frac = sum(oracle(p) for p in pts) / n
        bound = 3 * math.sqrt(theta * (1 - theta) / n)
        assert abs(frac - theta) <= bound

    def test_monte_carlo_volume_millions(self):
        theta = 0.001
        spec, dom = make_spec("rectangle", theta, 10.0, 45.0, seed=9)
        oracle = SimulatedRegionOracle(spec)
        n = 1_000_000
        pts = dom.sample(np.random.default_rng(10), n)
        frac = sum(oracle(p) for p in pts) / n
        assert abs(frac - theta) <= 3 * math.sqrt(theta * (1 - theta) / n)


class TestExternalProgramOracle:
    @pytest.fixture
    def threshold_script(self, tmp_path):
        script = tmp_path / "check.py"
        script.write_text("import sys\nsys.exit(1 if float(sys.argv[1]) > 0.5 else 0)\n")
        return f"{sys.executable} {script} {{x1}}"

    def test_exit_code_convention(self, threshold_script):
        oracle = ExternalProgramOracle(threshold_script, 1)
        assert oracle([0.7])
        assert not oracle([0.3])
        assert oracle.stats.probe_count == 2
        assert oracle.stats.fail_count == 1

    def test_stdout_convention(self, tmp_path):
        script = tmp_path / "talk.py"
        script.write_text("import sys\n"
                          "print('FAIL' if float(sys.argv[1]) > 0.5 else 'ok')\n")
        cmd = f"{sys.executable} {script} {{x1}}"
        oracle = ExternalProgramOracle(cmd, 1, fail_convention="stdout")
        assert oracle([0.7])
        assert not oracle([0.3])
        # Same script under the exit-code convention always passes.
        assert not ExternalProgramOracle(cmd, 1)([0.7])

    def test_full_precision_round_trip(self, tmp_path):
        value = 0.1 + 0.2  # 0.30000000000000004, needs all 17 digits
        script = tmp_path / "exact.py"
        script.write_text("import sys\n"
                          f"sys.exit(1 if float(sys.argv[1]) == {value!r} else 0)\n")
        oracle = ExternalProgramOracle(f"{sys.executable} {script} {{x1}}", 1)
        assert oracle([value])

    def test_timeout_counts_as_pass(self, tmp_path, caplog):
        script = tmp_path / "sleepy.py"
        script.write_text("import sys, time\ntime.sleep(5)\nsys.exit(1)\n")
        oracle = ExternalProgramOracle(f"{sys.executable} {script} {{x1}}", 1,
                                       timeout_ms=200)
        with caplog.at_level("WARNING"):
            assert not oracle([0.5])
        assert oracle.timeouts == 1
        assert any("timed out" in r.message for r in caplog.records)

    def test_spawn_failure(self):
        oracle = ExternalProgramOracle("/does/not/exist/prog {x1}", 1)
        with pytest.raises(OracleUnavailableError):
            oracle([0.5])

    def test_missing_placeholder_rejected(self):
        with pytest.raises(ValueError):
            ExternalProgramOracle("prog {x1}", 2)

    def test_bad_convention_rejected(self):
        with pytest.raises(ValueError):
            ExternalProgramOracle("prog {x1}", 1, fail_convention="guess")
