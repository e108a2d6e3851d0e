import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from shapereg import (
    Antitonic,
    BlockProduct,
    ConvergenceFailure,
    ConvexOnDesign,
    DesignPoints,
    FullSpace,
    InvalidArgument,
    Isotonic,
    Unimodal,
    UnimodalSplit,
    UnsupportedOperation,
    kkt_report,
    project,
    project_antitonic,
    project_block_product,
    project_convex,
    project_convex_dykstra,
    project_isotonic,
    project_unimodal,
    project_unimodal_split,
)
from shapereg.experiments import design_equispaced, design_geometric, design_uniform
from shapereg.isotonic import split_objectives

from . import oracles


class TestIsotonic:
    def test_identity_on_sorted(self):
        res = project_isotonic([1, 2, 3])
        assert_array_equal(res.fit, [1, 2, 3])
        assert res.objective == 0.0
        assert res.blocks == [(0, 1), (1, 2), (2, 3)]

    def test_two_points(self):
        assert_allclose(project_isotonic([2, 1]).fit, [1.5, 1.5])

    def test_three_points(self):
        res = project_isotonic([3, 1, 2])
        assert_allclose(res.fit, [2, 2, 2])
        assert res.blocks == [(0, 3)]
        assert_allclose(res.objective, 2.0)

    def test_block_means(self):
        y = np.array([4.0, 1.0, 2.0, 7.0, 5.0, 6.0, 0.5])
        res = project_isotonic(y)
        for s, e in res.blocks:
            assert_allclose(res.fit[s:e], y[s:e].mean())
        assert np.all(np.diff(res.fit) >= 0)

    @pytest.mark.parametrize("bad", [[], [1.0, np.nan], [np.inf]])
    def test_invalid(self, bad):
        with pytest.raises(InvalidArgument):
            project_isotonic(bad)


class TestAntitonic:
    def test_identity(self):
        assert_array_equal(project_antitonic([3, 2, 1]).fit, [3, 2, 1])

    def test_two_points(self):
        assert_allclose(project_antitonic([1, 2]).fit, [1.5, 1.5])

    def test_pool_all(self):
        assert_allclose(project_antitonic([0, 0, 5]).fit, [5 / 3] * 3)

    def test_invalid(self):
        with pytest.raises(InvalidArgument):
            project_antitonic([])


class TestUnimodalSplit:
    def test_feasible_halves(self):
        assert_array_equal(project_unimodal_split([2, 1, 2], 1).fit, [2, 1, 2])

    def test_pooling_prefix(self):
        res = project_unimodal_split([0, 10, 0], 2)
        assert_allclose(res.fit, [5, 5, 0])
        assert_allclose(res.objective, 50.0)

    @pytest.mark.parametrize("m", [0, 1, 2, 3])
    def test_constant(self, m):
        assert_array_equal(project_unimodal_split([1, 1, 1], m).fit, [1, 1, 1])

    @pytest.mark.parametrize("m", [-1, 4])
    def test_out_of_range(self, m):
        with pytest.raises(InvalidArgument):
            project_unimodal_split([1, 2, 3], m)

    def test_objective_is_sum(self):
        y = np.array([3.0, 5.0, 1.0, 2.0, 0.0, 4.0])
        for m in range(7):
            res = project_unimodal_split(y, m)
            a = project_antitonic(y[:m]).objective if m else 0.0
            b = project_isotonic(y[m:]).objective if m < 6 else 0.0
            assert_allclose(res.objective, a + b, rtol=1e-12, atol=1e-15)


class TestUnimodal:
    def test_feasible(self):
        res, m = project_unimodal([3, 1, 4])
        assert_array_equal(res.fit, [3, 1, 4])
        assert m == 1
        assert res.objective == 0.0

    def test_peak(self):
        y = [0.0, 1.0, 0.0]
        res, m = project_unimodal(y)
        objs = [project_unimodal_split(y, k).objective for k in range(4)]
        assert res.objective == min(objs)
        assert m == objs.index(min(objs))
        _, oracle_obj = oracles.project_valley_union(np.array(y))
        assert_allclose(res.objective, oracle_obj, atol=1e-12)

    def test_single(self):
        res, m = project_unimodal([5])
        assert_array_equal(res.fit, [5])
        assert m == 0

    def test_ties_smallest_split(self):
        # every split fits a constant sequence exactly
        _, m = project_unimodal([2.0, 2.0, 2.0, 2.0])
        assert m == 0

    def test_scan_matches_prefix(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            y = rng.normal(size=rng.integers(1, 30))
            assert_allclose(split_objectives(y, "prefix"), split_objectives(y, "scan"), atol=1e-10)

    def test_kkt_unsupported(self):
        with pytest.raises(UnsupportedOperation):
            kkt_report([1.0, 0.0, 1.0], [1.0, 0.0, 1.0], Unimodal(3))


class TestConvex:
    def test_affine_identity(self):
        x = np.array([0.0, 0.3, 1.1, 2.0, 4.5])
        y = 2 * x + 1
        res = project_convex(y, x)
        assert_allclose(res.fit, y, atol=1e-12)
        assert res.blocks == [(0, 5)]

    def test_single_violation(self):
        res = project_convex([0.0, 1.0, 0.0], [0.0, 1.0, 2.0])
        assert_allclose(res.fit, [1 / 3] * 3, atol=1e-12)
        assert res.kkt.certified()

    def test_feasible_geometric(self):
        res = project_convex([0.0, 1.0, 3.0], [-0.5, -0.25, -0.125])
        assert_allclose(res.fit, [0, 1, 3], atol=1e-12)

    @pytest.mark.parametrize("n", [1, 2])
    def test_small_n_identity(self, n):
        y = np.arange(n, dtype=float)[::-1]
        assert_array_equal(project_convex(y, np.arange(n, dtype=float)).fit, y)

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgument):
            project_convex([1.0, 2.0, 3.0], [0.0, 1.0])

    def test_non_increasing_design(self):
        with pytest.raises(InvalidArgument):
            project_convex([1.0, 2.0, 3.0], [0.0, 2.0, 1.0])

    def test_iteration_cap(self):
        rng = np.random.default_rng(0)
        y = rng.normal(size=60)
        with pytest.raises(ConvergenceFailure) as info:
            project_convex(y, np.arange(60.0), max_iter=1)
        assert info.value.iterate is not None
        assert info.value.residuals is not None

    def test_geometric_long_design(self):
        # abscissae underflow, gaps do not
        design = design_geometric(2048, 0.5)
        rng = np.random.default_rng(1)
        y = np.cumsum(rng.normal(size=2048))
        res = project_convex(y, design, certify=False)
        assert np.all(np.isfinite(res.fit))

    def test_valley_shape(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n = int(rng.integers(3, 40))
            res = project_convex(rng.normal(size=n), np.sort(rng.uniform(size=n)) + np.arange(n))
            d = np.diff(res.fit)
            tol = 1e-9 * (1 + np.abs(res.fit).max())
            first_up = np.argmax(d > tol) if np.any(d > tol) else d.size
            assert np.all(d[first_up:] >= -tol)


class TestDykstra:
    def test_halfspace(self):
        res = project_convex_dykstra([0.0, 1.0, 0.0], design_equispaced(3), tol=1e-12)
        assert_allclose(res.fit, [1 / 3] * 3, atol=1e-8)

    def test_feasible_one_sweep(self):
        x = np.arange(6.0)
        y = (x - 2.0) ** 2
        res = project_convex_dykstra(y, x)
        assert_array_equal(res.fit, y)
        assert res.iterations == 1

    def test_agrees_random(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            y = rng.normal(size=8)
            x = design_equispaced(8)
            a = project_convex(y, x).fit
            b = project_convex_dykstra(y, x, relaxation=1.99).fit
            assert np.linalg.norm(a - b) <= 1e-7

    def test_plain_dykstra_small(self):
        y = np.array([0.0, 2.0, -1.0, 3.0, 0.5, 1.0])
        x = design_equispaced(6)
        a = project_convex(y, x).fit
        b = project_convex_dykstra(y, x, polish=False).fit
        assert np.linalg.norm(a - b) <= 1e-7

    def test_cap(self):
        rng = np.random.default_rng(5)
        with pytest.raises(ConvergenceFailure):
            project_convex_dykstra(rng.normal(size=40), design_uniform(40), max_iter=1, polish=False)

    @pytest.mark.parametrize("kw", [{"tol": 0.0}, {"max_iter": 0}])
    def test_bad_args(self, kw):
        with pytest.raises(InvalidArgument):
            project_convex_dykstra([0.0, 1.0, 0.0], [0.0, 1.0, 2.0], **kw)


class TestBlockProduct:
    def test_single_block(self):
        g = np.array([3.0, 1.0, 2.0, 0.0])
        out = project_block_product(g, [((0, 4), Isotonic(4))])
        assert_array_equal(out, project_isotonic(g).fit)

    def test_two_blocks(self):
        out = project_block_product([2, 1, 5, 4], [((0, 2), Isotonic(2)), ((2, 4), Isotonic(2))])
        assert_allclose(out, [1.5, 1.5, 4.5, 4.5])

    def test_free_blocks(self):
        g = np.array([0.3, -2.0, 5.0])
        out = project_block_product(g, [((i, i + 1), FullSpace(1)) for i in range(3)])
        assert_array_equal(out, g)

    @pytest.mark.parametrize(
        "partition",
        [
            [((0, 2), Isotonic(2))],
            [((0, 2), Isotonic(2)), ((1, 4), Isotonic(3))],
            [((0, 2), Isotonic(2)), ((2, 4), Isotonic(3))],
        ],
    )
    def test_not_partition(self, partition):
        with pytest.raises(InvalidArgument):
            project_block_product([1.0, 2.0, 3.0, 4.0], partition)

    def test_project_dispatch(self):
        g = np.array([2.0, 1.0, 5.0, 4.0])
        res = project(g, BlockProduct((Isotonic(2), Antitonic(2))))
        assert_allclose(res.fit, [1.5, 1.5, 5, 4])
        assert res.kkt.certified()


class TestKkt:
    def test_pava_certified(self):
        rng = np.random.default_rng(6)
        y = rng.normal(size=50)
        res = project_isotonic(y)
        assert res.kkt.max_residual() <= 1e-9

    def test_feasible_zero(self):
        y = np.array([0.0, 1.0, 1.0, 3.0])
        rep = kkt_report(y, y, Isotonic(4))
        assert rep.max_residual() == 0.0
        assert rep.polar_inner_product == 0.0

    def test_perturbed(self):
        rng = np.random.default_rng(7)
        y = rng.normal(size=20)
        fit = project_isotonic(y).fit.copy()
        fit[10] += 0.1
        rep = kkt_report(y, fit, Isotonic(20))
        assert rep.max_residual() > 0.05

    def test_convex_perturbed(self):
        x = np.arange(5.0)
        y = np.array([0.0, 1.0, 0.0, 2.0, 1.0])
        fit = project_convex(y, x).fit.copy()
        fit[2] += 0.1
        assert kkt_report(y, fit, ConvexOnDesign(x)).max_residual() > 0.05

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgument):
            kkt_report([1.0, 2.0], [1.0, 2.0], Isotonic(3))


class TestDesign:
    def test_log_gaps_match(self):
        d = DesignPoints([0.0, 1.0, 3.0])
        assert_allclose(d.gap_ratios(), [2.0])
        assert_allclose(d.local_coords(), [0, 1 / 3, 1])

    def test_geometric_gaps(self):
        d = design_geometric(3, 0.5)
        assert_allclose(d.x, [-0.5, -0.25, -0.125])
        assert_allclose(d.gap_ratios(), [0.5])


class TestBruteForce:
    """Every projection against the enumeration oracle, n <= 6."""

    @pytest.mark.parametrize("seed", range(10))
    def test_small(self, seed):
        rng = np.random.default_rng(100 + seed)
        n = int(rng.integers(1, 7))
        y = rng.normal(size=n) * rng.choice([0.1, 1.0, 10.0])
        x = np.sort(rng.uniform(-2, 2, size=n))
        while n > 1 and np.min(np.diff(x)) < 1e-3:
            x = np.sort(rng.uniform(-2, 2, size=n))
        assert np.linalg.norm(project_isotonic(y).fit - oracles.project_polyhedral(y, oracles.isotonic_rows(n))[0]) <= 1e-7
        assert np.linalg.norm(project_antitonic(y).fit - oracles.project_polyhedral(y, oracles.antitonic_rows(n))[0]) <= 1e-7
        assert np.linalg.norm(project_convex(y, x).fit - oracles.project_polyhedral(y, oracles.convex_rows(x))[0]) <= 1e-7
        res, _ = project_unimodal(y)
        fit, obj = oracles.project_valley_union(y)
        assert abs(res.objective - obj) <= 1e-9 * (1 + y @ y)
        for m in range(n + 1):
            ofit, _ = oracles.project_free_split(y, m)
            assert np.linalg.norm(project_unimodal_split(y, m).fit - ofit) <= 1e-7

    def test_union_equivalence(self):
        # free splits and shared-vertex valley cones give the same union
        rng = np.random.default_rng(9)
        for _ in range(40):
            y = rng.normal(size=int(rng.integers(1, 7)))
            free = min(oracles.project_free_split(y, m)[1] for m in range(y.size + 1))
            shared = oracles.project_valley_union(y)[1]
            assert abs(free - shared) <= 1e-10
